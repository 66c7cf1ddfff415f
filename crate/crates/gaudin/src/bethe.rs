//! Bethe Ansatz equations with an irregular singularity at infinity, a
//! multistart damped-Newton solver, Bethe-vector construction, eigenvector
//! verification and a completeness census.
//!
//! Sign convention, fixed once and used everywhere: solutions of the Bethe
//! system of a problem with parameter chi are joint eigenvectors of the
//! shifted Hamiltonians built with `operator_chi(chi) = -chi`. See
//! [`operator_chi`].

use crate::error::{GaudinError, Result};
use crate::hamiltonians::WeightOperator;
use crate::liealg::SimpleLieAlgebra;
use crate::linalg::solve_c64;
use crate::rational::{q_to_f64, C64, Q};
use crate::repr::TensorSpace;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Solver tolerances.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub dedup_radius: f64,
    pub separation_floor: f64,
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-10,
            dedup_radius: 1e-6,
            separation_floor: 1e-8,
            eigen: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Tolerances {
            residual: self.residual * s,
            dedup_radius: self.dedup_radius * s,
            separation_floor: self.separation_floor * s,
            eigen: self.eigen * s,
        }
    }
}

/// Marked points, highest weights, chi and a simple-root coloring.
#[derive(Clone, Debug)]
pub struct BetheProblem {
    pub g: SimpleLieAlgebra,
    pub z: Vec<C64>,
    /// highest weights as coroot pairings
    pub weights: Vec<Vec<Q>>,
    /// chi in h*, as coroot pairings
    pub chi: Vec<Q>,
    /// simple-root index attached to each auxiliary point
    pub coloring: Vec<usize>,
}

impl BetheProblem {
    pub fn new(
        g: &SimpleLieAlgebra,
        z: Vec<C64>,
        weights: Vec<Vec<Q>>,
        chi: Vec<Q>,
        coloring: Vec<usize>,
    ) -> Result<Self> {
        if weights.len() != z.len() {
            return Err(GaudinError::ArityMismatch(weights.len(), z.len()));
        }
        for i in 0..z.len() {
            for j in (i + 1)..z.len() {
                if (z[i] - z[j]).norm() < 1e-12 {
                    return Err(GaudinError::CoincidentPoints);
                }
            }
        }
        if coloring.iter().any(|&c| c >= g.rank) {
            return Err(GaudinError::Parse("coloring index out of range".into()));
        }
        Ok(BetheProblem { g: g.clone(), z, weights, chi, coloring })
    }

    pub fn num_aux(&self) -> usize {
        self.coloring.len()
    }

    /// Target weight `sum lambda_i - sum alpha_{i_j}` (coroot pairings).
    pub fn target_weight(&self) -> Vec<Q> {
        let mut w = vec![Q::zero(); self.g.rank];
        for lam in &self.weights {
            for i in 0..self.g.rank {
                w[i] += &lam[i];
            }
        }
        for &c in &self.coloring {
            for i in 0..self.g.rank {
                w[i] -= Q::from(num::BigInt::from(self.g.cartan[i][c]));
            }
        }
        w
    }

    /// `<alpha_ij^vee, lambda_i>` as floats.
    fn pairing_lw(&self, j: usize, i: usize) -> f64 {
        q_to_f64(&self.weights[i][self.coloring[j]])
    }

    fn pairing_aa(&self, j: usize, s: usize) -> f64 {
        self.g.cartan[self.coloring[j]][self.coloring[s]] as f64
    }

    fn pairing_chi(&self, j: usize) -> f64 {
        q_to_f64(&self.chi[self.coloring[j]])
    }

    /// Left-hand sides of the Bethe system,
    /// `sum_i <a_j^vee, lambda_i>/(w_j - z_i)
    ///  - sum_{s != j} <a_j^vee, a_s>/(w_j - w_s) - <a_j^vee, chi>`.
    pub fn equations(&self, w: &[C64]) -> Vec<C64> {
        let m = self.num_aux();
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let mut f = C64::new(-self.pairing_chi(j), 0.0);
            for i in 0..self.z.len() {
                f += self.pairing_lw(j, i) / (w[j] - self.z[i]);
            }
            for s in 0..m {
                if s != j {
                    f -= self.pairing_aa(j, s) / (w[j] - w[s]);
                }
            }
            out.push(f);
        }
        out
    }

    /// Per-equation absolute residuals. Rejects configurations that collide
    /// below the separation floor.
    pub fn residual(&self, w: &[C64], tol: &Tolerances) -> Result<Vec<f64>> {
        self.check_separation(w, tol)?;
        Ok(self.equations(w).into_iter().map(|x| x.norm()).collect())
    }

    fn check_separation(&self, w: &[C64], tol: &Tolerances) -> Result<()> {
        for j in 0..w.len() {
            for i in 0..self.z.len() {
                if (w[j] - self.z[i]).norm() < tol.separation_floor {
                    return Err(GaudinError::Collision(format!("w_{j} ~ z_{i}")));
                }
            }
            for s in (j + 1)..w.len() {
                if (w[j] - w[s]).norm() < tol.separation_floor {
                    return Err(GaudinError::Collision(format!("w_{j} ~ w_{s}")));
                }
            }
        }
        Ok(())
    }

    fn jacobian(&self, w: &[C64]) -> Vec<Vec<C64>> {
        let m = self.num_aux();
        let mut jac = vec![vec![C64::new(0.0, 0.0); m]; m];
        for j in 0..m {
            let mut diag = C64::new(0.0, 0.0);
            for i in 0..self.z.len() {
                let d = w[j] - self.z[i];
                diag -= self.pairing_lw(j, i) / (d * d);
            }
            for s in 0..m {
                if s == j {
                    continue;
                }
                let d = w[j] - w[s];
                let t = self.pairing_aa(j, s) / (d * d);
                diag += t;
                jac[j][s] = -t;
            }
            jac[j][j] = diag;
        }
        jac
    }
}

/// The chi with which shifted Hamiltonians must be built so that the Bethe
/// vectors of a problem with parameter chi are their eigenvectors.
pub fn operator_chi(chi: &[Q]) -> Vec<Q> {
    chi.iter().map(|c| -c.clone()).collect()
}

/// A solved w-configuration (one representative per permutation class).
#[derive(Clone, Debug)]
pub struct BetheSolution {
    pub w: Vec<C64>,
    pub residual: Vec<f64>,
    pub min_sep_ww: f64,
    pub min_sep_wz: f64,
    /// Newton Jacobian nearly singular at the solution
    pub degenerate: bool,
    pub class_id: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStrategy {
    /// perturbative large-chi seeds + random seeds
    Multistart { random_starts: usize },
    /// continuation in chi from the large-chi regime, plus multistart
    Homotopy { steps: usize, random_starts: usize },
}

impl Default for SolveStrategy {
    fn default() -> Self {
        SolveStrategy::Multistart { random_starts: 64 }
    }
}

/// Solver diagnostics: every failure mode is reported, never thrown.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveDiagnostics {
    pub attempts: usize,
    pub converged: usize,
    pub duplicates: usize,
    pub rejected_separation: usize,
    pub no_convergence: usize,
}

pub struct SolveOutcome {
    pub solutions: Vec<BetheSolution>,
    pub diagnostics: SolveDiagnostics,
}

/// Deduplicated solution list; the empty coloring yields the unique empty
/// solution.
pub fn solve(
    problem: &BetheProblem,
    strategy: SolveStrategy,
    seed: u64,
    tol: &Tolerances,
) -> Result<SolveOutcome> {
    crate::liealg::check_regular_weight(
        &problem.g,
        &crate::liealg::WeightForm::new(&problem.g, &crate::liealg::InvariantForm::trace_form(&problem.g))?,
        &problem.chi,
    )?;
    let m = problem.num_aux();
    let mut diagnostics = SolveDiagnostics::default();
    if m == 0 {
        return Ok(SolveOutcome {
            solutions: vec![BetheSolution {
                w: vec![],
                residual: vec![],
                min_sep_ww: f64::INFINITY,
                min_sep_wz: f64::INFINITY,
                degenerate: false,
                class_id: 0,
            }],
            diagnostics,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Vec<C64>> = Vec::new();

    // (a) large-chi perturbative seeds: each auxiliary point sits near one
    // of the marked points, w ~ z_i + <a^vee, lambda_i>/<a^vee, chi>
    let n = problem.z.len();
    let mut assign = vec![0usize; m];
    loop {
        let mut w = Vec::with_capacity(m);
        let mut counts = vec![0usize; n];
        for j in 0..m {
            let i = assign[j];
            let denom = problem.pairing_chi(j);
            let base = if denom.abs() > 1e-12 {
                problem.z[i] + problem.pairing_lw(j, i) / denom
            } else {
                problem.z[i] + C64::new(1.0, 0.0)
            };
            // deterministic jitter to separate same-color seeds at one point
            let k = counts[i] as f64;
            counts[i] += 1;
            w.push(base + C64::new(0.37 * k, 0.23 * k) * base.norm().max(1.0) * 0.1);
        }
        seeds.push(w);
        // next assignment
        let mut carry = 0;
        loop {
            if carry == m {
                break;
            }
            assign[carry] += 1;
            if assign[carry] < n {
                break;
            }
            assign[carry] = 0;
            carry += 1;
        }
        if carry == m {
            break;
        }
    }

    let spread = problem
        .z
        .iter()
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let random_starts = match strategy {
        SolveStrategy::Multistart { random_starts } => random_starts,
        SolveStrategy::Homotopy { random_starts, .. } => random_starts,
    };
    for _ in 0..random_starts {
        let w: Vec<C64> = (0..m)
            .map(|_| {
                C64::new(
                    rng.gen_range(-2.0 * spread..2.0 * spread),
                    rng.gen_range(-2.0 * spread..2.0 * spread),
                )
            })
            .collect();
        seeds.push(w);
    }

    let mut accepted: Vec<BetheSolution> = Vec::new();
    let mut try_candidate = |w: Vec<C64>, diagnostics: &mut SolveDiagnostics| {
        diagnostics.attempts += 1;
        match newton_polish(problem, &w, tol, 80) {
            Some(wn) => {
                if wn.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    diagnostics.no_convergence += 1;
                    return;
                }
                if problem.check_separation(&wn, tol).is_err() {
                    diagnostics.rejected_separation += 1;
                    return;
                }
                diagnostics.converged += 1;
                if accepted.iter().any(|s| same_class(problem, &s.w, &wn, tol)) {
                    diagnostics.duplicates += 1;
                    return;
                }
                let res = problem.equations(&wn).iter().map(|x| x.norm()).collect();
                let (ww, wz) = separations(problem, &wn);
                let degenerate = jacobian_degenerate(problem, &wn);
                accepted.push(BetheSolution {
                    w: wn,
                    residual: res,
                    min_sep_ww: ww,
                    min_sep_wz: wz,
                    degenerate,
                    class_id: 0,
                });
            }
            None => diagnostics.no_convergence += 1,
        }
    };

    if let SolveStrategy::Homotopy { steps, .. } = strategy {
        // follow solutions from c*chi with large c down to chi
        let factors: Vec<f64> = (0..=steps)
            .map(|k| 8.0_f64.powf(1.0 - k as f64 / steps as f64))
            .collect();
        for seed_w in seeds.clone() {
            let mut w = seed_w;
            let mut ok = true;
            for &c in &factors {
                let scaled = BetheProblem {
                    chi: problem.chi.iter().map(|x| x * crate::rational::q_from_f64(c).unwrap()).collect(),
                    ..problem.clone()
                };
                match newton_polish(&scaled, &w, tol, 80) {
                    Some(wn) => w = wn,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                try_candidate(w, &mut diagnostics);
            }
        }
    }
    for w in seeds {
        try_candidate(w, &mut diagnostics);
    }

    // deterministic order: by sorted (color, re, im) signature
    accepted.sort_by(|a, b| {
        let ka = class_signature(problem, &a.w);
        let kb = class_signature(problem, &b.w);
        ka.partial_cmp(&kb).unwrap()
    });
    for (i, s) in accepted.iter_mut().enumerate() {
        s.class_id = i;
    }
    Ok(SolveOutcome { solutions: accepted, diagnostics })
}

fn newton_polish(
    problem: &BetheProblem,
    w0: &[C64],
    tol: &Tolerances,
    max_iter: usize,
) -> Option<Vec<C64>> {
    let mut w = w0.to_vec();
    let norm = |f: &[C64]| {
        let mut m = 0.0f64;
        for x in f {
            let v = x.norm();
            if !v.is_finite() {
                return f64::INFINITY;
            }
            m = m.max(v);
        }
        m
    };
    if w.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return None;
    }
    let mut res = norm(&problem.equations(&w));
    for _ in 0..max_iter {
        if res <= tol.residual {
            // drive towards machine precision: downstream oper residues are
            // linear in the residual, so cheap extra steps pay off
            for _ in 0..3 {
                let jac = problem.jacobian(&w);
                let f = problem.equations(&w);
                let Ok(step) = solve_c64(&jac, &f) else { break };
                let cand: Vec<C64> = w.iter().zip(&step).map(|(x, s)| x - s).collect();
                let r = norm(&problem.equations(&cand));
                if r.is_finite() && r < res {
                    w = cand;
                    res = r;
                } else {
                    break;
                }
            }
            return Some(w);
        }
        if !res.is_finite() {
            return None;
        }
        let jac = problem.jacobian(&w);
        let f = problem.equations(&w);
        let step = solve_c64(&jac, &f).ok()?;
        // damped update
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let cand: Vec<C64> = w.iter().zip(&step).map(|(x, s)| x - t * s).collect();
            let r = norm(&problem.equations(&cand));
            if r.is_finite() && r < res {
                w = cand;
                res = r;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    if res <= tol.residual {
        Some(w)
    } else {
        None
    }
}

fn separations(problem: &BetheProblem, w: &[C64]) -> (f64, f64) {
    let mut ww = f64::INFINITY;
    let mut wz = f64::INFINITY;
    for j in 0..w.len() {
        for s in (j + 1)..w.len() {
            ww = ww.min((w[j] - w[s]).norm());
        }
        for z in &problem.z {
            wz = wz.min((w[j] - z).norm());
        }
    }
    (ww, wz)
}

fn jacobian_degenerate(problem: &BetheProblem, w: &[C64]) -> bool {
    let jac = problem.jacobian(w);
    let m = w.len();
    // LU determinant estimate
    let mut a = jac;
    let mut det = C64::new(1.0, 0.0);
    for c in 0..m {
        let mut p = c;
        let mut max = -1.0f64;
        for i in c..m {
            let v = a[i][c].norm();
            if v.is_finite() && v > max {
                p = i;
                max = v;
            }
        }
        if !(max > 1e-10) {
            return true;
        }
        a.swap(c, p);
        det *= a[c][c];
        for i in (c + 1)..m {
            let f = a[i][c] / a[c][c];
            for j in c..m {
                let v = a[c][j];
                a[i][j] -= f * v;
            }
        }
    }
    det.norm() < 1e-8
}

/// Within-color multiset comparison at the dedup radius.
fn same_class(problem: &BetheProblem, a: &[C64], b: &[C64], tol: &Tolerances) -> bool {
    for color in 0..problem.g.rank {
        let ai: Vec<C64> = a
            .iter()
            .zip(&problem.coloring)
            .filter(|(_, &c)| c == color)
            .map(|(w, _)| *w)
            .collect();
        let bi: Vec<C64> = b
            .iter()
            .zip(&problem.coloring)
            .filter(|(_, &c)| c == color)
            .map(|(w, _)| *w)
            .collect();
        if ai.len() != bi.len() {
            return false;
        }
        // greedy matching, fine at the radii we use
        let mut used = vec![false; bi.len()];
        for x in &ai {
            let mut found = false;
            for (k, y) in bi.iter().enumerate() {
                if !used[k] && (x - y).norm() <= tol.dedup_radius {
                    used[k] = true;
                    found = true;
                    break;
                }
            }
            if !found {
                return false;
            }
        }
    }
    true
}

fn class_signature(problem: &BetheProblem, w: &[C64]) -> Vec<(usize, i64, i64)> {
    let mut sig: Vec<(usize, i64, i64)> = w
        .iter()
        .zip(&problem.coloring)
        .map(|(x, &c)| (c, (x.re * 1e5).round() as i64, (x.im * 1e5).round() as i64))
        .collect();
    sig.sort();
    sig
}

/// A Bethe vector in the tensor product of irreducibles.
#[derive(Clone, Debug)]
pub struct BetheVector {
    pub coeffs: Vec<C64>,
    pub weight: Vec<i64>,
    pub is_zero: bool,
}

/// Build the Bethe vector: sum over ordered partitions of the auxiliary
/// points into chains attached to the marked points, with consecutive-
/// difference denominators terminating at the marked point.
pub fn bethe_vector(
    problem: &BetheProblem,
    solution: &BetheSolution,
    t: &TensorSpace,
) -> Result<BetheVector> {
    let m = problem.num_aux();
    let n = t.arity();
    if problem.z.len() != n {
        return Err(GaudinError::ArityMismatch(problem.z.len(), n));
    }
    let g = &t.factors[0].g;
    let mut coeffs = vec![C64::new(0.0, 0.0); t.dim];

    // distribute positions 1..m over sites in every order: recursively pick,
    // for each site in turn, an ordered sequence of the remaining points
    let mut chains: Vec<Vec<usize>> = vec![Vec::new(); n];
    fn rec(
        problem: &BetheProblem,
        solution: &BetheSolution,
        t: &TensorSpace,
        g: &SimpleLieAlgebra,
        chains: &mut Vec<Vec<usize>>,
        remaining: &mut Vec<usize>,
        site: usize,
        coeffs: &mut Vec<C64>,
    ) {
        let n = t.arity();
        if site == n {
            if !remaining.is_empty() {
                return;
            }
            // evaluate this partition
            let mut denom = C64::new(1.0, 0.0);
            let mut fvecs: Vec<Vec<C64>> = Vec::with_capacity(n);
            for (k, chain) in chains.iter().enumerate() {
                // chain = (j_1, ..., j_a): denominators (w_{j1}-w_{j2})...(w_{ja}-z_k)
                for idx in 0..chain.len() {
                    let a = solution.w[chain[idx]];
                    let b = if idx + 1 < chain.len() {
                        solution.w[chain[idx + 1]]
                    } else {
                        problem.z[k]
                    };
                    denom *= a - b;
                }
                // apply f-word to the highest weight vector, rightmost first
                let f = &t.factors[k];
                let mut v = vec![C64::new(0.0, 0.0); f.dim];
                v[f.highest_index()] = C64::new(1.0, 0.0);
                for &j in chain.iter().rev() {
                    let color = problem.coloring[j];
                    let root_idx = g
                        .positive_root_index(
                            &(0..g.rank)
                                .map(|i| if i == color { 1 } else { 0 })
                                .collect::<Vec<_>>(),
                        )
                        .unwrap();
                    let fm = &f.matrices[g.rank + g.num_positive_roots() + root_idx];
                    let mut nv = vec![C64::new(0.0, 0.0); f.dim];
                    for (col, x) in v.iter().enumerate() {
                        if x.norm_sqr() == 0.0 {
                            continue;
                        }
                        for row in 0..f.dim {
                            let e = &fm[(row, col)];
                            if !e.is_zero() {
                                nv[row] += q_to_f64(e) * x;
                            }
                        }
                    }
                    v = nv;
                }
                fvecs.push(v);
            }
            // tensor-assemble
            let scale = C64::new(1.0, 0.0) / denom;
            let mut idxs = vec![0usize; n];
            loop {
                let mut val = scale;
                for (k, &c) in idxs.iter().enumerate() {
                    val *= fvecs[k][c];
                }
                if val.norm_sqr() > 0.0 {
                    coeffs[t.index_from_components(&idxs)] += val;
                }
                // increment
                let mut k = 0;
                loop {
                    if k == n {
                        return;
                    }
                    idxs[k] += 1;
                    if idxs[k] < t.factors[k].dim {
                        break;
                    }
                    idxs[k] = 0;
                    k += 1;
                }
            }
        } else {
            // choose an ordered chain for this site: any subsequence of
            // remaining in any order; enumerate by repeatedly appending
            // one of the remaining points or closing the site
            rec_site(problem, solution, t, g, chains, remaining, site, coeffs);
        }
    }
    fn rec_site(
        problem: &BetheProblem,
        solution: &BetheSolution,
        t: &TensorSpace,
        g: &SimpleLieAlgebra,
        chains: &mut Vec<Vec<usize>>,
        remaining: &mut Vec<usize>,
        site: usize,
        coeffs: &mut Vec<C64>,
    ) {
        // close the site
        rec(problem, solution, t, g, chains, remaining, site + 1, coeffs);
        // or extend its chain with one of the remaining points
        for i in 0..remaining.len() {
            let j = remaining.remove(i);
            chains[site].push(j);
            rec_site(problem, solution, t, g, chains, remaining, site, coeffs);
            chains[site].pop();
            remaining.insert(i, j);
        }
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    rec(problem, solution, t, g, &mut chains, &mut remaining, 0, &mut coeffs);

    // target weight and zero detection
    let tw_q = problem.target_weight();
    let weight: Vec<i64> = tw_q
        .iter()
        .map(|x| {
            use num::ToPrimitive;
            assert!(x.is_integer());
            x.to_integer().to_i64().unwrap()
        })
        .collect();
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    // support lies in the target block, by construction; enforce it
    for (i, c) in coeffs.iter().enumerate() {
        if c.norm() > 1e-9 * norm.max(1.0) && t.weight_of[i] != weight {
            return Err(GaudinError::Numerical(
                "Bethe vector escapes its weight block".into(),
            ));
        }
    }
    Ok(BetheVector { coeffs, weight, is_zero: norm < 1e-12 })
}

/// Result of checking one vector against one operator family member.
#[derive(Clone, Debug, Serialize)]
pub struct EigenCheckEntry {
    pub provenance: String,
    pub eigenvalue: (f64, f64),
    pub rel_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenCheck {
    pub entries: Vec<EigenCheckEntry>,
    pub zero_vector: bool,
    pub passed: bool,
}

/// Verify `H phi = mu phi` for every operator, with mu the least-squares
/// eigenvalue. Operators must be built with the same z and with
/// `operator_chi(problem.chi)`.
pub fn eigen_check(
    vector: &BetheVector,
    operator_families: &[&[WeightOperator]],
    t: &TensorSpace,
    tol: &Tolerances,
) -> Result<EigenCheck> {
    if vector.is_zero {
        return Ok(EigenCheck { entries: vec![], zero_vector: true, passed: false });
    }
    let block = t
        .blocks
        .get(&vector.weight)
        .ok_or_else(|| GaudinError::Numerical("weight block missing".into()))?;
    let phi: Vec<C64> = block.iter().map(|&i| vector.coeffs[i]).collect();
    let nrm2: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
    let mut entries = Vec::new();
    let mut passed = true;
    for family in operator_families {
        let op = family
            .iter()
            .find(|o| o.weight == vector.weight)
            .ok_or(GaudinError::BlockMismatch)?;
        let mf = op.matrix.to_f64();
        let n = phi.len();
        let mut hphi = vec![C64::new(0.0, 0.0); n];
        for r in 0..n {
            for c in 0..n {
                let e = mf[(r, c)];
                if e != 0.0 {
                    hphi[r] += e * phi[c];
                }
            }
        }
        let mu: C64 = phi
            .iter()
            .zip(&hphi)
            .map(|(p, h)| p.conj() * h)
            .sum::<C64>()
            / nrm2;
        let res: f64 = hphi
            .iter()
            .zip(&phi)
            .map(|(h, p)| (h - mu * p).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / nrm2.sqrt();
        if res > tol.eigen {
            passed = false;
        }
        entries.push(EigenCheckEntry {
            provenance: op.provenance.clone(),
            eigenvalue: (mu.re, mu.im),
            rel_residual: res,
        });
    }
    Ok(EigenCheck { entries, zero_vector: false, passed })
}

/// Census of one weight block.
#[derive(Clone, Debug, Serialize)]
pub struct BlockCensus {
    pub weight: Vec<i64>,
    pub coloring: Vec<usize>,
    pub block_dimension: usize,
    pub solution_classes: usize,
    pub matched_eigenvectors: usize,
    pub zero_vectors: usize,
    pub solver_incomplete: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub blocks: Vec<BlockCensus>,
    pub total_classes: usize,
    pub total_dimension: usize,
    pub total_matched: usize,
}

/// Enumerate, for every weight block of the tensor product, the (unique)
/// coloring multiset with that target weight, solve the Bethe system, build
/// the vectors and check them against the supplied operator families.
#[allow(clippy::too_many_arguments)]
pub fn census(
    g: &SimpleLieAlgebra,
    t: &TensorSpace,
    z: &[C64],
    weights: &[Vec<Q>],
    chi: &[Q],
    operator_families: &[&[WeightOperator]],
    seed: u64,
    tol: &Tolerances,
) -> Result<CensusReport> {
    let mut blocks = Vec::new();
    let cartan_q = crate::linalg::QMat::from_rows(
        (0..g.rank)
            .map(|i| (0..g.rank).map(|j| Q::from(num::BigInt::from(g.cartan[i][j]))).collect())
            .collect(),
    );
    for (w, idxs) in &t.blocks {
        // solve lambda_total - w = sum k_c alpha_c for the color counts
        let mut total = vec![Q::zero(); g.rank];
        for lam in weights {
            for i in 0..g.rank {
                total[i] += &lam[i];
            }
        }
        let rhs: Vec<Q> = total
            .iter()
            .zip(w)
            .map(|(tq, &wi)| tq - Q::from(num::BigInt::from(wi)))
            .collect();
        let k = cartan_q.solve(&rhs)?;
        let mut coloring = Vec::new();
        let mut valid = true;
        for (c, kc) in k.iter().enumerate() {
            use num::ToPrimitive;
            if !kc.is_integer() {
                valid = false;
                break;
            }
            let kk = kc.to_integer().to_i64().unwrap();
            if kk < 0 {
                valid = false;
                break;
            }
            for _ in 0..kk {
                coloring.push(c);
            }
        }
        if !valid {
            continue;
        }
        let problem = BetheProblem::new(g, z.to_vec(), weights.to_vec(), chi.to_vec(), coloring.clone())?;
        let outcome = solve(&problem, SolveStrategy::default(), seed, tol)?;
        let mut matched = 0;
        let mut zeros = 0;
        for s in &outcome.solutions {
            let v = bethe_vector(&problem, s, t)?;
            if v.is_zero {
                zeros += 1;
                continue;
            }
            let check = eigen_check(&v, operator_families, t, tol)?;
            if check.passed {
                matched += 1;
            }
        }
        blocks.push(BlockCensus {
            weight: w.clone(),
            coloring,
            block_dimension: idxs.len(),
            solution_classes: outcome.solutions.len(),
            matched_eigenvectors: matched,
            zero_vectors: zeros,
            solver_incomplete: outcome.diagnostics.no_convergence > 0
                && outcome.solutions.is_empty(),
        });
    }
    let total_classes = blocks.iter().map(|b| b.solution_classes).sum();
    let total_dimension = blocks.iter().map(|b| b.block_dimension).sum();
    let total_matched = blocks.iter().map(|b| b.matched_eigenvectors).sum();
    Ok(CensusReport { blocks, total_classes, total_dimension, total_matched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::PhaseSpace;
    use crate::hamiltonians::{dmt, gaudin_shifted};
    use crate::rational::{q, qi};
    use crate::repr::{build_irrep, Site};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn a1_problem(chi_val: Q, coloring: Vec<usize>) -> (BetheProblem, TensorSpace, PhaseSpace) {
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let v1 = build_irrep(&g, &[1]).unwrap();
        let t = TensorSpace::new(vec![v1.clone(), v1]).unwrap();
        let ps = PhaseSpace::new(&g, 2).unwrap();
        let p = BetheProblem::new(
            &g,
            vec![c(0.0), c(1.0)],
            vec![vec![qi(1)], vec![qi(1)]],
            vec![chi_val],
            coloring,
        )
        .unwrap();
        (p, t, ps)
    }

    #[test]
    fn residual_of_linear_one_mode_solution() {
        // N = 1, m = 1: w = <a^vee,lambda>/<a^vee,chi> solves exactly
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let p = BetheProblem::new(&g, vec![c(0.0)], vec![vec![qi(3)]], vec![q(3, 2)], vec![0])
            .unwrap();
        let w = vec![c(2.0)]; // 3 / (3/2)
        let tol = Tolerances::default();
        let r = p.residual(&w, &tol).unwrap();
        assert!(r[0] < 1e-14);
        // collisions are rejected
        assert!(p.residual(&[c(1e-12)], &tol).is_err());
    }

    #[test]
    fn quadratic_instance_two_classes() {
        // 1/w + 1/(w-1) = c has two roots; oracle: the quadratic formula
        let chi = q(7, 5);
        let (p, _, _) = a1_problem(chi.clone(), vec![0]);
        let tol = Tolerances::default();
        let out = solve(&p, SolveStrategy::default(), 42, &tol).unwrap();
        assert_eq!(out.solutions.len(), 2);
        let cf = q_to_f64(&chi);
        let disc = (cf + 2.0) * (cf + 2.0) - 4.0 * cf;
        let mut expect = vec![
            ((cf + 2.0) + disc.sqrt()) / (2.0 * cf),
            ((cf + 2.0) - disc.sqrt()) / (2.0 * cf),
        ];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got: Vec<f64> = out.solutions.iter().map(|s| s.w[0].re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
        // homotopy strategy finds the same classes
        let out2 = solve(&p, SolveStrategy::Homotopy { steps: 6, random_starts: 16 }, 42, &tol)
            .unwrap();
        assert_eq!(out2.solutions.len(), 2);
    }

    #[test]
    fn empty_coloring_is_the_empty_solution() {
        let (p, _, _) = a1_problem(qi(2), vec![]);
        let out = solve(&p, SolveStrategy::default(), 1, &Tolerances::default()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        assert!(out.solutions[0].w.is_empty());
    }

    #[test]
    fn large_chi_asymptotics() {
        // one solution near each z_i with w ~ z_i + <a^vee,lambda_i>/<a^vee,chi>
        let (p, _, _) = a1_problem(qi(40), vec![0]);
        let out = solve(&p, SolveStrategy::default(), 9, &Tolerances::default()).unwrap();
        assert_eq!(out.solutions.len(), 2);
        let predicted = [c(0.0) + 1.0 / 40.0, c(1.0) + 1.0 / 40.0];
        for pr in predicted {
            assert!(
                out.solutions.iter().any(|s| (s.w[0] - pr).norm() < 5e-3),
                "no solution near {pr}"
            );
        }
    }

    #[test]
    fn non_regular_chi_rejected() {
        let (p, _, _) = a1_problem(qi(0), vec![0]);
        assert!(solve(&p, SolveStrategy::default(), 3, &Tolerances::default()).is_err());
    }

    #[test]
    fn residual_permutation_symmetry_and_scaling() {
        // same-color permutation invariance and the homogeneity
        // (z, w, chi) -> (cz, cw, chi/c)
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let p = BetheProblem::new(
            &g,
            vec![c(0.0), c(1.0)],
            vec![vec![qi(1)], vec![qi(1)]],
            vec![qi(3)],
            vec![0, 0],
        )
        .unwrap();
        let w = vec![C64::new(0.3, 0.4), C64::new(1.7, -0.2)];
        let e1 = p.equations(&w);
        let e2 = p.equations(&[w[1], w[0]]);
        assert!((e1[0] - e2[1]).norm() < 1e-14 && (e1[1] - e2[0]).norm() < 1e-14);
        // scaling covariance
        let cscale = 2.5;
        let p2 = BetheProblem::new(
            &g,
            vec![c(0.0), c(2.5)],
            vec![vec![qi(1)], vec![qi(1)]],
            vec![qi(3) / crate::rational::q_from_f64(cscale).unwrap()],
            vec![0, 0],
        )
        .unwrap();
        let ws: Vec<C64> = w.iter().map(|x| x * cscale).collect();
        let es = p2.equations(&ws);
        for (a, b) in e1.iter().zip(&es) {
            assert!((a / cscale - b).norm() < 1e-13);
        }
    }

    #[test]
    fn bethe_vector_small_cases() {
        let (p, t, _) = a1_problem(q(7, 5), vec![]);
        // m = 0: the product of highest weight vectors
        let out = solve(&p, SolveStrategy::default(), 0, &Tolerances::default()).unwrap();
        let v = bethe_vector(&p, &out.solutions[0], &t).unwrap();
        assert!(!v.is_zero);
        assert_eq!(v.weight, vec![2]);
        let hi = t.highest_tensor_index();
        for (i, cc) in v.coeffs.iter().enumerate() {
            if i == hi {
                assert!((cc - c(1.0)).norm() < 1e-14);
            } else {
                assert!(cc.norm() < 1e-14);
            }
        }
        // N = 2, m = 1: f v (x) v/(w - z_1) + v (x) f v/(w - z_2)
        let (p1, t1, _) = a1_problem(q(7, 5), vec![0]);
        let sol = BetheSolution {
            w: vec![C64::new(0.4, 0.3)],
            residual: vec![0.0],
            min_sep_ww: f64::INFINITY,
            min_sep_wz: 0.0,
            degenerate: false,
            class_id: 0,
        };
        let v = bethe_vector(&p1, &sol, &t1).unwrap();
        assert_eq!(v.weight, vec![0]);
        // oracle: enumerate the two ordered partitions by hand
        let g = &t1.factors[0].g;
        let f_idx = g.rank + g.num_positive_roots();
        let _ = f_idx;
        let fv_low = |site: usize| -> usize {
            // index of f v (x) v or v (x) f v in the tensor basis
            let f0 = &t1.factors[0];
            let hi = f0.highest_index();
            let lo = f0.blocks[&vec![-1]][0];
            if site == 0 {
                t1.index_from_components(&[lo, hi])
            } else {
                t1.index_from_components(&[hi, lo])
            }
        };
        let expect0 = 1.0 / (sol.w[0] - p1.z[0]);
        let expect1 = 1.0 / (sol.w[0] - p1.z[1]);
        assert!((v.coeffs[fv_low(0)] - expect0).norm() < 1e-14);
        assert!((v.coeffs[fv_low(1)] - expect1).norm() < 1e-14);
    }

    #[test]
    fn eigen_check_two_spins() {
        // every solution class gives a joint eigenvector of the shifted
        // Hamiltonians built with operator_chi(chi)
        let chi = q(7, 5);
        let (_, t, ps) = a1_problem(chi.clone(), vec![]);
        let zq = vec![qi(0), qi(1)];
        let op_chi = operator_chi(&[chi.clone()]);
        let x0 = gaudin_shifted(&ps, &t, &zq, &op_chi, 0).unwrap();
        let x1 = gaudin_shifted(&ps, &t, &zq, &op_chi, 1).unwrap();
        let fams: Vec<&[crate::hamiltonians::WeightOperator]> = vec![&x0, &x1];
        let tol = Tolerances::default();
        for coloring in [vec![], vec![0], vec![0, 0]] {
            let (p, _, _) = a1_problem(chi.clone(), coloring.clone());
            let out = solve(&p, SolveStrategy::default(), 17, &tol).unwrap();
            assert!(!out.solutions.is_empty(), "coloring {coloring:?}");
            for s in &out.solutions {
                let v = bethe_vector(&p, s, &t).unwrap();
                assert!(!v.is_zero);
                let check = eigen_check(&v, &fams, &t, &tol).unwrap();
                assert!(check.passed, "coloring {coloring:?}: {check:?}");
            }
        }
        // m = 0 eigenvalue: (lambda_1, lambda_2)/(z_1 - z_2) + (op_chi, lambda_1)
        let (p, _, _) = a1_problem(chi.clone(), vec![]);
        let out = solve(&p, SolveStrategy::default(), 17, &tol).unwrap();
        let v = bethe_vector(&p, &out.solutions[0], &t).unwrap();
        let check = eigen_check(&v, &fams, &t, &tol).unwrap();
        let lam = vec![qi(1)];
        let expect = q_to_f64(&ps.wf.pair(&lam, &lam)) / (0.0 - 1.0)
            + q_to_f64(&ps.wf.pair(&op_chi, &lam));
        assert!((check.entries[0].eigenvalue.0 - expect).abs() < 1e-10);
        // with the wrong sign the m = 1 vectors are NOT eigenvectors
        let xw = gaudin_shifted(&ps, &t, &zq, &[chi.clone()], 0).unwrap();
        let (p1, _, _) = a1_problem(chi.clone(), vec![0]);
        let out1 = solve(&p1, SolveStrategy::default(), 17, &tol).unwrap();
        let v1 = bethe_vector(&p1, &out1.solutions[0], &t).unwrap();
        let wrong: Vec<&[crate::hamiltonians::WeightOperator]> = vec![&xw];
        assert!(!eigen_check(&v1, &wrong, &t, &tol).unwrap().passed);
    }

    #[test]
    fn census_two_spins_counts() {
        let chi = q(9, 7);
        let (_, t, ps) = a1_problem(chi.clone(), vec![]);
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let zq = vec![qi(0), qi(1)];
        let op_chi = operator_chi(&[chi.clone()]);
        let x0 = gaudin_shifted(&ps, &t, &zq, &op_chi, 0).unwrap();
        let x1 = gaudin_shifted(&ps, &t, &zq, &op_chi, 1).unwrap();
        let fams: Vec<&[crate::hamiltonians::WeightOperator]> = vec![&x0, &x1];
        let report = census(
            &g,
            &t,
            &[c(0.0), c(1.0)],
            &[vec![qi(1)], vec![qi(1)]],
            &[chi],
            &fams,
            11,
            &Tolerances::default(),
        )
        .unwrap();
        // counts (1, 2, 1) over m = 0, 1, 2; total 4 = dim
        let by_m: Vec<usize> = report.blocks.iter().map(|b| b.solution_classes).collect();
        assert_eq!(report.total_dimension, 4);
        assert_eq!(report.total_classes, 4);
        assert_eq!(report.total_matched, 4);
        let mut counts: Vec<(usize, usize)> = report
            .blocks
            .iter()
            .map(|b| (b.coloring.len(), b.solution_classes))
            .collect();
        counts.sort();
        assert_eq!(counts, vec![(0, 1), (1, 2), (2, 1)]);
        let _ = by_m;
    }

    #[test]
    fn census_one_module_spin_three_halves() {
        // N = 1, <lambda, a^vee> = 3: one class per m = 0..3
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let v = build_irrep(&g, &[3]).unwrap();
        let t = TensorSpace::new(vec![v]).unwrap();
        let ps = PhaseSpace::new(&g, 1).unwrap();
        let chi = q(11, 4);
        let op_chi = operator_chi(&[chi.clone()]);
        let x0 = gaudin_shifted(&ps, &t, &[qi(0)], &op_chi, 0).unwrap();
        // DMT family: for N = 1 these lie in the same commutative algebra
        let alpha = ps.g.root_weight(0);
        let td = dmt(&ps, &t, &alpha, &op_chi, Site::At(0)).unwrap();
        let fams: Vec<&[crate::hamiltonians::WeightOperator]> = vec![&x0, &td];
        let report = census(
            &g,
            &t,
            &[c(0.0)],
            &[vec![qi(3)]],
            &[chi],
            &fams,
            5,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(report.blocks.len(), 4);
        for b in &report.blocks {
            assert_eq!(b.solution_classes, 1, "m = {}", b.coloring.len());
            assert_eq!(b.block_dimension, 1);
            assert_eq!(b.matched_eigenvectors, 1);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn a1_two_color_problem(chi: Q) -> BetheProblem {
            let g = SimpleLieAlgebra::from_type("A1").unwrap();
            BetheProblem::new(
                &g,
                vec![c(0.0), c(1.0)],
                vec![vec![qi(2)], vec![qi(1)]],
                vec![chi],
                vec![0, 0],
            )
            .unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // same-color permutations leave the equation multiset invariant
            #[test]
            fn residual_permutation_invariant(
                re1 in -3.0f64..3.0, im1 in 0.3f64..2.0,
                re2 in -3.0f64..3.0, im2 in -2.0f64..-0.3,
                n in 1i64..9, d in 1i64..5,
            ) {
                let p = a1_two_color_problem(q(n, d));
                let w = vec![C64::new(re1, im1), C64::new(re2, im2)];
                let e1 = p.equations(&w);
                let e2 = p.equations(&[w[1], w[0]]);
                prop_assert!((e1[0] - e2[1]).norm() < 1e-12);
                prop_assert!((e1[1] - e2[0]).norm() < 1e-12);
            }

            // (z, w, chi) -> (cz, cw, chi/c) rescales the equations by 1/c
            #[test]
            fn scaling_covariance(
                re in -2.0f64..2.0, im in 0.2f64..2.0,
                n in 1i64..9, d in 1i64..5,
                scale_num in 2i64..7,
            ) {
                let chi = q(n, d);
                let cscale = scale_num as f64 / 2.0;
                let p = a1_two_color_problem(chi.clone());
                let g = SimpleLieAlgebra::from_type("A1").unwrap();
                let p2 = BetheProblem::new(
                    &g,
                    vec![c(0.0), c(cscale)],
                    vec![vec![qi(2)], vec![qi(1)]],
                    vec![chi / q(scale_num, 2)],
                    vec![0, 0],
                ).unwrap();
                let w = vec![C64::new(re, im), C64::new(re + 1.3, -im)];
                let ws: Vec<C64> = w.iter().map(|x| x * cscale).collect();
                let e1 = p.equations(&w);
                let e2 = p2.equations(&ws);
                for (a, b) in e1.iter().zip(&e2) {
                    prop_assert!((a / cscale - b).norm() < 1e-11, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn dmt_eigenvectors_on_a2_adjoint_single_module() {
        // N = 1, A2 adjoint: the weight-zero block is 2-dimensional and the
        // Bethe vectors for the coloring (alpha_1, alpha_2) diagonalize the
        // DMT family
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let adj = build_irrep(&g, &[1, 1]).unwrap();
        let t = TensorSpace::new(vec![adj]).unwrap();
        let ps = PhaseSpace::new(&g, 1).unwrap();
        let chi = vec![qi(3), qi(5)];
        let p = BetheProblem::new(&g, vec![c(0.0)], vec![vec![qi(1), qi(1)]], chi.clone(), vec![0, 1])
            .unwrap();
        let tol = Tolerances::default();
        let out = solve(&p, SolveStrategy::default(), 77, &tol).unwrap();
        assert_eq!(out.solutions.len(), 2, "{:?}", out.diagnostics);
        let op_chi = operator_chi(&chi);
        let t1 = dmt(&ps, &t, &[qi(1), qi(0)], &op_chi, Site::At(0)).unwrap();
        let t2 = dmt(&ps, &t, &[qi(0), qi(1)], &op_chi, Site::At(0)).unwrap();
        let fams: Vec<&[crate::hamiltonians::WeightOperator]> = vec![&t1, &t2];
        for s in &out.solutions {
            let v = bethe_vector(&p, s, &t).unwrap();
            assert!(!v.is_zero);
            let check = eigen_check(&v, &fams, &t, &tol).unwrap();
            assert!(check.passed, "{check:?}");
        }
    }
}
