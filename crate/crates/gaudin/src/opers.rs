//! Opers on the disc and P^1: graded gauge canonicalization, Cartan
//! connections and the Miura transformation, singularity profiles and
//! m-residues, the eigenvalue oper of a Bethe solution, and numerical
//! monodromy.
//!
//! For type A the Langlands dual algebra is realized by the same matrices;
//! the h* = {}^L h identification enters through [`embed_weight_fun`],
//! which carries the one global sign calibrated so that the connections
//! built from Bethe data are regular at the auxiliary points and have the
//! stated residues at the marked points.

use crate::bethe::{BetheProblem, BetheSolution};
use crate::error::{GaudinError, Result};
use crate::liealg::{principal_data, BasisLabel, PrincipalData, SimpleLieAlgebra};
use crate::linalg::QMat;
use crate::rational::{q, qi, C64, CQ, Q};
use crate::ratfun::RatFun;
use num::{One, Zero};
use serde::Serialize;

/// h*-valued rational connection coefficient functions: per simple coroot,
/// the pairing `<alpha_i^vee, nu(t)>` as a rational function.
#[derive(Clone, Debug)]
pub struct CartanConnection {
    pub g: SimpleLieAlgebra,
    pub nu: Vec<RatFun>,
    /// registry of marked points (finite ones)
    pub marked: Vec<CQ>,
}

impl CartanConnection {
    pub fn new(g: &SimpleLieAlgebra, nu: Vec<RatFun>, marked: Vec<CQ>) -> Self {
        assert_eq!(nu.len(), g.rank);
        CartanConnection { g: g.clone(), nu, marked }
    }

    /// Residue (coefficient of 1/(t-p)) of the connection at a finite point,
    /// as a weight vector.
    pub fn residue_at(&self, p: &CQ) -> Vec<CQ> {
        self.nu
            .iter()
            .map(|f| f.laurent_at(p, -1, -1).remove(0))
            .collect()
    }

    /// Expansion at infinity in the coordinate `s = 1/t` on the (-rho)-
    /// twisted bundle: `nu_inf(s) = -s^{-2} nu(1/s) - 2 rho / s`.
    pub fn infinity_expansion(&self) -> CartanConnection {
        let two_over_s = RatFun::pole(CQ::from_i64(2), &CQ::zero(), 1);
        let s2 = RatFun::pole(CQ::from_i64(1), &CQ::zero(), 2);
        let nu = self
            .nu
            .iter()
            .map(|f| f.subst_inverse().mul(&s2).neg().sub(&two_over_s))
            .collect();
        CartanConnection { g: self.g.clone(), nu, marked: vec![CQ::zero()] }
    }
}

/// Canonical coefficients `v_j(t)`, one per exponent, plus the marked-point
/// registry and singularity bookkeeping.
#[derive(Clone, Debug)]
pub struct CanonicalOper {
    pub g: SimpleLieAlgebra,
    /// (exponent, coefficient function), in exponent order
    pub v: Vec<(usize, RatFun)>,
    pub marked: Vec<CQ>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperPoint {
    Finite(CQ),
    Infinity,
}

/// Precomputed graded solve data for the canonical-form elimination.
struct GradedSolver {
    pd: PrincipalData,
    max_degree: i64,
    /// per degree d: (basis indices of b_d, basis indices of n_{d+1},
    /// canonical slots at degree d, inverse of the combined matrix)
    per_degree: Vec<(Vec<usize>, Vec<usize>, Vec<usize>, QMat)>,
}

fn graded_solver(g: &SimpleLieAlgebra) -> GradedSolver {
    let pd = principal_data(g);
    let max_degree = g.positive_roots.iter().map(|r| r.height()).max().unwrap();
    let mut per_degree = Vec::new();
    let p_minus1 = &pd.p_minus1;
    for d in 0..=max_degree {
        let b_d: Vec<usize> = (0..g.dim)
            .filter(|&i| {
                g.principal_degree(i) == d
                    && !matches!(g.basis[i], BasisLabel::Neg(_))
            })
            .collect();
        let n_d1: Vec<usize> = (0..g.dim)
            .filter(|&i| {
                g.principal_degree(i) == d + 1 && matches!(g.basis[i], BasisLabel::Pos(_))
            })
            .collect();
        let can_slots: Vec<usize> = pd
            .canonical
            .iter()
            .enumerate()
            .filter(|(_, (deg, _))| *deg as i64 == d)
            .map(|(j, _)| j)
            .collect();
        // columns: [p_{-1}, e_k] for e_k in n_{d+1}, then canonical elements
        let rows = b_d.len();
        let cols = n_d1.len() + can_slots.len();
        assert_eq!(rows, cols, "graded split must be square at degree {d}");
        let mut m = QMat::zeros(rows, cols);
        for (c, &k) in n_d1.iter().enumerate() {
            let br = g.bracket(p_minus1, &g.basis_elt(k));
            for (r, &bi) in b_d.iter().enumerate() {
                m[(r, c)] = br[bi].clone();
            }
        }
        for (c, &j) in can_slots.iter().enumerate() {
            let (_, p_elt) = &pd.canonical[j];
            for (r, &bi) in b_d.iter().enumerate() {
                m[(r, n_d1.len() + c)] = p_elt[bi].clone();
            }
        }
        let inv = m.inverse().expect("graded elimination matrix invertible");
        per_degree.push((b_d, n_d1, can_slots, inv));
    }
    GradedSolver { pd, max_degree, per_degree }
}

/// Apply the gauge transformation by `exp(n)` to the connection
/// `d/dt + a(t)`: `a -> e^{ad n} a - sum_k ad_n^k(n')/(k+1)!`.
pub fn gauge_by_exp(
    g: &SimpleLieAlgebra,
    a: &[RatFun],
    n: &[RatFun],
) -> Vec<RatFun> {
    let mut out = a.to_vec();
    // e^{ad n} a
    let mut term = a.to_vec();
    let mut k = 1i64;
    loop {
        term = g.bracket_rf(n, &term);
        if term.iter().all(|f| f.is_zero()) {
            break;
        }
        let fact = Q::new(1.into(), factorial(k));
        for (o, t) in out.iter_mut().zip(&term) {
            *o = o.add(&t.scale_q(&fact));
        }
        k += 1;
        assert!(k < 64, "nilpotency bound exceeded");
    }
    // minus the right-trivialized derivative of exp(n)
    let nprime: Vec<RatFun> = n.iter().map(|f| f.derivative()).collect();
    let mut term = nprime.clone();
    let mut k = 0i64;
    loop {
        let fact = Q::new(1.into(), factorial(k + 1));
        let mut all_zero = true;
        for (o, t) in out.iter_mut().zip(&term) {
            if !t.is_zero() {
                all_zero = false;
                *o = o.sub(&t.scale_q(&fact));
            }
        }
        if all_zero {
            break;
        }
        term = g.bracket_rf(n, &term);
        k += 1;
        assert!(k < 64, "nilpotency bound exceeded");
    }
    out
}

fn factorial(k: i64) -> num::BigInt {
    let mut f = num::BigInt::from(1);
    for i in 2..=k {
        f *= i;
    }
    f
}

/// Bring `d/dt + p_{-1} + b(t)` (b Borel-valued, rational, exact) to the
/// canonical form `d/dt + p_{-1} + sum_j v_j(t) p_j` by graded unipotent
/// elimination. The input vector holds the coefficients of `b` on the full
/// Chevalley basis (negative part must vanish).
pub fn canonicalize(g: &SimpleLieAlgebra, borel: &[RatFun]) -> Result<CanonicalOper> {
    canonicalize_with_marked(g, borel, vec![])
}

pub fn canonicalize_with_marked(
    g: &SimpleLieAlgebra,
    borel: &[RatFun],
    marked: Vec<CQ>,
) -> Result<CanonicalOper> {
    for (i, f) in borel.iter().enumerate() {
        if matches!(g.basis[i], BasisLabel::Neg(_)) && !f.is_zero() {
            return Err(GaudinError::Parse(
                "connection coefficient outside the Borel".into(),
            ));
        }
    }
    let solver = graded_solver(g);
    // full coefficient vector, p_{-1} included
    let mut a = borel.to_vec();
    for (i, c) in solver.pd.p_minus1.iter().enumerate() {
        if !c.is_zero() {
            a[i] = a[i].add(&RatFun::from_q(c.clone()));
        }
    }
    let mut v: Vec<Option<RatFun>> = vec![None; solver.pd.canonical.len()];
    for d in 0..=solver.max_degree {
        let (b_d, n_d1, can_slots, inv) = &solver.per_degree[d as usize];
        // residual at degree d
        let r: Vec<RatFun> = b_d.iter().map(|&i| a[i].clone()).collect();
        // x = inv * r: first n_d1.len() entries give the unipotent direction
        // n with [p_{-1}, n] = r - c, the rest are canonical coefficients
        let mut x = vec![RatFun::zero(); inv.cols];
        for (row, xi) in x.iter_mut().enumerate() {
            for (col, rf) in r.iter().enumerate() {
                let coef = &inv[(row, col)];
                if !coef.is_zero() {
                    *xi = xi.add(&rf.scale_q(coef));
                }
            }
        }
        for (c, &j) in can_slots.iter().enumerate() {
            v[j] = Some(x[n_d1.len() + c].clone());
        }
        let mut n_elt = vec![RatFun::zero(); g.dim];
        let mut nonzero = false;
        for (c, &k) in n_d1.iter().enumerate() {
            if !x[c].is_zero() {
                n_elt[k] = x[c].clone();
                nonzero = true;
            }
        }
        if nonzero {
            a = gauge_by_exp(g, &a, &n_elt);
        }
    }
    // sanity: nothing but p_{-1} and the canonical coefficients remains
    for (i, f) in a.iter().enumerate() {
        let expected_canonical = solver
            .pd
            .canonical
            .iter()
            .any(|(_, p)| !p[i].is_zero());
        if !expected_canonical && !matches!(g.basis[i], BasisLabel::Neg(_)) && !f.is_zero() {
            return Err(GaudinError::Numerical(format!(
                "canonicalization left residue on basis element {}",
                g.basis_name(i)
            )));
        }
    }
    // express the remaining element exactly on the canonical generators:
    // a = p_{-1} + sum v_j p_j with the v_j found during elimination
    let v: Vec<(usize, RatFun)> = solver
        .pd
        .canonical
        .iter()
        .zip(v)
        .map(|((d, _), f)| (*d, f.expect("every exponent visited")))
        .collect();
    Ok(CanonicalOper { g: g.clone(), v, marked })
}

/// The signed h* -> {}^L h embedding used by the Miura transformation:
/// coefficient vector on h_1..h_rank with `alpha_i(embed(nu)) = -nu_i`.
pub fn embed_weight_fun(g: &SimpleLieAlgebra, nu: &[RatFun]) -> Vec<RatFun> {
    // solve A^T c = -nu with A the Cartan matrix (alpha_j(h_i) = A_{ij})
    let a = QMat::from_rows(
        (0..g.rank)
            .map(|i| (0..g.rank).map(|j| qi(g.cartan[j][i])).collect())
            .collect(),
    );
    let inv = a.inverse().expect("Cartan matrix invertible");
    (0..g.rank)
        .map(|i| {
            let mut f = RatFun::zero();
            for (j, nuj) in nu.iter().enumerate() {
                let c = &inv[(i, j)];
                if !c.is_zero() {
                    f = f.add(&nuj.scale_q(&-c.clone()));
                }
            }
            f
        })
        .collect()
}

/// Miura transformation: the canonical form of `d/dt + p_{-1} + embed(nu)`.
pub fn miura(conn: &CartanConnection) -> Result<CanonicalOper> {
    let g = &conn.g;
    let h_coords = embed_weight_fun(g, &conn.nu);
    let mut borel = vec![RatFun::zero(); g.dim];
    borel[..g.rank].clone_from_slice(&h_coords);
    canonicalize_with_marked(g, &borel, conn.marked.clone())
}

impl CanonicalOper {
    /// Pole order of the oper at a finite point: max over j of
    /// ceil(pole_order(v_j) / (d_j + 1)); regular points report 0.
    pub fn singularity_order(&self, p: &CQ) -> i64 {
        self.v
            .iter()
            .map(|(d, f)| {
                let ord = f.order_at(p);
                if ord >= 0 {
                    0
                } else {
                    (-ord + *d as i64) / (*d as i64 + 1)
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// m-residue at a point: `(u_1(0) + 1/4 delta_{m,1}, u_2(0), ...)` where
    /// `v_j(t) = t^{-m(d_j+1)} u_j(t)` locally.
    pub fn residue_m(&self, point: &OperPoint, m: i64) -> Result<Vec<CQ>> {
        let local = match point {
            OperPoint::Finite(p) => self.clone_local(p),
            OperPoint::Infinity => self.at_infinity()?,
        };
        let (oper, p) = local;
        let mut out = Vec::with_capacity(oper.v.len());
        for (j, (d, f)) in oper.v.iter().enumerate() {
            let lead = -(m * (*d as i64 + 1));
            let ord = f.order_at(&p);
            if ord < lead {
                return Err(GaudinError::OrderExceeded {
                    point: format!("{point:?}"),
                    found: -ord,
                    allowed: -lead,
                });
            }
            let mut u0 = f.laurent_at(&p, lead, lead).remove(0);
            if m == 1 && j == 0 {
                u0 += &CQ::from_q(q(1, 4));
            }
            out.push(u0);
        }
        Ok(out)
    }

    fn clone_local(&self, p: &CQ) -> (CanonicalOper, CQ) {
        (self.clone(), p.clone())
    }

    /// The oper written in the coordinate `s = 1/t` at infinity, brought
    /// back to canonical form.
    pub fn at_infinity(&self) -> Result<(CanonicalOper, CQ)> {
        let g = &self.g;
        let pd = principal_data(g);
        // d/ds + p_{-1} + sum_j (-1)^{d_j+1} s^{-2(d_j+1)} v_j(1/s) p_j
        //      + 2 rho-check / s
        let mut borel = vec![RatFun::zero(); g.dim];
        for (i, c) in pd.two_rho_check.iter().enumerate() {
            if !c.is_zero() {
                borel[i] = borel[i].add(&RatFun::pole(CQ::from_q(c.clone()), &CQ::zero(), 1));
            }
        }
        for ((d, f), (_, p_elt)) in self.v.iter().zip(&pd.canonical) {
            let scale = RatFun::pole(CQ::from_i64(1), &CQ::zero(), 2 * (d + 1));
            let mut transformed = f.subst_inverse().mul(&scale);
            if (d + 1) % 2 == 1 {
                transformed = transformed.neg();
            }
            for (i, c) in p_elt.iter().enumerate() {
                if !c.is_zero() {
                    borel[i] = borel[i].add(&transformed.scale_q(c));
                }
            }
        }
        let oper = canonicalize_with_marked(g, &borel, vec![CQ::zero()])?;
        Ok((oper, CQ::zero()))
    }

    /// Float form of the connection matrix, compiled once for integration.
    pub fn compile(&self) -> CompiledOper {
        let g = &self.g;
        let pd = principal_data(g);
        let n = g.matrices[0].rows;
        let to_flat = |elt: &[Q]| -> Vec<C64> {
            let mut m = vec![C64::new(0.0, 0.0); n * n];
            for (a, c) in elt.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mat = &g.matrices[a];
                for i in 0..n {
                    for j in 0..n {
                        if !mat[(i, j)].is_zero() {
                            m[i * n + j] += crate::rational::q_to_f64(&(&mat[(i, j)] * c));
                        }
                    }
                }
            }
            m
        };
        let base = to_flat(&pd.p_minus1);
        let coeffs = self
            .v
            .iter()
            .zip(&pd.canonical)
            .map(|((_, f), (_, p_elt))| {
                let num: Vec<C64> = f.num.coeffs.iter().map(|c| c.to_c64()).collect();
                let den: Vec<C64> = f.expanded_den().coeffs.iter().map(|c| c.to_c64()).collect();
                (num, den, to_flat(p_elt))
            })
            .collect();
        CompiledOper { base, coeffs }
    }

    /// All finite singular points (poles of any coefficient), as floats.
    pub fn finite_singularities(&self) -> Vec<C64> {
        let mut pts: Vec<C64> = Vec::new();
        for p in &self.marked {
            let z = p.to_c64();
            let singular = self
                .v
                .iter()
                .any(|(_, f)| f.order_at(p) < 0);
            if singular && !pts.iter().any(|q| (q - z).norm() < 1e-9) {
                pts.push(z);
            }
        }
        pts
    }

    pub fn to_doc(&self) -> OperDoc {
        let fmt_cq = |c: &CQ| {
            (
                crate::rational::format_rational(&c.re),
                crate::rational::format_rational(&c.im),
            )
        };
        let coefficients = self
            .v
            .iter()
            .map(|(d, f)| {
                let mut poles = Vec::new();
                for p in &self.marked {
                    let ord = f.order_at(p);
                    if ord < 0 {
                        let tail = f.laurent_at(p, ord, -1);
                        poles.push(PoleDoc {
                            point: fmt_cq(p),
                            order: -ord,
                            coefficients: tail.iter().map(fmt_cq).collect(),
                        });
                    }
                }
                // polynomial part: euclidean quotient
                let (quot, _) = f.num.div_rem(&f.expanded_den());
                CoefficientDoc {
                    exponent: *d,
                    poles,
                    polynomial: quot.coeffs.iter().map(fmt_cq).collect(),
                }
            })
            .collect();
        OperDoc { algebra: self.g.label.clone(), coefficients }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct PoleDoc {
    pub point: (String, String),
    pub order: i64,
    pub coefficients: Vec<(String, String)>,
}

#[derive(Serialize, Debug, Clone)]
pub struct CoefficientDoc {
    pub exponent: usize,
    pub poles: Vec<PoleDoc>,
    pub polynomial: Vec<(String, String)>,
}

#[derive(Serialize, Debug, Clone)]
pub struct OperDoc {
    pub algebra: String,
    pub coefficients: Vec<CoefficientDoc>,
}

/// Canonical coordinates of the conjugacy class of a Cartan element given
/// as a weight `mu` (the unique `y` with `p_{-1} + sum y_j p_j` in the class
/// of the diagonal realization of `mu`).
pub fn pi_coordinates(g: &SimpleLieAlgebra, mu: &[CQ]) -> Vec<CQ> {
    let n = g.matrices[0].rows;
    // diagonal matrix D with D_i - D_{i+1} = mu_i, trace 0
    let mut partial = vec![CQ::zero()];
    for m in mu {
        let last = partial.last().unwrap().clone();
        partial.push(last - m.clone());
    }
    let mean = {
        let mut s = CQ::zero();
        for p in &partial {
            s += p;
        }
        s.scale_q(&Q::new(1.into(), (n as i64).into()))
    };
    let diag: Vec<CQ> = partial.into_iter().map(|p| p - mean.clone()).collect();
    let target = char_coeffs_diag(&diag);

    // the map y -> char coefficients is triangular in the exponents
    let pd = principal_data(g);
    let ell = g.rank;
    // the coordinate with exponent k+1 (principal weight k+2) appears
    // linearly in the characteristic coefficient c_{k+2}
    let mut y = vec![CQ::zero(); ell];
    for k in 0..ell {
        let eval = |yv: &[CQ]| -> CQ {
            let m = canonical_matrix(g, &pd, yv);
            char_coeffs_matrix(&m)[k + 2].clone()
        };
        let b0 = eval(&y);
        let mut y1 = y.clone();
        y1[k] = CQ::from_i64(1);
        let b1 = eval(&y1);
        let slope = b1 - b0.clone();
        assert!(!slope.is_zero(), "triangularity of the canonical chart");
        y[k] = (target[k + 2].clone() - b0) * slope.inv();
    }
    y
}

fn canonical_matrix(g: &SimpleLieAlgebra, pd: &PrincipalData, y: &[CQ]) -> Vec<Vec<CQ>> {
    let n = g.matrices[0].rows;
    let mut m = vec![vec![CQ::zero(); n]; n];
    let add = |elt: &[Q], c: &CQ, m: &mut Vec<Vec<CQ>>| {
        for (a, coef) in elt.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let mat = &g.matrices[a];
            for i in 0..n {
                for j in 0..n {
                    if !mat[(i, j)].is_zero() {
                        let add_v = c.scale_q(&(&mat[(i, j)] * coef));
                        m[i][j] += &add_v;
                    }
                }
            }
        }
    };
    add(&pd.p_minus1, &CQ::from_i64(1), &mut m);
    for ((_, p_elt), yj) in pd.canonical.iter().zip(y) {
        add(p_elt, yj, &mut m);
    }
    m
}

/// Characteristic polynomial coefficients `det(lambda I - M) = sum c_k
/// lambda^{n-k}` via Faddeev-LeVerrier (exact).
fn char_coeffs_matrix(m: &[Vec<CQ>]) -> Vec<CQ> {
    let n = m.len();
    let mat_mul = |a: &Vec<Vec<CQ>>, b: &Vec<Vec<CQ>>| -> Vec<Vec<CQ>> {
        let mut c = vec![vec![CQ::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !b[k][j].is_zero() {
                        let p = &a[i][k] * &b[k][j];
                        c[i][j] += &p;
                    }
                }
            }
        }
        c
    };
    let trace = |a: &Vec<Vec<CQ>>| -> CQ {
        let mut t = CQ::zero();
        for i in 0..n {
            t += &a[i][i];
        }
        t
    };
    let mut powers = Vec::with_capacity(n);
    let mut cur = m.to_vec();
    powers.push(trace(&cur));
    for _ in 2..=n {
        cur = mat_mul(&cur, &m.to_vec());
        powers.push(trace(&cur));
    }
    // Newton: k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i ; c_k = (-1)^k e_k
    let mut elem = vec![CQ::from_i64(1)];
    for k in 1..=n {
        let mut s = CQ::zero();
        for i in 1..=k {
            let t = &elem[k - i] * &powers[i - 1];
            if i % 2 == 1 {
                s += &t;
            } else {
                s -= &t;
            }
        }
        elem.push(s.scale_q(&Q::new(1.into(), (k as i64).into())));
    }
    (0..=n)
        .map(|k| {
            if k % 2 == 0 {
                elem[k].clone()
            } else {
                -elem[k].clone()
            }
        })
        .collect()
}

fn char_coeffs_diag(diag: &[CQ]) -> Vec<CQ> {
    let n = diag.len();
    let mut m = vec![vec![CQ::zero(); n]; n];
    for (i, d) in diag.iter().enumerate() {
        m[i][i] = d.clone();
    }
    char_coeffs_matrix(&m)
}

/// Expected 1-residue coordinates of an oper with regular singularity and
/// residue `varpi(-lambda - rho)`.
pub fn expected_rs_residue(g: &SimpleLieAlgebra, lambda: &[Q]) -> Vec<CQ> {
    let mu: Vec<CQ> = lambda
        .iter()
        .map(|l| CQ::from_q(-(l + Q::one())))
        .collect();
    pi_coordinates(g, &mu)
}

/// Expected 2-residue coordinates `pi(-chi)` for chi in h*.
pub fn expected_irregular_residue(g: &SimpleLieAlgebra, chi: &[Q]) -> Vec<CQ> {
    let mu: Vec<CQ> = chi.iter().map(|c| CQ::from_q(-c.clone())).collect();
    pi_coordinates(g, &mu)
}

/// The Cartan connection of a Bethe problem:
/// `lambda(t) = -chi + sum_i lambda_i/(t - z_i) - sum_j alpha_{i_j}/(t - w_j)`.
pub fn bethe_connection(problem: &BetheProblem, solution: &BetheSolution) -> Result<CartanConnection> {
    let g = &problem.g;
    let z: Vec<CQ> = problem
        .z
        .iter()
        .map(|&p| CQ::from_c64(p).ok_or_else(|| GaudinError::Numerical("non-finite z".into())))
        .collect::<Result<_>>()?;
    let w: Vec<CQ> = solution
        .w
        .iter()
        .map(|&p| CQ::from_c64(p).ok_or_else(|| GaudinError::Numerical("non-finite w".into())))
        .collect::<Result<_>>()?;
    let mut nu = Vec::with_capacity(g.rank);
    for i in 0..g.rank {
        let mut f = RatFun::constant(CQ::from_q(-problem.chi[i].clone()));
        for (k, zk) in z.iter().enumerate() {
            let c = CQ::from_q(problem.weights[k][i].clone());
            if !c.is_zero() {
                f = f.add(&RatFun::pole(c, zk, 1));
            }
        }
        for (j, wj) in w.iter().enumerate() {
            let cartan = g.cartan[i][problem.coloring[j]];
            if cartan != 0 {
                f = f.add(&RatFun::pole(CQ::from_i64(-cartan), wj, 1));
            }
        }
        nu.push(f);
    }
    let mut marked = z;
    marked.extend(w);
    Ok(CartanConnection::new(g, nu, marked))
}

/// The eigenvalue oper of a Bethe solution: the Miura transformation of the
/// connection above. Requires the solution residual to be below `max_residual`.
pub fn oper_from_bethe(
    problem: &BetheProblem,
    solution: &BetheSolution,
    max_residual: f64,
) -> Result<CanonicalOper> {
    if solution.residual.iter().any(|&r| r > max_residual) {
        return Err(GaudinError::Numerical(format!(
            "Bethe residual above {max_residual}"
        )));
    }
    let conn = bethe_connection(problem, solution)?;
    miura(&conn)
}

/// Largest magnitude among the pole coefficients of the oper at a point
/// (0 when regular). For exact solutions of the Bethe system this vanishes
/// identically at the auxiliary points.
pub fn pole_size_at(oper: &CanonicalOper, p: &CQ) -> f64 {
    let mut worst = 0.0f64;
    for (_, f) in &oper.v {
        let ord = f.order_at(p);
        if ord < 0 {
            for c in f.laurent_at(p, ord, -1) {
                worst = worst.max(c.abs_f64());
            }
        }
    }
    worst
}

/// Loop description for monodromy transport.
#[derive(Clone, Debug)]
pub enum MonodromyLoop {
    /// counterclockwise circle
    Circle { center: C64, radius: f64 },
    /// circle conjugated by a straight segment from a base point
    BasedCircle { base: C64, center: C64, radius: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyResult {
    /// row-major (re, im) entries
    pub matrix: Vec<Vec<(f64, f64)>>,
    /// min over scalars c of ||M - c I|| / ||M|| (Frobenius)
    pub projective_distance_to_identity: f64,
    /// |det M - 1| (the connection matrix is traceless)
    pub det_deviation: f64,
    pub estimated_error: f64,
}

/// Transport the fundamental solution of `psi' = -A(t) psi` around a loop
/// with an adaptive embedded Runge-Kutta integrator (relative tolerance
/// 1e-10).
pub fn monodromy(oper: &CanonicalOper, lp: &MonodromyLoop) -> Result<MonodromyResult> {
    let n = oper.g.matrices[0].rows;
    let id: Vec<C64> = {
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    };
    let compiled = oper.compile();
    let (m, err) = match lp {
        MonodromyLoop::Circle { center, radius } => {
            transport_circle(&compiled, *center, *radius, id, n)?
        }
        MonodromyLoop::BasedCircle { base, center, radius } => {
            // segment to the circle, around, and back
            let dir = (base - center) / (base - center).norm();
            let start = center + dir * *radius;
            let (m1, e1) = transport_segment(&compiled, *base, start, id, n)?;
            let theta0 = (start - center).arg();
            let (m2, e2) = transport_circle_from(&compiled, *center, *radius, theta0, m1, n)?;
            let (m3, e3) = transport_segment(&compiled, start, *base, m2, n)?;
            (m3, e1 + e2 + e3)
        }
    };
    Ok(package_monodromy(m, n, err))
}

/// Multiply monodromies of several loops (applied in the listed order).
pub fn compose_monodromies(results: &[MonodromyResult]) -> MonodromyResult {
    let n = results[0].matrix.len();
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        acc[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut err = 0.0;
    for r in results {
        let m: Vec<C64> = r
            .matrix
            .iter()
            .flatten()
            .map(|&(re, im)| C64::new(re, im))
            .collect();
        acc = mat_mul_flat(&m, &acc, n);
        err += r.estimated_error;
    }
    package_monodromy(acc, n, err)
}

fn package_monodromy(m: Vec<C64>, n: usize, err: f64) -> MonodromyResult {
    let frob = |x: &[C64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let trace: C64 = (0..n).map(|i| m[i * n + i]).sum();
    let c = trace / n as f64;
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[i * n + i] -= c;
    }
    let dist = frob(&shifted) / frob(&m).max(1e-300);
    let det = det_flat(&m, n);
    let matrix = (0..n)
        .map(|i| (0..n).map(|j| (m[i * n + j].re, m[i * n + j].im)).collect())
        .collect();
    MonodromyResult {
        matrix,
        projective_distance_to_identity: dist,
        det_deviation: (det - C64::new(1.0, 0.0)).norm(),
        estimated_error: err,
    }
}

fn mat_mul_flat(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn det_flat(m: &[C64], n: usize) -> C64 {
    let mut a = m.to_vec();
    let mut det = C64::new(1.0, 0.0);
    for c in 0..n {
        let mut p = c;
        let mut best = -1.0;
        for i in c..n {
            let v = a[i * n + c].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != c {
            for j in 0..n {
                a.swap(c * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = a[c * n + c];
        det *= piv;
        for i in (c + 1)..n {
            let f = a[i * n + c] / piv;
            for j in c..n {
                let v = a[c * n + j];
                a[i * n + j] -= f * v;
            }
        }
    }
    det
}

/// Connection matrix precompiled to floats for the integrator.
pub struct CompiledOper {
    base: Vec<C64>,
    /// per exponent: numerator coefficients, denominator coefficients,
    /// flattened generator matrix
    coeffs: Vec<(Vec<C64>, Vec<C64>, Vec<C64>)>,
}

impl CompiledOper {
    fn matrix_at(&self, t: C64) -> Vec<C64> {
        let horner = |c: &[C64]| -> C64 {
            let mut s = C64::new(0.0, 0.0);
            for x in c.iter().rev() {
                s = s * t + x;
            }
            s
        };
        let mut m = self.base.clone();
        for (num, den, gen) in &self.coeffs {
            let v = horner(num) / horner(den);
            for (mi, gi) in m.iter_mut().zip(gen) {
                *mi += v * gi;
            }
        }
        m
    }
}

/// Right-hand side: dY/dtau = -A(t(tau)) * Y * dt/dtau.
fn ode_rhs(oper: &CompiledOper, t: C64, dt: C64, y: &[C64], n: usize) -> Vec<C64> {
    let a = oper.matrix_at(t);
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] -= aik * y[k * n + j] * dt;
            }
        }
    }
    out
}

/// Adaptive RK45 (Cash-Karp) along a parametrized path.
fn rk45<F>(
    oper: &CompiledOper,
    path: F,
    y0: Vec<C64>,
    n: usize,
) -> Result<(Vec<C64>, f64)>
where
    F: Fn(f64) -> (C64, C64), // tau in [0,1] -> (t, dt/dtau)
{
    const A2: f64 = 0.2;
    const A3: f64 = 0.3;
    const A4: f64 = 0.6;
    const A5: f64 = 1.0;
    const A6: f64 = 0.875;
    let b: [[f64; 5]; 5] = [
        [0.2, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [0.3, -0.9, 1.2, 0.0, 0.0],
        [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    let c5 = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    let c4 = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        0.25,
    ];
    let rel_tol = 1e-10;
    let mut y = y0;
    let mut tau = 0.0f64;
    let mut h: f64 = 1e-3;
    let mut err_acc = 0.0f64;
    let mut steps = 0usize;
    while tau < 1.0 {
        if steps > 2_000_000 {
            return Err(GaudinError::Numerical("integrator step limit".into()));
        }
        steps += 1;
        h = h.min(1.0 - tau);
        let mut k: Vec<Vec<C64>> = Vec::with_capacity(6);
        let stages = [0.0, A2, A3, A4, A5, A6];
        for s in 0..6 {
            let mut ys = y.clone();
            for (si, kk) in k.iter().enumerate() {
                let w = if s == 0 { 0.0 } else { b[s - 1][si] };
                if w != 0.0 {
                    for (yv, kv) in ys.iter_mut().zip(kk) {
                        *yv += h * w * kv;
                    }
                }
            }
            let (t, dt) = path(tau + stages[s] * h);
            k.push(ode_rhs(oper, t, dt, &ys, n));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for s in 0..6 {
            for i in 0..y.len() {
                y5[i] += h * c5[s] * k[s][i];
                y4[i] += h * c4[s] * k[s][i];
            }
        }
        let scale = y5.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let err = y5
            .iter()
            .zip(&y4)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale;
        if !err.is_finite() {
            return Err(GaudinError::Numerical(
                "integration step failed near a singularity".into(),
            ));
        }
        if err <= rel_tol {
            y = y5;
            tau += h;
            err_acc += err;
            h *= (rel_tol / err.max(1e-16)).powf(0.2).min(4.0);
        } else {
            h *= (rel_tol / err).powf(0.25).max(0.1);
            if h < 1e-14 {
                return Err(GaudinError::Numerical(
                    "step size underflow near a singularity".into(),
                ));
            }
        }
    }
    Ok((y, err_acc))
}

fn transport_circle(
    oper: &CompiledOper,
    center: C64,
    radius: f64,
    y0: Vec<C64>,
    n: usize,
) -> Result<(Vec<C64>, f64)> {
    transport_circle_from(oper, center, radius, 0.0, y0, n)
}

fn transport_circle_from(
    oper: &CompiledOper,
    center: C64,
    radius: f64,
    theta0: f64,
    y0: Vec<C64>,
    n: usize,
) -> Result<(Vec<C64>, f64)> {
    let tau_to_t = move |tau: f64| {
        let theta = theta0 + 2.0 * std::f64::consts::PI * tau;
        let e = C64::new(0.0, theta).exp();
        (
            center + radius * e,
            C64::new(0.0, 2.0 * std::f64::consts::PI) * radius * e,
        )
    };
    rk45(oper, tau_to_t, y0, n)
}

fn transport_segment(
    oper: &CompiledOper,
    from: C64,
    to: C64,
    y0: Vec<C64>,
    n: usize,
) -> Result<(Vec<C64>, f64)> {
    let d = to - from;
    rk45(oper, move |tau| (from + tau * d, d), y0, n)
}
