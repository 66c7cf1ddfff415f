//! Quantum commuting operators on tensor products: quadratic Gaudin,
//! chi-shifted Gaudin, DMT Hamiltonians, truncated Casimirs, commutator
//! diagnostics and symmetrization-quantization experiments.
//!
//! Every constructed operator preserves the diagonal-weight blocks, so it
//! is stored blockwise. With rational points and rational chi everything is
//! exact; floats only enter when a spectrum is requested.

use crate::classical::{PhaseSpace, UPoly};
use crate::error::{GaudinError, Result};
use crate::linalg::{eigenvalues, QMat};
use crate::liealg::{elt_zero, Elt};
use crate::mpoly::MPoly;
use crate::rational::{format_rational, C64, Q};
use crate::repr::{Site, TensorSpace};
use num::{One, Zero};
use serde::Serialize;

/// An operator restricted to a fixed total-weight block.
#[derive(Clone, Debug)]
pub struct WeightOperator {
    pub weight: Vec<i64>,
    /// tensor basis indices spanning the block
    pub indices: Vec<usize>,
    pub matrix: QMat,
    pub provenance: String,
}

impl WeightOperator {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Spectrum of a weight block.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    /// (re, im, multiplicity), clustered at 1e-8
    pub eigenvalues: Vec<(f64, f64, usize)>,
    pub block_dim: usize,
}

pub fn spectral_data(op: &WeightOperator) -> Result<SpectralData> {
    let ev = eigenvalues(&op.matrix)?;
    let mut clustered: Vec<(C64, usize)> = Vec::new();
    for e in ev {
        match clustered.last_mut() {
            Some((c, m)) if (*c - e).norm() < 1e-8 => *m += 1,
            _ => clustered.push((e, 1)),
        }
    }
    let total: usize = clustered.iter().map(|(_, m)| m).sum();
    debug_assert_eq!(total, op.dim());
    Ok(SpectralData {
        eigenvalues: clustered.into_iter().map(|(e, m)| (e.re, e.im, m)).collect(),
        block_dim: op.dim(),
    })
}

/// Build one operator per weight block from a dense exact action, checking
/// block preservation.
pub fn build_block_operators<F>(
    t: &TensorSpace,
    provenance: &str,
    apply: F,
) -> Result<Vec<WeightOperator>>
where
    F: Fn(&[Q]) -> Result<Vec<Q>>,
{
    let mut out = Vec::new();
    for (w, indices) in &t.blocks {
        let n = indices.len();
        let pos: std::collections::HashMap<usize, usize> =
            indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = QMat::zeros(n, n);
        for (col, &idx) in indices.iter().enumerate() {
            let mut v = vec![Q::zero(); t.dim];
            v[idx] = Q::one();
            let image = apply(&v)?;
            for (gidx, val) in image.into_iter().enumerate() {
                if val.is_zero() {
                    continue;
                }
                match pos.get(&gidx) {
                    Some(&row) => m[(row, col)] = val,
                    None => {
                        return Err(GaudinError::Numerical(format!(
                            "{provenance}: weight block {w:?} not preserved"
                        )))
                    }
                }
            }
        }
        out.push(WeightOperator {
            weight: w.clone(),
            indices: indices.clone(),
            matrix: m,
            provenance: provenance.to_string(),
        });
    }
    Ok(out)
}

fn check_distinct(z: &[Q]) -> Result<()> {
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            if z[i] == z[j] {
                return Err(GaudinError::CoincidentPoints);
            }
        }
    }
    Ok(())
}

/// Quadratic Gaudin Hamiltonian
/// `Xi_i = sum_{j != i} sum_a J_a^{(i)} J^{a (j)} / (z_i - z_j)`.
pub fn gaudin(
    ps: &PhaseSpace,
    t: &TensorSpace,
    z: &[Q],
    site: usize,
) -> Result<Vec<WeightOperator>> {
    gaudin_impl(ps, t, z, None, site)
}

/// chi-shifted Gaudin Hamiltonian `Xi_{i,chi} = Xi_i-summand + chi^{(i)}`,
/// with chi in h* acting through its kappa-image in the Cartan.
pub fn gaudin_shifted(
    ps: &PhaseSpace,
    t: &TensorSpace,
    z: &[Q],
    chi: &[Q],
    site: usize,
) -> Result<Vec<WeightOperator>> {
    gaudin_impl(ps, t, z, Some(chi), site)
}

fn gaudin_impl(
    ps: &PhaseSpace,
    t: &TensorSpace,
    z: &[Q],
    chi: Option<&[Q]>,
    site: usize,
) -> Result<Vec<WeightOperator>> {
    check_distinct(z)?;
    if site >= t.arity() || z.len() != t.arity() {
        return Err(GaudinError::SiteOutOfRange { site, arity: t.arity() });
    }
    let g = &ps.g;
    let t_chi: Option<Elt> = chi.map(|c| {
        let coords = ps.wf.cartan_dual(c);
        let mut e = elt_zero(g.dim);
        e[..g.rank].clone_from_slice(&coords);
        e
    });
    let provenance = match chi {
        None => format!("gaudin[i={site}]"),
        Some(c) => format!(
            "gaudin_shifted[i={site},chi=({})]",
            c.iter().map(format_rational).collect::<Vec<_>>().join(",")
        ),
    };
    build_block_operators(t, &provenance, |v| {
        let mut out = vec![Q::zero(); t.dim];
        for j in 0..t.arity() {
            if j == site {
                continue;
            }
            let dz = (&z[site] - &z[j]).recip();
            for a in 0..g.dim {
                let ja = g.basis_elt(a);
                let w = t.act(&ps.duals.dual[a], Site::At(j), v)?;
                let w = t.act(&ja, Site::At(site), &w)?;
                for (o, x) in out.iter_mut().zip(w) {
                    *o += x * &dz;
                }
            }
        }
        if let Some(tc) = &t_chi {
            let w = t.act(tc, Site::At(site), v)?;
            for (o, x) in out.iter_mut().zip(w) {
                *o += x;
            }
        }
        Ok(out)
    })
}

/// Diagonal Cartan generator `h_k` acting on the tensor product.
pub fn diagonal_cartan(t: &TensorSpace, k: usize) -> Result<Vec<WeightOperator>> {
    let g = &t.factors[0].g;
    let h = g.basis_elt(k);
    build_block_operators(t, &format!("diagonal_cartan[{k}]"), |v| {
        t.act(&h, Site::Diagonal, v)
    })
}

/// DMT Hamiltonian
/// `T_gamma(chi) = 1/2 sum_{alpha > 0} (alpha,gamma)(alpha,alpha)/(alpha,chi)
///  (e_alpha f_alpha + f_alpha e_alpha)`,
/// acting at one site or diagonally. `gamma`, `chi` are weights; chi must be
/// regular (every positive root reports a nonzero pairing).
pub fn dmt(
    ps: &PhaseSpace,
    t: &TensorSpace,
    gamma: &[Q],
    chi: &[Q],
    site: Site,
) -> Result<Vec<WeightOperator>> {
    let g = &ps.g;
    let mut coefs = Vec::with_capacity(g.num_positive_roots());
    for r in 0..g.num_positive_roots() {
        let alpha = g.root_weight(r);
        let denom = ps.wf.pair(&alpha, chi);
        if denom.is_zero() {
            return Err(GaudinError::NotRegular(format!(
                "(alpha, chi) = 0 for root {:?}",
                g.positive_roots[r].coeffs
            )));
        }
        let c = ps.wf.pair(&alpha, gamma) * ps.wf.pair(&alpha, &alpha)
            / denom
            / Q::from(num::BigInt::from(2));
        coefs.push(c);
    }
    let provenance = format!(
        "dmt[site={site:?},gamma=({}),chi=({})]",
        gamma.iter().map(format_rational).collect::<Vec<_>>().join(","),
        chi.iter().map(format_rational).collect::<Vec<_>>().join(",")
    );
    build_block_operators(t, &provenance, |v| {
        let mut out = vec![Q::zero(); t.dim];
        for r in 0..g.num_positive_roots() {
            if coefs[r].is_zero() {
                continue;
            }
            let e = g.basis_elt(g.rank + r);
            let f = g.basis_elt(g.rank + g.num_positive_roots() + r);
            let apply_at = |x: &Elt, y: &Elt, v: &[Q]| -> Result<Vec<Q>> {
                match site {
                    Site::Diagonal => {
                        let w = t.act(y, Site::Diagonal, v)?;
                        t.act(x, Site::Diagonal, &w)
                    }
                    Site::At(s) => {
                        let w = t.act(y, Site::At(s), v)?;
                        t.act(x, Site::At(s), &w)
                    }
                }
            };
            let ef = apply_at(&e, &f, v)?;
            let fe = apply_at(&f, &e, v)?;
            for (o, (x, y)) in out.iter_mut().zip(ef.into_iter().zip(fe)) {
                *o += (x + y) * &coefs[r];
            }
        }
        Ok(out)
    })
}

/// Truncated Casimir `C_alpha = ((alpha,alpha)/2)(e f + f e)` of the root
/// sl2, acting at one site or diagonally.
pub fn truncated_casimir(
    ps: &PhaseSpace,
    t: &TensorSpace,
    root_idx: usize,
    site: Site,
) -> Result<Vec<WeightOperator>> {
    let g = &ps.g;
    if root_idx >= g.num_positive_roots() {
        return Err(GaudinError::NotARoot(format!("index {root_idx}")));
    }
    let alpha = g.root_weight(root_idx);
    let half_norm = ps.wf.pair(&alpha, &alpha) / Q::from(num::BigInt::from(2));
    let e = g.basis_elt(g.rank + root_idx);
    let f = g.basis_elt(g.rank + g.num_positive_roots() + root_idx);
    build_block_operators(t, &format!("truncated_casimir[{root_idx}]"), |v| {
        let apply2 = |x: &Elt, y: &Elt, v: &[Q]| -> Result<Vec<Q>> {
            let w = t.act(y, site, v)?;
            t.act(x, site, &w)
        };
        let ef = apply2(&e, &f, v)?;
        let fe = apply2(&f, &e, v)?;
        Ok(ef
            .into_iter()
            .zip(fe)
            .map(|(x, y)| (x + y) * &half_norm)
            .collect())
    })
}

/// Result of an exact commutator check.
#[derive(Clone, Debug, Serialize)]
pub struct CommutatorResidual {
    pub exact_zero: bool,
    pub max_abs: f64,
}

/// `|| AB - BA ||` (max-abs entry) with an exact zero/nonzero verdict.
pub fn commutator_residual(a: &WeightOperator, b: &WeightOperator) -> Result<CommutatorResidual> {
    if a.weight != b.weight || a.indices != b.indices {
        return Err(GaudinError::BlockMismatch);
    }
    let c = a.matrix.commutator(&b.matrix);
    Ok(CommutatorResidual { exact_zero: c.is_zero(), max_abs: c.max_abs_f64() })
}

/// Check pairwise exact commutativity over every shared block of several
/// block-operator families. Returns the largest residual seen.
pub fn pairwise_commutators(families: &[Vec<WeightOperator>]) -> Result<CommutatorResidual> {
    let mut worst = CommutatorResidual { exact_zero: true, max_abs: 0.0 };
    for x in 0..families.len() {
        for y in (x + 1)..families.len() {
            for (a, b) in families[x].iter().zip(families[y].iter()) {
                let r = commutator_residual(a, b)?;
                if !r.exact_zero {
                    worst.exact_zero = false;
                    worst.max_abs = worst.max_abs.max(r.max_abs);
                }
            }
        }
    }
    Ok(worst)
}

/// Symmetrization quantization of a classical polynomial: each monomial
/// `x_{a_1} ... x_{a_d}` is sent to the average of the `d!` orderings of
/// `J_{a_1} ... J_{a_d}`. Returns the ordered expression; apply it to a
/// module with [`apply_upoly`].
pub fn symmetrize_quantize(ps: &PhaseSpace, p: &MPoly) -> UPoly {
    assert_eq!(ps.arity, 1);
    let mut terms = Vec::new();
    for (mono, coef) in &p.terms {
        let mut letters = Vec::new();
        for (a, &e) in mono.iter().enumerate() {
            for _ in 0..e {
                letters.push((0usize, a));
            }
        }
        if letters.is_empty() {
            terms.push((Vec::new(), coef.clone()));
            continue;
        }
        let perms = permutations(&letters);
        let scale = coef / Q::from(num::BigInt::from(perms.len() as i64));
        for w in perms {
            terms.push((w, scale.clone()));
        }
    }
    UPoly { terms }
}

fn permutations(letters: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    if letters.len() <= 1 {
        return vec![letters.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..letters.len() {
        let mut rest = letters.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            let mut w = vec![head];
            w.append(&mut tail);
            out.push(w);
        }
    }
    out
}

/// Apply an ordered expression to the tensor product (diagonally for
/// multi-letter sites encoded in the words).
pub fn apply_upoly(
    t: &TensorSpace,
    up: &UPoly,
    provenance: &str,
    diagonal: bool,
) -> Result<Vec<WeightOperator>> {
    let g = &t.factors[0].g;
    build_block_operators(t, provenance, |v| {
        let mut out = vec![Q::zero(); t.dim];
        for (word, c) in &up.terms {
            let mut cur = v.to_vec();
            for (site, a) in word.iter().rev() {
                let x = g.basis_elt(*a);
                let s = if diagonal { Site::Diagonal } else { Site::At(*site) };
                cur = t.act(&x, s, &cur)?;
            }
            for (o, x) in out.iter_mut().zip(cur) {
                *o += x * c;
            }
        }
        Ok(out)
    })
}

/// Ordered form of the shifted Gaudin Hamiltonian, for symbol checks.
pub fn gaudin_shifted_upoly(ps: &PhaseSpace, z: &[Q], chi: &[Q], site: usize) -> UPoly {
    let g = &ps.g;
    let mut terms = Vec::new();
    for j in 0..z.len() {
        if j == site {
            continue;
        }
        let dz = (&z[site] - &z[j]).recip();
        for a in 0..g.dim {
            for (b, c) in ps.duals.gram_inv.row(a).iter().enumerate() {
                if !c.is_zero() {
                    terms.push((vec![(site, a), (j, b)], c * &dz));
                }
            }
        }
    }
    let coords = ps.wf.cartan_dual(chi);
    for (k, c) in coords.iter().enumerate() {
        if !c.is_zero() {
            terms.push((vec![(site, k)], c.clone()));
        }
    }
    UPoly { terms }
}

/// Ordered form of the DMT Hamiltonian on one copy of g.
pub fn dmt_upoly(ps: &PhaseSpace, gamma: &[Q], chi: &[Q]) -> Result<UPoly> {
    let g = &ps.g;
    let mut terms = Vec::new();
    for r in 0..g.num_positive_roots() {
        let alpha = g.root_weight(r);
        let denom = ps.wf.pair(&alpha, chi);
        if denom.is_zero() {
            return Err(GaudinError::NotRegular(format!(
                "(alpha, chi) = 0 for root {:?}",
                g.positive_roots[r].coeffs
            )));
        }
        let c = ps.wf.pair(&alpha, gamma) * ps.wf.pair(&alpha, &alpha)
            / denom
            / Q::from(num::BigInt::from(2));
        let e = (0usize, g.rank + r);
        let f = (0usize, g.rank + g.num_positive_roots() + r);
        terms.push((vec![e, f], c.clone()));
        terms.push((vec![f, e], c));
    }
    Ok(UPoly { terms })
}

/// Blockwise report entry in the documented JSON shape.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorReport {
    pub formula: String,
    pub parameters: String,
    pub block_weight: Vec<i64>,
    pub dim: usize,
    pub commutator_residuals: Vec<f64>,
    pub spectrum: Option<SpectralData>,
}

/// Symmetrization-quantization experiment: quantize the iterated
/// chi-derivatives of the invariant polynomials by the symmetrization map,
/// apply them to the module, and report the pairwise commutator residuals.
/// Commutativity is measured, not asserted.
pub fn symmetrization_experiment(
    ps: &PhaseSpace,
    t: &TensorSpace,
    chi: &[Q],
) -> Result<Vec<(String, CommutatorResidual)>> {
    let inv = crate::liealg::invariant_polynomials(&ps.g, &ps.form)?;
    let chiv = ps.chi_values_from_weight(chi);
    let gens = crate::classical::shift_arg_generators_unchecked(ps, &inv, &chiv);
    let mut ops = Vec::new();
    for (k, gen) in gens.iter().enumerate() {
        if gen.degree() < 1 {
            continue;
        }
        let up = symmetrize_quantize(ps, gen);
        ops.push((k, apply_upoly(t, &up, &format!("sym_quantized[{k}]"), false)?));
    }
    let mut out = Vec::new();
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            let mut worst = CommutatorResidual { exact_zero: true, max_abs: 0.0 };
            for (a, b) in ops[i].1.iter().zip(ops[j].1.iter()) {
                let r = commutator_residual(a, b)?;
                if !r.exact_zero {
                    worst.exact_zero = false;
                    worst.max_abs = worst.max_abs.max(r.max_abs);
                }
            }
            out.push((format!("[sym g{}, sym g{}]", ops[i].0, ops[j].0), worst));
        }
    }
    Ok(out)
}
