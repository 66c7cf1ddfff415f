//! The classical layer on g* and (g*)^N: Lie-Poisson brackets, invariant
//! polynomials, shift-of-argument generators, Jacobian-rank independence
//! checks, the classical Gaudin L-operator with chi at infinity, Vinberg's
//! quadratic elements, and symbol (quantization) checks.
//!
//! Coordinates: the linear function `xbar^{(s)}_a` on the s-th copy of g*
//! sends `xi` to `xi(J_a)`; its variable index is `s * dim + a`.

use crate::error::{GaudinError, Result};
use crate::liealg::{
    check_regular_weight, dual_bases, DualBasisPair, Elt, InvariantForm, SimpleLieAlgebra,
    WeightForm,
};
use crate::linalg::QMat;
use crate::mpoly::MPoly;
use crate::rational::Q;
use num::{One, Zero};
use std::collections::BTreeMap;

/// Sign fixed once so that the classical Gaudin expansion matches the
/// symbols of the quantum shifted Hamiltonians (calibrated on A1): the
/// expanded L-operator is `sum_i A_i/(u - z_i) + chi`.
pub const CHI_EXPANSION_SIGN: i64 = 1;

/// Multi-site polynomial phase space over copies of g*.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    pub g: SimpleLieAlgebra,
    pub form: InvariantForm,
    pub duals: DualBasisPair,
    pub wf: WeightForm,
    pub arity: usize,
    /// pairs (a, b, expansion of [J_a, J_b]) with a < b and nonzero bracket
    bracket_pairs: Vec<(usize, usize, Vec<(usize, Q)>)>,
}

impl PhaseSpace {
    pub fn new(g: &SimpleLieAlgebra, arity: usize) -> Result<Self> {
        let form = InvariantForm::trace_form(g);
        let duals = dual_bases(g, &form)?;
        let wf = WeightForm::new(g, &form)?;
        let mut bracket_pairs = Vec::new();
        for a in 0..g.dim {
            for b in (a + 1)..g.dim {
                let br = g.bracket_basis(a, b);
                if !br.is_empty() {
                    bracket_pairs.push((a, b, br.to_vec()));
                }
            }
        }
        Ok(PhaseSpace { g: g.clone(), form, duals, wf, arity, bracket_pairs })
    }

    pub fn nvars(&self) -> usize {
        self.arity * self.g.dim
    }

    pub fn var(&self, site: usize, basis_idx: usize) -> usize {
        site * self.g.dim + basis_idx
    }

    /// Lie-Poisson bracket extended to several sites by Leibniz.
    pub fn poisson_bracket(&self, f: &MPoly, h: &MPoly) -> Result<MPoly> {
        if f.nvars != self.nvars() || h.nvars != self.nvars() {
            return Err(GaudinError::ArityMismatch(f.nvars, h.nvars));
        }
        let nv = self.nvars();
        let mut out = MPoly::zero(nv);
        for s in 0..self.arity {
            for (a, b, br) in &self.bracket_pairs {
                let fa = f.partial(self.var(s, *a));
                let hb = h.partial(self.var(s, *b));
                let fb = f.partial(self.var(s, *b));
                let ha = h.partial(self.var(s, *a));
                let mixed = fa.mul(&hb).sub(&fb.mul(&ha));
                if mixed.is_zero() {
                    continue;
                }
                for (c, coef) in br {
                    out = out.add(&MPoly::var(nv, self.var(s, *c)).mul(&mixed).scale(coef));
                }
            }
        }
        Ok(out)
    }

    /// Values `chi(J_a)` for chi in h*, extended by zero on root spaces.
    pub fn chi_values_from_weight(&self, chi: &[Q]) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.g.dim];
        v[..self.g.rank].clone_from_slice(&chi[..self.g.rank]);
        v
    }

    /// kappa-image of a point of g* (given by values on the basis).
    pub fn cartan_image(&self, values: &[Q]) -> Elt {
        // solve kappa(x, J_b) = values_b
        self.duals.gram_inv.mul_vec(values)
    }

    /// Exact regularity test: dim ker(ad chi-hat) = rank.
    pub fn check_regular(&self, chi_values: &[Q]) -> Result<()> {
        let x = self.cartan_image(chi_values);
        let ad = self.g.ad(&x);
        let centralizer = self.g.dim - ad.rank();
        if centralizer != self.g.rank {
            return Err(GaudinError::NotRegular(format!(
                "centralizer dimension {} != rank {}",
                centralizer, self.g.rank
            )));
        }
        Ok(())
    }

    /// Directional derivative along a direction in g* given by its values on
    /// the basis: `D P = sum_a values_a dP/dx_a` (single site).
    pub fn directional(&self, p: &MPoly, values: &[Q]) -> MPoly {
        assert_eq!(self.arity, 1);
        p.directional(values)
    }

    /// Derivative in the direction of the kappa-image of an algebra element
    /// v: `D_v p = sum_b kappa(v, J_b) dp/dx_b`.
    pub fn directional_along(&self, p: &MPoly, v: &Elt) -> MPoly {
        assert_eq!(self.arity, 1);
        let values: Vec<Q> = (0..self.g.dim)
            .map(|b| self.form.pair(v, &self.g.basis_elt(b)))
            .collect();
        p.directional(&values)
    }
}

/// Shift-of-argument generators `D_chi^n Pbar_i`, i = 1..rank, n = 0..d_i.
pub fn shift_arg_generators(
    ps: &PhaseSpace,
    inv_polys: &[MPoly],
    chi_values: &[Q],
) -> Result<Vec<MPoly>> {
    assert_eq!(ps.arity, 1);
    ps.check_regular(chi_values)?;
    Ok(shift_arg_generators_unchecked(ps, inv_polys, chi_values))
}

/// Same generator list without the regularity gate (used for the chi = 0
/// degeneration experiments).
pub fn shift_arg_generators_unchecked(
    ps: &PhaseSpace,
    inv_polys: &[MPoly],
    chi_values: &[Q],
) -> Vec<MPoly> {
    let mut out = Vec::new();
    for (i, p) in inv_polys.iter().enumerate() {
        let d = ps.g.exponents[i];
        let mut cur = p.clone();
        out.push(cur.clone());
        for _ in 1..=d {
            cur = cur.directional(chi_values);
            out.push(cur.clone());
        }
    }
    out
}

/// Exact rank of the Jacobian of `gens` at a rational point of (g*)^arity.
pub fn independence_rank(gens: &[MPoly], point: &[Q]) -> usize {
    if gens.is_empty() {
        return 0;
    }
    let nv = gens[0].nvars;
    let mut jac = QMat::zeros(gens.len(), nv);
    for (r, gpoly) in gens.iter().enumerate() {
        for v in 0..nv {
            jac[(r, v)] = gpoly.partial(v).eval(point);
        }
    }
    jac.rank()
}

/// The classical Gaudin L-operator at regular singularities with chi at
/// infinity: `eta(u) = sum_i A_i/(u - z_i) - chi`.
#[derive(Clone, Debug)]
pub struct LOperatorP1 {
    pub z: Vec<Q>,
    /// chi values on the basis (an element of g*)
    pub chi_values: Vec<Q>,
}

impl LOperatorP1 {
    pub fn new(z: Vec<Q>, chi_values: Vec<Q>) -> Result<Self> {
        for i in 0..z.len() {
            for j in (i + 1)..z.len() {
                if z[i] == z[j] {
                    return Err(GaudinError::CoincidentPoints);
                }
            }
        }
        Ok(LOperatorP1 { z, chi_values })
    }
}

/// Key of a classical Gaudin generator: pole site, invariant index (0-based),
/// pole power.
pub type GaudinGenKey = (usize, usize, usize);

/// Partial-fraction coefficients of `Pbar_k(eta(u))`, with the crate's
/// expansion sign for chi. Keys are `(site, k, pole_power)`.
pub fn classical_gaudin_generators(
    ps: &PhaseSpace,
    l: &LOperatorP1,
    inv_polys: &[MPoly],
) -> Result<BTreeMap<GaudinGenKey, MPoly>> {
    let n = l.z.len();
    if ps.arity != n {
        return Err(GaudinError::ArityMismatch(ps.arity, n));
    }
    let nv = ps.nvars();
    let sign = Q::from(num::BigInt::from(CHI_EXPANSION_SIGN));
    let mut out = BTreeMap::new();
    for (k, p) in inv_polys.iter().enumerate() {
        let deg = p.degree() as i64;
        for i in 0..n {
            // Laurent expansion of eta around z_i, coefficients are degree-1
            // polynomials; orders -1 ..= deg-2 suffice for pole parts.
            let hi = deg - 2;
            let series: Vec<LaurentMP> = (0..ps.g.dim)
                .map(|a| {
                    let mut coeffs = Vec::new();
                    // order -1: A_i
                    coeffs.push(MPoly::var(nv, ps.var(i, a)));
                    for m in 0..=hi {
                        let mut c = MPoly::zero(nv);
                        if m == 0 {
                            c = c.add(&MPoly::constant(nv, &sign * &l.chi_values[a]));
                        }
                        for j in 0..n {
                            if j == i {
                                continue;
                            }
                            let dz = &l.z[i] - &l.z[j];
                            let mut pw = Q::one();
                            for _ in 0..=m {
                                pw = pw / &dz;
                            }
                            if m % 2 == 1 {
                                pw = -pw;
                            }
                            c = c.add(&MPoly::var(nv, ps.var(j, a)).scale(&pw));
                        }
                        coeffs.push(c);
                    }
                    LaurentMP { start: -1, coeffs }
                })
                .collect();
            // intermediate products need headroom: with e factors left, an
            // order up to -1 + e can still reach -1
            let composed = compose_poly_with_series(p, &series, (deg - 2).max(-1));
            for pw in 1..=deg {
                let c = composed.coeff(-pw);
                if !c.is_zero() {
                    out.insert((i, k, pw as usize), c);
                }
            }
        }
    }
    Ok(out)
}

/// Truncated Laurent series with polynomial coefficients.
#[derive(Clone, Debug)]
struct LaurentMP {
    start: i64,
    coeffs: Vec<MPoly>,
}

impl LaurentMP {
    fn coeff(&self, order: i64) -> MPoly {
        let nv = self.coeffs.first().map_or(0, |c| c.nvars);
        let idx = order - self.start;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            MPoly::zero(nv)
        } else {
            self.coeffs[idx as usize].clone()
        }
    }

    fn mul_trunc(&self, other: &Self, hi: i64) -> Self {
        let start = self.start + other.start;
        let len = (hi - start + 1).max(0) as usize;
        let nv = self.coeffs.first().map_or(0, |c| c.nvars);
        let mut coeffs = vec![MPoly::zero(nv); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if (i + j) < len && !b.is_zero() {
                    coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        LaurentMP { start, coeffs }
    }
}

/// Substitute Laurent series for the variables of `p`, keeping orders up to
/// `hi`.
fn compose_poly_with_series(p: &MPoly, series: &[LaurentMP], hi: i64) -> LaurentMP {
    let nv = series.first().map_or(0, |s| s.coeffs.first().map_or(0, |c| c.nvars));
    let mut acc = LaurentMP { start: 0, coeffs: vec![MPoly::zero(nv)] };
    let one = LaurentMP { start: 0, coeffs: vec![MPoly::constant(nv, Q::one())] };
    for (mono, coef) in &p.terms {
        let mut term = one.clone();
        for (a, &e) in mono.iter().enumerate() {
            for _ in 0..e {
                term = term.mul_trunc(&series[a], hi);
            }
        }
        // scale and accumulate
        let scaled = LaurentMP {
            start: term.start,
            coeffs: term.coeffs.iter().map(|c| c.scale(coef)).collect(),
        };
        acc = add_laurent(&acc, &scaled);
    }
    acc
}

fn add_laurent(a: &LaurentMP, b: &LaurentMP) -> LaurentMP {
    let nv = a
        .coeffs
        .first()
        .map_or(b.coeffs.first().map_or(0, |c| c.nvars), |c| c.nvars);
    let start = a.start.min(b.start);
    let end = (a.start + a.coeffs.len() as i64).max(b.start + b.coeffs.len() as i64);
    let mut coeffs = vec![MPoly::zero(nv); (end - start) as usize];
    for (i, c) in a.coeffs.iter().enumerate() {
        coeffs[(a.start - start) as usize + i] = coeffs[(a.start - start) as usize + i].add(c);
    }
    for (i, c) in b.coeffs.iter().enumerate() {
        coeffs[(b.start - start) as usize + i] = coeffs[(b.start - start) as usize + i].add(c);
    }
    LaurentMP { start, coeffs }
}

/// Vinberg's quadratic element
/// `Tbar_gamma(chi) = sum_{alpha>0} (alpha,gamma)(alpha,alpha)/(alpha,chi) ebar_alpha fbar_alpha`
/// on a single copy of g*. `gamma`, `chi` are weights (coroot pairings).
pub fn vinberg_quadratic(
    ps: &PhaseSpace,
    gamma: &[Q],
    chi: &[Q],
) -> Result<MPoly> {
    assert_eq!(ps.arity, 1);
    check_regular_weight(&ps.g, &ps.wf, chi)?;
    let nv = ps.nvars();
    let mut out = MPoly::zero(nv);
    for r in 0..ps.g.num_positive_roots() {
        let alpha = ps.g.root_weight(r);
        let c = ps.wf.pair(&alpha, gamma) * ps.wf.pair(&alpha, &alpha) / ps.wf.pair(&alpha, chi);
        if c.is_zero() {
            continue;
        }
        let e_var = ps.var(0, ps.g.rank + r);
        let f_var = ps.var(0, ps.g.rank + ps.g.num_positive_roots() + r);
        out = out.add(&MPoly::var(nv, e_var).mul(&MPoly::var(nv, f_var)).scale(&c));
    }
    Ok(out)
}

/// `p_chi^{(2)} = D_chi^{d-2} p / (d-2)!` for a homogeneous p of degree d.
pub fn quadratic_part_along(ps: &PhaseSpace, p: &MPoly, chi_values: &[Q]) -> MPoly {
    let d = p.degree();
    assert!(d >= 2);
    let mut cur = p.clone();
    let mut fact = Q::one();
    for k in 1..=(d - 2) {
        cur = ps.directional(&cur, chi_values);
        fact *= Q::from(num::BigInt::from(k as i64));
    }
    cur.scale(&fact.recip())
}

/// The Cartan differential used by the quadratic-generation identity:
/// `gamma_q = (1/2) * kappa-image of grad_h q at chi`, as a weight.
pub fn gamma_q(ps: &PhaseSpace, p: &MPoly, chi: &[Q]) -> Vec<Q> {
    let chi_values = ps.chi_values_from_weight(chi);
    let grad: Vec<Q> = (0..ps.g.rank)
        .map(|i| p.partial(ps.var(0, i)).eval(&chi_values))
        .collect();
    let w = ps.wf.weight_of_cartan(&grad);
    w.into_iter().map(|x| x / Q::from(num::BigInt::from(2))).collect()
}

/// Ordered polynomial in universal-enveloping generators, possibly spread
/// over several tensor sites. Words are applied left factor first.
#[derive(Clone, Debug, Default)]
pub struct UPoly {
    /// (word, coefficient); each letter is (site, basis index)
    pub terms: Vec<(Vec<(usize, usize)>, Q)>,
}

impl UPoly {
    pub fn order(&self) -> usize {
        self.terms.iter().map(|(w, _)| w.len()).max().unwrap_or(0)
    }

    /// Forget ordering: map every word to the corresponding commutative
    /// monomial. For words whose letters commute (e.g. distinct sites) this
    /// is the exact symbol at each degree.
    pub fn commutative_image(&self, ps: &PhaseSpace) -> MPoly {
        let nv = ps.nvars();
        let mut out = MPoly::zero(nv);
        for (word, c) in &self.terms {
            let mut mono = vec![0u8; nv];
            for (site, a) in word {
                mono[ps.var(*site, *a)] += 1;
            }
            out.add_term(mono, c.clone());
        }
        out
    }

    /// Top-degree symbol: image of the words of maximal length.
    pub fn top_symbol(&self, ps: &PhaseSpace) -> MPoly {
        let d = self.order();
        let nv = ps.nvars();
        let mut out = MPoly::zero(nv);
        for (word, c) in &self.terms {
            if word.len() == d {
                let mut mono = vec![0u8; nv];
                for (site, a) in word {
                    mono[ps.var(*site, *a)] += 1;
                }
                out.add_term(mono, c.clone());
            }
        }
        out
    }
}

/// Outcome of a symbol comparison.
#[derive(Clone, Debug)]
pub struct SymbolVerdict {
    pub matches: bool,
    pub degree_mismatch: Option<(usize, usize)>,
}

/// Compare the symbol of an ordered quantum polynomial with a classical
/// polynomial. Homogeneous classical input of the top degree is compared
/// against the top symbol; inhomogeneous input against the full
/// commutative image (exact whenever ordering ambiguities are absent from
/// the quantum expression).
pub fn symbol_check(ps: &PhaseSpace, quantum: &UPoly, classical: &MPoly) -> SymbolVerdict {
    let order = quantum.order();
    let cdeg = classical.degree();
    if cdeg > order {
        return SymbolVerdict { matches: false, degree_mismatch: Some((order, cdeg)) };
    }
    let homogeneous = classical
        .terms
        .keys()
        .all(|m| m.iter().map(|&e| e as usize).sum::<usize>() == cdeg);
    let image = if homogeneous && cdeg == order {
        quantum.top_symbol(ps)
    } else {
        quantum.commutative_image(ps)
    };
    SymbolVerdict { matches: image == *classical, degree_mismatch: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::invariant_polynomials;
    use crate::rational::{q, qi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps1(label: &str) -> (PhaseSpace, Vec<MPoly>) {
        let g = SimpleLieAlgebra::from_type(label).unwrap();
        let ps = PhaseSpace::new(&g, 1).unwrap();
        let inv = invariant_polynomials(&g, &ps.form).unwrap();
        (ps, inv)
    }

    fn rand_q(rng: &mut ChaCha8Rng) -> Q {
        q(rng.gen_range(-6..=6), rng.gen_range(1..=4))
    }

    fn rand_poly(rng: &mut ChaCha8Rng, nv: usize, deg: u8, terms: usize) -> MPoly {
        let mut p = MPoly::zero(nv);
        for _ in 0..terms {
            let mut m = vec![0u8; nv];
            let d = rng.gen_range(0..=deg);
            for _ in 0..d {
                m[rng.gen_range(0..nv)] += 1;
            }
            p.add_term(m, rand_q(rng));
        }
        p
    }

    #[test]
    fn bracket_of_coordinates_is_structure_constants() {
        let (ps, _) = ps1("A2");
        let nv = ps.nvars();
        for a in 0..ps.g.dim {
            for b in 0..ps.g.dim {
                let br = ps
                    .poisson_bracket(&MPoly::var(nv, a), &MPoly::var(nv, b))
                    .unwrap();
                let mut expect = MPoly::zero(nv);
                for (c, s) in ps.g.bracket_basis(a, b) {
                    expect = expect.add(&MPoly::var(nv, *c).scale(s));
                }
                assert_eq!(br, expect);
            }
        }
    }

    #[test]
    fn bracket_laws() {
        let (ps, _) = ps1("A1");
        let nv = ps.nvars();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = rand_poly(&mut rng, nv, 3, 4);
            let g = rand_poly(&mut rng, nv, 3, 4);
            let h = rand_poly(&mut rng, nv, 2, 3);
            // antisymmetry
            let fg = ps.poisson_bracket(&f, &g).unwrap();
            let gf = ps.poisson_bracket(&g, &f).unwrap();
            assert!(fg.add(&gf).is_zero());
            assert!(ps.poisson_bracket(&f, &f).unwrap().is_zero());
            // Leibniz: {f, gh} = {f,g}h + g{f,h}
            let lhs = ps.poisson_bracket(&f, &g.mul(&h)).unwrap();
            let rhs = fg.mul(&h).add(&g.mul(&ps.poisson_bracket(&f, &h).unwrap()));
            assert_eq!(lhs, rhs);
            // Jacobi: cyclic sum vanishes
            let jac = ps
                .poisson_bracket(&f, &ps.poisson_bracket(&g, &h).unwrap())
                .unwrap()
                .add(&ps.poisson_bracket(&g, &ps.poisson_bracket(&h, &f).unwrap()).unwrap())
                .add(&ps.poisson_bracket(&h, &ps.poisson_bracket(&f, &g).unwrap()).unwrap());
            assert!(jac.is_zero());
        }
    }

    #[test]
    fn casimir_poisson_central() {
        // every invariant generator Poisson-commutes with every coordinate
        for label in ["A1", "A2", "A3"] {
            let (ps, inv) = ps1(label);
            let nv = ps.nvars();
            for (k, p) in inv.iter().enumerate() {
                for v in 0..nv {
                    let br = ps.poisson_bracket(p, &MPoly::var(nv, v)).unwrap();
                    assert!(br.is_zero(), "{label}: {{P{}, x_{v}}} != 0", k + 1);
                }
            }
        }
    }

    #[test]
    fn symbol_of_casimir_operator() {
        // Delta = 1/2 sum_a J_a J^a has symbol Pbar_1
        let (ps, inv) = ps1("A2");
        let mut terms = Vec::new();
        for a in 0..ps.g.dim {
            for (b, c) in ps.duals.gram_inv.row(a).iter().enumerate() {
                if !c.is_zero() {
                    terms.push((vec![(0usize, a), (0usize, b)], c * q(1, 2)));
                }
            }
        }
        let delta = UPoly { terms };
        assert!(symbol_check(&ps, &delta, &inv[0]).matches);
    }

    #[test]
    fn shift_arg_counts_and_commutativity_a1_a2() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for label in ["A1", "A2"] {
            let (ps, inv) = ps1(label);
            for _ in 0..3 {
                let chi: Vec<Q> = (0..ps.g.rank).map(|_| rand_q(&mut rng) + qi(8)).collect();
                let chiv = ps.chi_values_from_weight(&chi);
                let gens = shift_arg_generators(&ps, &inv, &chiv).unwrap();
                let expect: usize = ps.g.exponents.iter().map(|d| d + 1).sum();
                assert_eq!(gens.len(), expect);
                for i in 0..gens.len() {
                    for j in (i + 1)..gens.len() {
                        let br = ps.poisson_bracket(&gens[i], &gens[j]).unwrap();
                        assert!(br.is_zero(), "{label}: pair ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn chi_zero_degenerates() {
        let (ps, inv) = ps1("A2");
        let chiv = vec![Q::zero(); ps.g.dim];
        assert!(shift_arg_generators(&ps, &inv, &chiv).is_err());
        let gens = shift_arg_generators_unchecked(&ps, &inv, &chiv);
        // iterated derivatives vanish, only the invariants themselves survive
        let nonconst: Vec<&MPoly> = gens.iter().filter(|p| p.degree() >= 1).collect();
        assert_eq!(nonconst.len(), ps.g.rank);
    }

    #[test]
    fn independence_ranks_a2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (ps, inv) = ps1("A2");
        let dim_b = ps.g.rank + ps.g.num_positive_roots();
        let point: Vec<Q> = (0..ps.nvars()).map(|_| rand_q(&mut rng) + qi(3)).collect();
        // regular semisimple chi
        let chi = vec![qi(5), qi(7)];
        let chiv = ps.chi_values_from_weight(&chi);
        let gens = shift_arg_generators(&ps, &inv, &chiv).unwrap();
        assert_eq!(independence_rank(&gens, &point), dim_b);
        // regular nilpotent chi = kappa-image of e = sum of simple e's
        let mut e_sum = crate::liealg::elt_zero(ps.g.dim);
        for r in 0..ps.g.num_positive_roots() {
            if ps.g.positive_roots[r].height() == 1 {
                e_sum[ps.g.rank + r] = Q::one();
            }
        }
        let chiv_nilp: Vec<Q> = (0..ps.g.dim)
            .map(|b| ps.form.pair(&e_sum, &ps.g.basis_elt(b)))
            .collect();
        let gens = shift_arg_generators(&ps, &inv, &chiv_nilp).unwrap();
        // evaluate at the rho-check point of g*
        let mut rho_chk = crate::liealg::elt_zero(ps.g.dim);
        rho_chk[..ps.g.rank].clone_from_slice(&ps.g.rho_check);
        let rho_pt: Vec<Q> = (0..ps.g.dim)
            .map(|b| ps.form.pair(&rho_chk, &ps.g.basis_elt(b)))
            .collect();
        assert_eq!(independence_rank(&gens, &rho_pt), dim_b);
        // chi = 0: only the rank invariants
        let gens0 = shift_arg_generators_unchecked(&ps, &inv, &vec![Q::zero(); ps.g.dim]);
        assert_eq!(independence_rank(&gens0, &point), ps.g.rank);
    }

    #[test]
    fn shift_expansion_identity() {
        // Pbar_i(x + u chi) = sum_m u^m/m! D_chi^m Pbar_i(x), exactly in (x, u)
        let (ps, inv) = ps1("A2");
        let chi = ps.chi_values_from_weight(&[q(3, 2), qi(-2)]);
        for p in &inv {
            let expanded = p.shift_expand(&chi);
            let mut cur = p.clone();
            let mut fact = Q::one();
            for m in 0..=(p.degree() as u8) {
                if m > 0 {
                    cur = ps.directional(&cur, &chi);
                    fact *= Q::from(num::BigInt::from(m as i64));
                }
                assert_eq!(expanded.coeff_of_last_var(m), cur.scale(&fact.recip()));
            }
        }
    }

    #[test]
    fn classical_gaudin_small_cases() {
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        // N = 1, chi = 0: only coefficient is the Casimir at the site
        let ps = PhaseSpace::new(&g, 1).unwrap();
        let inv = invariant_polynomials(&g, &ps.form).unwrap();
        let l = LOperatorP1::new(vec![qi(0)], vec![Q::zero(); g.dim]).unwrap();
        let gens = classical_gaudin_generators(&ps, &l, &inv).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[&(0, 0, 2)], inv[0]);
        // N = 2, chi = 0: 1/(u - z_1) coefficient is (A_1, A_2)/(z_1 - z_2)
        let ps2 = PhaseSpace::new(&g, 2).unwrap();
        let l2 = LOperatorP1::new(vec![qi(0), qi(1)], vec![Q::zero(); g.dim]).unwrap();
        let gens2 = classical_gaudin_generators(&ps2, &l2, &inv).unwrap();
        let nv = ps2.nvars();
        let mut pairing = MPoly::zero(nv);
        for a in 0..g.dim {
            for (b, c) in ps2.duals.gram_inv.row(a).iter().enumerate() {
                if !c.is_zero() {
                    pairing = pairing
                        .add(&MPoly::var(nv, ps2.var(0, a)).mul(&MPoly::var(nv, ps2.var(1, b))).scale(c));
                }
            }
        }
        let expect = pairing.scale(&(qi(0) - qi(1)).recip());
        assert_eq!(gens2[&(0, 0, 1)], expect);
        // all pairs Poisson commute
        let all: Vec<&MPoly> = gens2.values().collect();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                assert!(ps2.poisson_bracket(all[i], all[j]).unwrap().is_zero());
            }
        }
        // N = 1, chi != 0: the 1/u coefficient is +(chi, A_1) with the crate sign
        let chi = vec![qi(3)];
        let chiv = ps.chi_values_from_weight(&chi);
        let l3 = LOperatorP1::new(vec![qi(0)], chiv.clone()).unwrap();
        let gens3 = classical_gaudin_generators(&ps, &l3, &inv).unwrap();
        let mut chi_pair = MPoly::zero(g.dim);
        let t_chi = ps.cartan_image(&chiv);
        for b in 0..g.dim {
            let v = ps.form.pair(&t_chi, &ps.duals.dual[b]);
            // (chi, A) = sum_b chi(J^b)-dual pairing; equivalently values of
            // t_chi against the dual basis
            if !v.is_zero() {
                chi_pair = chi_pair.add(&MPoly::var(g.dim, b).scale(&v));
            }
        }
        assert_eq!(gens3[&(0, 0, 1)], chi_pair);
        assert!(ps.poisson_bracket(&gens3[&(0, 0, 1)], &gens3[&(0, 0, 2)]).unwrap().is_zero());
    }

    #[test]
    fn vinberg_a1_and_linearity() {
        let (ps, _) = ps1("A1");
        let nv = ps.nvars();
        // gamma = chi = alpha: T = (alpha,alpha)^2/(alpha,alpha) e f = 2 e f
        let alpha = ps.g.root_weight(0);
        let t = vinberg_quadratic(&ps, &alpha, &alpha).unwrap();
        let ef = MPoly::var(nv, 1).mul(&MPoly::var(nv, 2));
        assert_eq!(t, ef.scale(&qi(2)));
        // linearity in gamma
        let g1 = vec![q(2, 3)];
        let g2 = vec![q(-1, 5)];
        let chi = vec![q(7, 4)];
        let t1 = vinberg_quadratic(&ps, &g1, &chi).unwrap();
        let t2 = vinberg_quadratic(&ps, &g2, &chi).unwrap();
        let both: Vec<Q> = vec![&g1[0] * qi(3) + &g2[0] * qi(-2)];
        let t12 = vinberg_quadratic(&ps, &both, &chi).unwrap();
        assert_eq!(t12, t1.scale(&qi(3)).add(&t2.scale(&qi(-2))));
        // non-regular chi rejected
        assert!(vinberg_quadratic(&ps, &g1, &[Q::zero()]).is_err());
    }

    #[test]
    fn quadratic_generation_identity() {
        // p_chi^(2) = q_chi^(2) + Tbar_{gamma_q}(chi), exactly, for the
        // quadratic and cubic invariants of A2 at random regular chi
        let (ps, inv) = ps1("A2");
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cartan_vars: Vec<usize> = (0..ps.g.rank).collect();
        for _ in 0..5 {
            let chi = vec![rand_q(&mut rng) + qi(7), rand_q(&mut rng) + qi(11)];
            if check_regular_weight(&ps.g, &ps.wf, &chi).is_err() {
                continue;
            }
            let chiv = ps.chi_values_from_weight(&chi);
            for p in &inv {
                let p2 = quadratic_part_along(&ps, p, &chiv);
                let q2 = p2.restrict_to(&cartan_vars);
                let gq = gamma_q(&ps, p, &chi);
                let t = vinberg_quadratic(&ps, &gq, &chi).unwrap();
                assert_eq!(p2, q2.add(&t), "identity fails for degree {}", p.degree());
            }
        }
    }

    #[test]
    fn lemma_d_eq_d() {
        // (alpha, xi) D_{e_a} D_{f_a} p_xi^(2) = D_{h_a} p (xi) at Cartan points
        let (ps, inv) = ps1("A2");
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = &inv[1]; // cubic
        for _ in 0..4 {
            let chi = vec![rand_q(&mut rng) + qi(5), rand_q(&mut rng) + qi(9)];
            let chiv = ps.chi_values_from_weight(&chi);
            let p2 = quadratic_part_along(&ps, p, &chiv);
            for r in 0..ps.g.num_positive_roots() {
                let (e, f, h) = crate::liealg::sl2_triple_for_root(&ps.g, r).unwrap();
                let alpha = ps.g.root_weight(r);
                let lhs_poly = ps.directional_along(&ps.directional_along(&p2, &f), &e);
                assert!(lhs_poly.degree() == 0);
                let lhs = ps.wf.pair(&alpha, &chi) * lhs_poly.eval(&vec![Q::zero(); ps.nvars()]);
                let rhs = ps.directional_along(p, &h).eval(&chiv);
                assert_eq!(lhs, rhs, "root {r}");
            }
        }
    }

    #[test]
    fn symbol_of_words() {
        let (ps, _) = ps1("A1");
        let nv = ps.nvars();
        // q = e f + f e (order 2): top symbol 2 ef
        let e = (0usize, 1usize);
        let f = (0usize, 2usize);
        let q_op = UPoly { terms: vec![(vec![e, f], Q::one()), (vec![f, e], Q::one())] };
        let ef2 = MPoly::var(nv, 1).mul(&MPoly::var(nv, 2)).scale(&qi(2));
        let verdict = symbol_check(&ps, &q_op, &ef2);
        assert!(verdict.matches);
        // degree mismatch is reported, not thrown
        let cubic = MPoly::var(nv, 0).mul(&MPoly::var(nv, 1)).mul(&MPoly::var(nv, 2));
        let v2 = symbol_check(&ps, &q_op, &cubic);
        assert!(!v2.matches && v2.degree_mismatch == Some((2, 3)));
    }
}
