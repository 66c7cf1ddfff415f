//! Root systems, Chevalley bases, structure constants, invariant forms,
//! invariant polynomials and principal sl2 data for simple Lie algebras.
//!
//! Type A (rank <= 4) is realized through its defining matrix
//! representation; the rest of the crate only consumes the abstract data
//! (basis, brackets, form), so other types can be slotted in behind the
//! same interface.

use crate::error::{GaudinError, Result};
use crate::linalg::QMat;
use crate::mpoly::MPoly;
use crate::rational::{format_rational, parse_rational, qi, Q};
use crate::ratfun::RatFun;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A root written in simple-root coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Root {
    pub coeffs: Vec<i64>,
}

impl Root {
    pub fn height(&self) -> i64 {
        self.coeffs.iter().sum()
    }
}

/// Label of a Chevalley basis element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    /// `h_i`, i = 1..rank
    Cartan(usize),
    /// `e_alpha`, index into `positive_roots`
    Pos(usize),
    /// `f_alpha`, index into `positive_roots`
    Neg(usize),
}

/// Coefficient vector on the Chevalley basis.
pub type Elt = Vec<Q>;

pub fn elt_zero(dim: usize) -> Elt {
    vec![Q::zero(); dim]
}

pub fn elt_add(a: &Elt, b: &Elt) -> Elt {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn elt_scale(a: &Elt, c: &Q) -> Elt {
    a.iter().map(|x| x * c).collect()
}

pub fn elt_is_zero(a: &Elt) -> bool {
    a.iter().all(|x| x.is_zero())
}

#[derive(Clone, Debug)]
pub struct SimpleLieAlgebra {
    pub label: String,
    pub rank: usize,
    pub dim: usize,
    /// `cartan[i][j] = <alpha_j, alpha_i^vee> = alpha_j(h_i)`
    pub cartan: Vec<Vec<i64>>,
    pub positive_roots: Vec<Root>,
    pub basis: Vec<BasisLabel>,
    /// Defining matrix representation of each basis element (type A).
    pub matrices: Vec<QMat>,
    /// `structure[a][b]` = sparse expansion of `[J_a, J_b]`.
    structure: Vec<Vec<Vec<(usize, Q)>>>,
    pub exponents: Vec<usize>,
    /// rho as a weight: `<rho, alpha_i^vee> = 1`.
    pub rho: Vec<Q>,
    /// rho-check in the `h_i` coordinates.
    pub rho_check: Vec<Q>,
}

impl SimpleLieAlgebra {
    /// Build the algebra for a series label. Type A with rank 1..=4 is
    /// supported.
    pub fn from_type(label: &str) -> Result<Self> {
        let label = label.trim();
        let Some(rank_str) = label.strip_prefix('A') else {
            return Err(GaudinError::UnsupportedAlgebra(label.to_string()));
        };
        let rank: usize = rank_str
            .parse()
            .map_err(|_| GaudinError::UnsupportedAlgebra(label.to_string()))?;
        if !(1..=4).contains(&rank) {
            return Err(GaudinError::UnsupportedAlgebra(label.to_string()));
        }
        Ok(Self::type_a(rank))
    }

    /// Accepts a Cartan matrix; currently only the type-A matrices are
    /// realized behind the interface.
    pub fn from_cartan(cartan: &[Vec<i64>]) -> Result<Self> {
        let rank = cartan.len();
        if (1..=4).contains(&rank) {
            let a = Self::type_a(rank);
            if a.cartan == cartan {
                return Ok(a);
            }
        }
        Err(GaudinError::UnsupportedAlgebra(format!(
            "no realization for Cartan matrix {cartan:?}"
        )))
    }

    fn type_a(rank: usize) -> Self {
        let n = rank + 1;
        // positive roots: eps_a - eps_b for a < b, coefficients alpha_a..alpha_{b-1}
        let mut positive_roots = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let mut coeffs = vec![0i64; rank];
                for c in coeffs.iter_mut().take(b).skip(a) {
                    *c = 1;
                }
                positive_roots.push(Root { coeffs });
            }
        }
        positive_roots.sort_by_key(|r| (r.height(), r.coeffs.clone()));

        let mut basis = Vec::new();
        for i in 0..rank {
            basis.push(BasisLabel::Cartan(i));
        }
        for r in 0..positive_roots.len() {
            basis.push(BasisLabel::Pos(r));
        }
        for r in 0..positive_roots.len() {
            basis.push(BasisLabel::Neg(r));
        }
        let dim = basis.len();

        let root_span = |r: &Root| -> (usize, usize) {
            let a = r.coeffs.iter().position(|&c| c == 1).unwrap();
            let b = r.coeffs.iter().rposition(|&c| c == 1).unwrap() + 1;
            (a, b)
        };

        let mut matrices = Vec::with_capacity(dim);
        for lbl in &basis {
            let mut m = QMat::zeros(n, n);
            match lbl {
                BasisLabel::Cartan(i) => {
                    m[(*i, *i)] = Q::one();
                    m[(*i + 1, *i + 1)] = -Q::one();
                }
                BasisLabel::Pos(r) => {
                    let (a, b) = root_span(&positive_roots[*r]);
                    m[(a, b)] = Q::one();
                }
                BasisLabel::Neg(r) => {
                    let (a, b) = root_span(&positive_roots[*r]);
                    m[(b, a)] = Q::one();
                }
            }
            matrices.push(m);
        }

        let matrix_to_elt = |m: &QMat| -> Elt {
            let mut out = elt_zero(dim);
            // diagonal part onto h_k via partial sums
            let mut acc = Q::zero();
            for k in 0..rank {
                acc += &m[(k, k)];
                out[k] = acc.clone();
            }
            for (ri, r) in positive_roots.iter().enumerate() {
                let (a, b) = root_span(r);
                out[rank + ri] = m[(a, b)].clone();
                out[rank + positive_roots.len() + ri] = m[(b, a)].clone();
            }
            out
        };

        let mut structure = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                let br = matrices[a].mul(&matrices[b]).sub(&matrices[b].mul(&matrices[a]));
                let elt = matrix_to_elt(&br);
                structure[a][b] = elt
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (i, c.clone()))
                    .collect();
            }
        }

        let cartan: Vec<Vec<i64>> = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        if i == j {
                            2
                        } else if i.abs_diff(j) == 1 {
                            -1
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();

        // rho-check solves alpha_j(rho_check) = 1 for all j
        let a_mat = QMat::from_rows(
            (0..rank)
                .map(|i| (0..rank).map(|j| qi(cartan[i][j])).collect())
                .collect(),
        );
        let rho_check = a_mat.transpose().solve(&vec![Q::one(); rank]).expect("Cartan matrix invertible");

        SimpleLieAlgebra {
            label: format!("A{rank}"),
            rank,
            dim,
            cartan,
            positive_roots,
            basis,
            matrices,
            structure,
            exponents: (1..=rank).collect(),
            rho: vec![Q::one(); rank],
            rho_check,
        }
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    pub fn basis_index(&self, lbl: &BasisLabel) -> usize {
        match lbl {
            BasisLabel::Cartan(i) => *i,
            BasisLabel::Pos(r) => self.rank + r,
            BasisLabel::Neg(r) => self.rank + self.num_positive_roots() + r,
        }
    }

    pub fn basis_elt(&self, idx: usize) -> Elt {
        let mut e = elt_zero(self.dim);
        e[idx] = Q::one();
        e
    }

    pub fn basis_name(&self, idx: usize) -> String {
        match &self.basis[idx] {
            BasisLabel::Cartan(i) => format!("h{}", i + 1),
            BasisLabel::Pos(r) => format!("e[{:?}]", self.positive_roots[*r].coeffs),
            BasisLabel::Neg(r) => format!("f[{:?}]", self.positive_roots[*r].coeffs),
        }
    }

    /// Principal degree of a basis element (root height; 0 on the Cartan).
    pub fn principal_degree(&self, idx: usize) -> i64 {
        match &self.basis[idx] {
            BasisLabel::Cartan(_) => 0,
            BasisLabel::Pos(r) => self.positive_roots[*r].height(),
            BasisLabel::Neg(r) => -self.positive_roots[*r].height(),
        }
    }

    pub fn bracket_basis(&self, a: usize, b: usize) -> &[(usize, Q)] {
        &self.structure[a][b]
    }

    pub fn bracket(&self, x: &Elt, y: &Elt) -> Elt {
        let mut out = elt_zero(self.dim);
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() {
                    continue;
                }
                let f = xa * yb;
                for (c, s) in &self.structure[a][b] {
                    out[*c] += s * &f;
                }
            }
        }
        out
    }

    /// Bracket with rational-function coefficients (used by the oper engine).
    pub fn bracket_rf(&self, x: &[RatFun], y: &[RatFun]) -> Vec<RatFun> {
        let mut out = vec![RatFun::zero(); self.dim];
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() {
                    continue;
                }
                let f = xa.mul(yb);
                for (c, s) in &self.structure[a][b] {
                    out[*c] = out[*c].add(&f.scale_q(s));
                }
            }
        }
        out
    }

    /// Matrix of `ad x` on the Chevalley basis.
    pub fn ad(&self, x: &Elt) -> QMat {
        let mut m = QMat::zeros(self.dim, self.dim);
        for b in 0..self.dim {
            let col = self.bracket(x, &self.basis_elt(b));
            for (r, v) in col.into_iter().enumerate() {
                m[(r, b)] = v;
            }
        }
        m
    }

    /// Matrix realization of an abstract element.
    pub fn matrix_of(&self, x: &Elt) -> QMat {
        let n = self.matrices[0].rows;
        let mut m = QMat::zeros(n, n);
        for (a, c) in x.iter().enumerate() {
            if !c.is_zero() {
                m = m.add(&self.matrices[a].scale(c));
            }
        }
        m
    }

    /// `alpha(h_i)` pairings of a positive root, as a weight vector.
    pub fn root_weight(&self, root_idx: usize) -> Vec<Q> {
        let r = &self.positive_roots[root_idx];
        (0..self.rank)
            .map(|i| {
                let mut s = 0i64;
                for (j, &c) in r.coeffs.iter().enumerate() {
                    s += self.cartan[i][j] * c;
                }
                qi(s)
            })
            .collect()
    }

    /// Evaluate a weight on a Cartan element given in `h_i` coordinates.
    pub fn weight_on_cartan(&self, weight: &[Q], h_coords: &[Q]) -> Q {
        weight.iter().zip(h_coords).map(|(w, c)| w * c).sum()
    }

    pub fn positive_root_index(&self, coeffs: &[i64]) -> Result<usize> {
        self.positive_roots
            .iter()
            .position(|r| r.coeffs == coeffs)
            .ok_or_else(|| GaudinError::NotARoot(format!("{coeffs:?}")))
    }

    /// Highest root.
    pub fn theta_index(&self) -> usize {
        (0..self.num_positive_roots())
            .max_by_key(|&r| self.positive_roots[r].height())
            .unwrap()
    }

    pub fn serialize_doc(&self) -> AlgebraDoc {
        AlgebraDoc {
            version: 1,
            label: self.label.clone(),
            rank: self.rank,
            cartan: self.cartan.clone(),
            basis: (0..self.dim).map(|i| self.basis_name(i)).collect(),
            structure: {
                let mut triples = Vec::new();
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        for (c, v) in &self.structure[a][b] {
                            triples.push((a, b, *c, format_rational(v)));
                        }
                    }
                }
                triples
            },
        }
    }
}

/// Versioned wire format for algebra data.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct AlgebraDoc {
    pub version: u32,
    pub label: String,
    pub rank: usize,
    pub cartan: Vec<Vec<i64>>,
    pub basis: Vec<String>,
    /// `(a, b, c, coeff)` meaning `[J_a, J_b] ∋ coeff · J_c`.
    pub structure: Vec<(usize, usize, usize, String)>,
}

impl AlgebraDoc {
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: AlgebraDoc =
            serde_json::from_str(s).map_err(|e| GaudinError::Parse(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(GaudinError::Parse(format!("unknown version {}", self.version)));
        }
        let dim = self.basis.len();
        if self.cartan.len() != self.rank || self.cartan.iter().any(|r| r.len() != self.rank) {
            return Err(GaudinError::Parse("cartan matrix shape mismatch".into()));
        }
        for (a, b, c, v) in &self.structure {
            if *a >= dim || *b >= dim || *c >= dim {
                return Err(GaudinError::Parse("structure index out of range".into()));
            }
            parse_rational(v)?;
        }
        Ok(())
    }
}

/// Symmetric invariant form on the Chevalley basis.
#[derive(Clone, Debug)]
pub struct InvariantForm {
    pub gram: QMat,
    pub normalization: String,
}

impl InvariantForm {
    /// Trace form of the defining representation; for type A this has
    /// `(theta, theta) = 2`.
    pub fn trace_form(g: &SimpleLieAlgebra) -> Self {
        let mut gram = QMat::zeros(g.dim, g.dim);
        for a in 0..g.dim {
            for b in 0..g.dim {
                gram[(a, b)] = g.matrices[a].mul(&g.matrices[b]).trace();
            }
        }
        InvariantForm { gram, normalization: "trace".into() }
    }

    /// Critical form `-h^vee * kappa_0` (for type A, `kappa_0` is the trace
    /// form and `h^vee = rank + 1`).
    pub fn critical(g: &SimpleLieAlgebra) -> Self {
        let t = Self::trace_form(g);
        let hv = qi(g.rank as i64 + 1);
        InvariantForm { gram: t.gram.scale(&-hv), normalization: "critical".into() }
    }

    pub fn pair(&self, x: &Elt, y: &Elt) -> Q {
        let mut s = Q::zero();
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if !yb.is_zero() {
                    s += &self.gram[(a, b)] * &(xa * yb);
                }
            }
        }
        s
    }

    /// Exact ad-invariance: kappa([x,y],z) + kappa(y,[x,z]) = 0 on basis triples.
    pub fn is_ad_invariant(&self, g: &SimpleLieAlgebra) -> bool {
        for a in 0..g.dim {
            let ea = g.basis_elt(a);
            for b in 0..g.dim {
                let eb = g.basis_elt(b);
                let br_ab = g.bracket(&ea, &eb);
                for c in 0..g.dim {
                    let ec = g.basis_elt(c);
                    let br_ac = g.bracket(&ea, &ec);
                    let s = self.pair(&br_ab, &ec) + self.pair(&eb, &br_ac);
                    if !s.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Basis together with its kappa-dual basis.
#[derive(Clone, Debug)]
pub struct DualBasisPair {
    /// `dual[a]` is the element `J^a` with `kappa(J_a, J^b) = delta_a^b`.
    pub dual: Vec<Elt>,
    pub gram_inv: QMat,
}

pub fn dual_bases(g: &SimpleLieAlgebra, form: &InvariantForm) -> Result<DualBasisPair> {
    let gram_inv = form.gram.inverse().map_err(|_| GaudinError::SingularForm)?;
    let dual = (0..g.dim)
        .map(|a| (0..g.dim).map(|b| gram_inv[(a, b)].clone()).collect())
        .collect();
    Ok(DualBasisPair { dual, gram_inv })
}

/// Principal sl2 and canonical-subspace data.
#[derive(Clone, Debug)]
pub struct PrincipalData {
    pub p_minus1: Elt,
    pub two_rho_check: Elt,
    pub p_1: Elt,
    /// Canonical generators `p_j`, one per exponent, in exponent order.
    pub canonical: Vec<(usize, Elt)>,
}

pub fn principal_data(g: &SimpleLieAlgebra) -> PrincipalData {
    let npos = g.num_positive_roots();
    let mut p_minus1 = elt_zero(g.dim);
    for r in 0..npos {
        if g.positive_roots[r].height() == 1 {
            p_minus1[g.rank + npos + r] = Q::one();
        }
    }
    let mut two_rho_check = elt_zero(g.dim);
    for i in 0..g.rank {
        two_rho_check[i] = &g.rho_check[i] * &qi(2);
    }
    // p_1 = sum c_i e_i with c = coordinates of 2 rho-check
    let mut p_1 = elt_zero(g.dim);
    for r in 0..npos {
        if let Some(i) = simple_index(&g.positive_roots[r]) {
            p_1[g.rank + r] = &g.rho_check[i] * &qi(2);
        }
    }

    // V_can,d = ker(ad p_1 : n_d -> n_{d+1}) for each exponent d, computed
    // from the rref kernel for determinism. Degree 1 uses p_1 itself.
    let mut canonical = Vec::new();
    for &d in &g.exponents {
        if d == 1 {
            canonical.push((1, p_1.clone()));
            continue;
        }
        let deg_roots: Vec<usize> = (0..npos)
            .filter(|&r| g.positive_roots[r].height() == d as i64)
            .collect();
        let target: Vec<usize> = (0..npos)
            .filter(|&r| g.positive_roots[r].height() == d as i64 + 1)
            .collect();
        let mut m = QMat::zeros(target.len(), deg_roots.len());
        for (col, &r) in deg_roots.iter().enumerate() {
            let br = g.bracket(&p_1, &g.basis_elt(g.rank + r));
            for (row, &t) in target.iter().enumerate() {
                m[(row, col)] = br[g.rank + t].clone();
            }
        }
        for v in m.kernel_basis() {
            let mut elt = elt_zero(g.dim);
            for (col, &r) in deg_roots.iter().enumerate() {
                elt[g.rank + r] = v[col].clone();
            }
            canonical.push((d, elt));
        }
    }
    canonical.sort_by_key(|(d, _)| *d);
    PrincipalData { p_minus1, two_rho_check, p_1, canonical }
}

fn simple_index(r: &Root) -> Option<usize> {
    if r.height() == 1 {
        r.coeffs.iter().position(|&c| c == 1)
    } else {
        None
    }
}

/// sl2 triple `(e_alpha, f_alpha, h_alpha)` for a positive root, with
/// `h_alpha = [e_alpha, f_alpha]`.
pub fn sl2_triple_for_root(
    g: &SimpleLieAlgebra,
    root_idx: usize,
) -> Result<(Elt, Elt, Elt)> {
    if root_idx >= g.num_positive_roots() {
        return Err(GaudinError::NotARoot(format!("index {root_idx}")));
    }
    let e = g.basis_elt(g.rank + root_idx);
    let f = g.basis_elt(g.rank + g.num_positive_roots() + root_idx);
    let h = g.bracket(&e, &f);
    Ok((e, f, h))
}

/// The weight-side bilinear form induced by kappa, and the h* <-> h
/// identification used everywhere chi in h* acts as an element of U(g).
#[derive(Clone, Debug)]
pub struct WeightForm {
    pub h_gram: QMat,
    pub h_gram_inv: QMat,
}

impl WeightForm {
    pub fn new(g: &SimpleLieAlgebra, form: &InvariantForm) -> Result<Self> {
        let mut h_gram = QMat::zeros(g.rank, g.rank);
        for i in 0..g.rank {
            for j in 0..g.rank {
                h_gram[(i, j)] = form.gram[(i, j)].clone();
            }
        }
        let h_gram_inv = h_gram.inverse().map_err(|_| GaudinError::SingularForm)?;
        Ok(WeightForm { h_gram, h_gram_inv })
    }

    /// `t_lambda` in `h_i` coordinates: kappa(t_lambda, h) = lambda(h).
    pub fn cartan_dual(&self, weight: &[Q]) -> Vec<Q> {
        self.h_gram_inv.mul_vec(weight)
    }

    /// `(lambda, mu)` on h*.
    pub fn pair(&self, a: &[Q], b: &[Q]) -> Q {
        let ta = self.cartan_dual(a);
        b.iter().zip(&ta).map(|(x, y)| x * y).sum()
    }

    /// kappa-image of a Cartan element, as a weight vector.
    pub fn weight_of_cartan(&self, h_coords: &[Q]) -> Vec<Q> {
        self.h_gram.mul_vec(h_coords)
    }
}

/// Regularity of a weight chi in h*: `(alpha, chi) != 0` for all positive
/// roots. Returns the offending root on failure.
pub fn check_regular_weight(
    g: &SimpleLieAlgebra,
    wf: &WeightForm,
    chi: &[Q],
) -> Result<()> {
    for (ri, _) in g.positive_roots.iter().enumerate() {
        let a = g.root_weight(ri);
        if wf.pair(&a, chi).is_zero() {
            return Err(GaudinError::NotRegular(format!(
                "(alpha, chi) = 0 for root {:?}",
                g.positive_roots[ri].coeffs
            )));
        }
    }
    Ok(())
}

/// Invariant polynomial generators for type A: signed coefficients of the
/// characteristic polynomial of the kappa-image matrix, normalized so that
/// the quadratic generator is `1/2 sum_a Jbar_a Jbar^a`.
pub fn invariant_polynomials(
    g: &SimpleLieAlgebra,
    form: &InvariantForm,
) -> Result<Vec<MPoly>> {
    if !g.label.starts_with('A') {
        return Err(GaudinError::UnsupportedAlgebra(g.label.clone()));
    }
    let duals = dual_bases(g, form)?;
    let n = g.rank + 1;
    let nv = g.dim;
    // X(xi) = sum_a x_a M(J^a), an n x n matrix of linear polynomials
    let mut x_mat: Vec<Vec<MPoly>> = vec![vec![MPoly::zero(nv); n]; n];
    for a in 0..nv {
        let m = g.matrix_of(&duals.dual[a]);
        for i in 0..n {
            for j in 0..n {
                if !m[(i, j)].is_zero() {
                    let v = MPoly::var(nv, a).scale(&m[(i, j)]);
                    x_mat[i][j] = x_mat[i][j].add(&v);
                }
            }
        }
    }
    // power sums via repeated multiplication
    let mat_mul = |a: &Vec<Vec<MPoly>>, b: &Vec<Vec<MPoly>>| -> Vec<Vec<MPoly>> {
        let mut c = vec![vec![MPoly::zero(nv); n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !b[k][j].is_zero() {
                        c[i][j] = c[i][j].add(&a[i][k].mul(&b[k][j]));
                    }
                }
            }
        }
        c
    };
    let trace = |a: &Vec<Vec<MPoly>>| -> MPoly {
        let mut t = MPoly::zero(nv);
        for i in 0..n {
            t = t.add(&a[i][i]);
        }
        t
    };
    let mut powers = Vec::with_capacity(n);
    let mut cur = x_mat.clone();
    powers.push(trace(&cur)); // p_1
    for _ in 2..=n {
        cur = mat_mul(&cur, &x_mat);
        powers.push(trace(&cur));
    }
    // Newton's identities: k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i
    let mut elem: Vec<MPoly> = vec![MPoly::constant(nv, Q::one())]; // e_0 = 1
    for k in 1..=n {
        let mut s = MPoly::zero(nv);
        for i in 1..=k {
            let term = elem[k - i].mul(&powers[i - 1]);
            if i % 2 == 1 {
                s = s.add(&term);
            } else {
                s = s.sub(&term);
            }
        }
        elem.push(s.scale(&Q::new(1.into(), (k as i64).into())));
    }
    // Pbar_k = (-1)^k e_{k+1}, degrees 2..rank+1
    let mut out = Vec::with_capacity(g.rank);
    for k in 1..=g.rank {
        let p = if k % 2 == 1 { elem[k + 1].neg() } else { elem[k + 1].clone() };
        out.push(p);
    }
    Ok(out)
}

/// Gradation dimensions: principal degree -> dimension.
pub fn principal_gradation(g: &SimpleLieAlgebra) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for i in 0..g.dim {
        *m.entry(g.principal_degree(i)).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn all_types() -> Vec<SimpleLieAlgebra> {
        (1..=4).map(|r| SimpleLieAlgebra::from_type(&format!("A{r}")).unwrap()).collect()
    }

    #[test]
    fn dimensions_and_exponents() {
        let a1 = SimpleLieAlgebra::from_type("A1").unwrap();
        assert_eq!(a1.dim, 3);
        assert_eq!(a1.num_positive_roots(), 1);
        let a2 = SimpleLieAlgebra::from_type("A2").unwrap();
        assert_eq!(a2.dim, 8);
        assert_eq!(a2.num_positive_roots(), 3);
        assert_eq!(a2.exponents, vec![1, 2]);
        let a3 = SimpleLieAlgebra::from_type("A3").unwrap();
        // sum of (d_i + 1) equals dim of a Borel
        let borel: usize = a3.exponents.iter().map(|d| d + 1).sum();
        assert_eq!(borel, a3.rank + a3.num_positive_roots());
        assert!(SimpleLieAlgebra::from_type("B2").is_err());
        assert!(SimpleLieAlgebra::from_type("A9").is_err());
    }

    #[test]
    fn jacobi_identity_exact() {
        for g in all_types() {
            for a in 0..g.dim {
                let ea = g.basis_elt(a);
                for b in 0..g.dim {
                    let eb = g.basis_elt(b);
                    for c in 0..g.dim {
                        let ec = g.basis_elt(c);
                        let s = elt_add(
                            &elt_add(
                                &g.bracket(&g.bracket(&ea, &eb), &ec),
                                &g.bracket(&g.bracket(&eb, &ec), &ea),
                            ),
                            &g.bracket(&g.bracket(&ec, &ea), &eb),
                        );
                        assert!(elt_is_zero(&s), "Jacobi fails on ({a},{b},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn cartan_acts_by_root_pairings() {
        for g in all_types() {
            for i in 0..g.rank {
                let h = g.basis_elt(i);
                for r in 0..g.num_positive_roots() {
                    let e = g.basis_elt(g.rank + r);
                    let br = g.bracket(&h, &e);
                    let expect = elt_scale(&e, &g.root_weight(r)[i]);
                    assert_eq!(br, expect);
                }
            }
        }
    }

    #[test]
    fn trace_form_invariance_and_duals() {
        for g in all_types() {
            let k = InvariantForm::trace_form(&g);
            assert!(k.is_ad_invariant(&g));
            let d = dual_bases(&g, &k).unwrap();
            for a in 0..g.dim {
                for b in 0..g.dim {
                    let v = k.pair(&g.basis_elt(a), &d.dual[b]);
                    assert_eq!(v, if a == b { Q::one() } else { Q::zero() });
                }
            }
        }
    }

    #[test]
    fn critical_form_is_scaled_trace_form() {
        for g in all_types().into_iter().take(3) {
            let k0 = InvariantForm::trace_form(&g);
            let kc = InvariantForm::critical(&g);
            let hv = qi(g.rank as i64 + 1);
            assert_eq!(kc.gram, k0.gram.scale(&-hv));
            // matches -1/2 tr(ad x ad y) on a sample pair
            let x = g.basis_elt(0);
            let y = g.basis_elt(g.rank); // first e_alpha
            let adx = g.ad(&x);
            let ady = g.ad(&y);
            let tr = adx.mul(&ady).trace();
            assert_eq!(kc.pair(&x, &y), -tr / qi(2));
        }
    }

    #[test]
    fn a1_duals_are_f_e_half_h() {
        // oracle: invert the 3x3 Gram matrix by hand-checkable content
        let g = SimpleLieAlgebra::from_type("A1").unwrap();
        let k = InvariantForm::trace_form(&g);
        let d = dual_bases(&g, &k).unwrap();
        // basis order: h, e, f -> duals h/2, f, e
        assert_eq!(d.dual[0], vec![q(1, 2), q(0, 1), q(0, 1)]);
        assert_eq!(d.dual[1], vec![q(0, 1), q(0, 1), q(1, 1)]);
        assert_eq!(d.dual[2], vec![q(0, 1), q(1, 1), q(0, 1)]);
    }

    #[test]
    fn split_casimir_is_invariant() {
        // sum_a [x, J_a] (x) J^a + J_a (x) [x, J^a] = 0 for every basis x
        for g in all_types().into_iter().take(3) {
            let k = InvariantForm::trace_form(&g);
            let d = dual_bases(&g, &k).unwrap();
            for x in 0..g.dim {
                let ex = g.basis_elt(x);
                let mut tensor = vec![vec![Q::zero(); g.dim]; g.dim];
                for a in 0..g.dim {
                    let br = g.bracket(&ex, &g.basis_elt(a));
                    for (i, c) in br.iter().enumerate() {
                        if !c.is_zero() {
                            for (j, dj) in d.dual[a].iter().enumerate() {
                                tensor[i][j] += c * dj;
                            }
                        }
                    }
                    let brd = g.bracket(&ex, &d.dual[a]);
                    for (j, c) in brd.iter().enumerate() {
                        if !c.is_zero() {
                            tensor[a][j] += c;
                        }
                    }
                }
                assert!(tensor.iter().flatten().all(|v| v.is_zero()));
            }
        }
    }

    #[test]
    fn principal_sl2_and_canonical_space() {
        for g in all_types() {
            let pd = principal_data(&g);
            // sl2 relations
            let h = g.bracket(&pd.p_1, &pd.p_minus1);
            assert_eq!(h, pd.two_rho_check);
            assert_eq!(g.bracket(&pd.two_rho_check, &pd.p_1), elt_scale(&pd.p_1, &qi(2)));
            assert_eq!(
                g.bracket(&pd.two_rho_check, &pd.p_minus1),
                elt_scale(&pd.p_minus1, &qi(-2))
            );
            // canonical degrees equal exponents, one generator each for type A
            let degs: Vec<usize> = pd.canonical.iter().map(|(d, _)| *d).collect();
            assert_eq!(degs, g.exponents);
            for (_, p) in &pd.canonical {
                assert!(elt_is_zero(&g.bracket(&pd.p_1, p)));
            }
        }
    }

    #[test]
    fn a2_canonical_dims() {
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let pd = principal_data(&g);
        assert_eq!(pd.canonical.len(), 2);
        assert_eq!(pd.canonical[0].0, 1);
        assert_eq!(pd.canonical[1].0, 2);
    }

    #[test]
    fn gradation_matches_height_distribution() {
        for g in all_types() {
            let grading = principal_gradation(&g);
            assert_eq!(grading[&0], g.rank);
            let max_h = g.positive_roots.iter().map(|r| r.height()).max().unwrap();
            for d in 1..=max_h {
                let count = g.positive_roots.iter().filter(|r| r.height() == d).count();
                assert_eq!(grading[&d], count);
                assert_eq!(grading[&-d], count);
            }
        }
    }

    #[test]
    fn highest_root_triple() {
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let theta = g.theta_index();
        let (_, _, h) = sl2_triple_for_root(&g, theta).unwrap();
        // h_theta = h_1 + h_2
        let mut expect = elt_zero(g.dim);
        expect[0] = Q::one();
        expect[1] = Q::one();
        assert_eq!(h, expect);
    }

    #[test]
    fn quadratic_invariant_is_half_casimir() {
        for g in all_types().into_iter().take(3) {
            let k = InvariantForm::trace_form(&g);
            let d = dual_bases(&g, &k).unwrap();
            let ps = invariant_polynomials(&g, &k).unwrap();
            // 1/2 sum_a xbar_a xbar^a with xbar^a = sum_b (G^-1)_{ab} x_b
            let mut cas = MPoly::zero(g.dim);
            for a in 0..g.dim {
                for b in 0..g.dim {
                    let c = &d.gram_inv[(a, b)];
                    if !c.is_zero() {
                        cas = cas.add(&MPoly::var(g.dim, a).mul(&MPoly::var(g.dim, b)).scale(c));
                    }
                }
            }
            cas = cas.scale(&q(1, 2));
            assert_eq!(ps[0], cas, "P1 != half Casimir for {}", g.label);
            for (i, p) in ps.iter().enumerate() {
                assert_eq!(p.degree(), i + 2);
            }
        }
    }

    #[test]
    fn a2_cubic_at_diagonal_point() {
        // Pbar_2 at a diagonal traceless point equals det of the matrix
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let k = InvariantForm::trace_form(&g);
        let ps = invariant_polynomials(&g, &k).unwrap();
        // point xi with xi(J_a) = kappa(X, J_a) for X = diag(a, b, -a-b)
        let (a, b) = (q(2, 1), q(-1, 3));
        let mut x = QMat::zeros(3, 3);
        x[(0, 0)] = a.clone();
        x[(1, 1)] = b.clone();
        x[(2, 2)] = -(&a + &b);
        let point: Vec<Q> = (0..g.dim).map(|i| g.matrices[i].mul(&x).trace()).collect();
        let det = &a * &b * (-(&a + &b));
        assert_eq!(ps[1].eval(&point), det);
        assert_eq!(ps[0].eval(&point), x.mul(&x).trace() * q(1, 2));
    }

    #[test]
    fn weight_form_and_regularity() {
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let k = InvariantForm::trace_form(&g);
        let wf = WeightForm::new(&g, &k).unwrap();
        // (alpha_i, alpha_i) = 2 under the trace form
        let a1 = g.root_weight(0);
        assert_eq!(wf.pair(&a1, &a1), qi(2));
        // rho is regular, chi with (alpha_1, chi) = 0 is not
        assert!(check_regular_weight(&g, &wf, &g.rho).is_ok());
        let chi = vec![Q::zero(), Q::one()];
        assert!(check_regular_weight(&g, &wf, &chi).is_err());
    }

    #[test]
    fn algebra_doc_roundtrip() {
        let g = SimpleLieAlgebra::from_type("A2").unwrap();
        let doc = g.serialize_doc();
        let s = serde_json::to_string(&doc).unwrap();
        let back = AlgebraDoc::from_json(&s).unwrap();
        assert_eq!(back.label, "A2");
        assert_eq!(back.basis.len(), 8);
    }
}
