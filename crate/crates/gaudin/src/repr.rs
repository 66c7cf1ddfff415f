//! Finite-dimensional irreducibles and truncated Verma modules in explicit
//! weight bases, plus tensor products with per-site and diagonal actions.
//!
//! Irreps are built as Verma weight spaces modulo the kernel of the
//! Shapovalov form, all in exact rational arithmetic. PBW monomials are
//! exponent vectors over the positive roots in the algebra's root order.

use crate::error::{GaudinError, Result};
use crate::linalg::QMat;
use crate::liealg::{BasisLabel, Elt, SimpleLieAlgebra};
use crate::rational::{q_to_f64, C64, Q};
use num::{One, Zero};
use std::collections::{BTreeMap, HashMap};

/// PBW exponent vector over the positive roots.
pub type Monomial = Vec<u32>;

/// A vector in a Verma module: linear combination of PBW monomials.
pub type VermaVec = BTreeMap<Monomial, Q>;

fn vv_add_term(v: &mut VermaVec, m: Monomial, c: Q) {
    if c.is_zero() {
        return;
    }
    match v.entry(m) {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
    }
}

fn monomial_height(g: &SimpleLieAlgebra, m: &Monomial) -> i64 {
    m.iter()
        .enumerate()
        .map(|(r, &e)| g.positive_roots[r].height() * e as i64)
        .sum()
}

/// Weight of a monomial applied to the highest weight vector.
fn monomial_weight(g: &SimpleLieAlgebra, lambda: &[Q], m: &Monomial) -> Vec<Q> {
    let mut w = lambda.to_vec();
    for (r, &e) in m.iter().enumerate() {
        if e > 0 {
            let rw = g.root_weight(r);
            for i in 0..g.rank {
                w[i] -= &rw[i] * Q::from(num::BigInt::from(e));
            }
        }
    }
    w
}

/// Left-multiply a PBW monomial by `f_r`, straightening back to PBW order.
fn mul_f(g: &SimpleLieAlgebra, r: usize, m: &Monomial) -> VermaVec {
    let mut out = VermaVec::new();
    let first = m.iter().position(|&e| e > 0);
    match first {
        None => {
            let mut m2 = m.clone();
            m2[r] += 1;
            out.insert(m2, Q::one());
        }
        Some(first) if r <= first => {
            let mut m2 = m.clone();
            m2[r] += 1;
            out.insert(m2, Q::one());
        }
        Some(first) => {
            // f_r f_first X = f_first (f_r X) + [f_r, f_first] X
            let mut m1 = m.clone();
            m1[first] -= 1;
            let inner = mul_f(g, r, &m1);
            for (mm, c) in inner {
                let mut m2 = mm;
                m2[first] += 1;
                vv_add_term(&mut out, m2, c);
            }
            let fa = g.rank + g.num_positive_roots() + r;
            let fb = g.rank + g.num_positive_roots() + first;
            for (idx, s) in g.bracket_basis(fa, fb) {
                match &g.basis[*idx] {
                    BasisLabel::Neg(k) => {
                        let sub = mul_f(g, *k, &m1);
                        for (mm, c) in sub {
                            vv_add_term(&mut out, mm, &c * s);
                        }
                    }
                    _ => unreachable!("bracket of two negative root vectors stays in n_-"),
                }
            }
        }
    }
    out
}

/// Act by `e_i` (simple) on a PBW monomial of a Verma with highest weight
/// `lambda`.
fn act_e_simple(
    g: &SimpleLieAlgebra,
    lambda: &[Q],
    i: usize,
    m: &Monomial,
) -> VermaVec {
    let mut out = VermaVec::new();
    let Some(first) = m.iter().position(|&e| e > 0) else {
        return out; // e_i annihilates the highest weight vector
    };
    let mut m1 = m.clone();
    m1[first] -= 1;
    // e_i (f_first m1) = f_first (e_i m1) + [e_i, f_first] m1
    let inner = act_e_simple(g, lambda, i, &m1);
    for (mm, c) in inner {
        let shifted = mul_f(g, first, &mm);
        for (m2, c2) in shifted {
            vv_add_term(&mut out, m2, &c * &c2);
        }
    }
    let simple_root_idx = g
        .positive_root_index(
            &(0..g.rank).map(|k| if k == i { 1 } else { 0 }).collect::<Vec<_>>(),
        )
        .expect("simple roots are positive roots");
    let ea = g.rank + simple_root_idx;
    let fb = g.rank + g.num_positive_roots() + first;
    for (idx, s) in g.bracket_basis(ea, fb) {
        match &g.basis[*idx] {
            BasisLabel::Cartan(_) => {
                // h component acts on m1 by its weight
                let w = monomial_weight(g, lambda, &m1);
                let mut h_coords = vec![Q::zero(); g.rank];
                // idx < rank by construction
                h_coords[*idx] = s.clone();
                let val = g.weight_on_cartan(&w, &h_coords);
                vv_add_term(&mut out, m1.clone(), val);
            }
            BasisLabel::Neg(k) => {
                let sub = mul_f(g, *k, &m1);
                for (mm, c) in sub {
                    vv_add_term(&mut out, mm, &c * s);
                }
            }
            BasisLabel::Pos(_) => unreachable!("[e_i, f_beta] has no positive part"),
        }
    }
    out
}

/// Act by an arbitrary Chevalley basis element on a Verma vector.
pub fn verma_act_basis(
    g: &SimpleLieAlgebra,
    lambda: &[Q],
    basis_idx: usize,
    v: &VermaVec,
) -> VermaVec {
    let mut out = VermaVec::new();
    match &g.basis[basis_idx].clone() {
        BasisLabel::Cartan(i) => {
            for (m, c) in v {
                let w = monomial_weight(g, lambda, m);
                vv_add_term(&mut out, m.clone(), &w[*i] * c);
            }
        }
        BasisLabel::Neg(r) => {
            for (m, c) in v {
                let prod = mul_f(g, *r, m);
                for (mm, cc) in prod {
                    vv_add_term(&mut out, mm, &cc * c);
                }
            }
        }
        BasisLabel::Pos(r) => {
            let root = &g.positive_roots[*r];
            if root.height() == 1 {
                let i = root.coeffs.iter().position(|&c| c == 1).unwrap();
                for (m, c) in v {
                    let res = act_e_simple(g, lambda, i, m);
                    for (mm, cc) in res {
                        vv_add_term(&mut out, mm, &cc * c);
                    }
                }
            } else {
                // e_beta = [e_i, e_gamma]/N for some simple i
                let (i_idx, g_idx, n) = decompose_root(g, *r);
                let a = verma_act_basis(g, lambda, g.rank + g_idx, v);
                let a = verma_act_basis(g, lambda, g.rank + i_idx, &a);
                let b = verma_act_basis(g, lambda, g.rank + i_idx, v);
                let b = verma_act_basis(g, lambda, g.rank + g_idx, &b);
                let ninv = n.recip();
                for (m, c) in a {
                    vv_add_term(&mut out, m, &c * &ninv);
                }
                for (m, c) in b {
                    vv_add_term(&mut out, m, -(&c * &ninv));
                }
            }
        }
    }
    out
}

/// Write a non-simple positive root as `alpha_i + gamma` with
/// `[e_i, e_gamma] = N e_root`, `N != 0`. Returns root indices of
/// `alpha_i` and `gamma` and the constant `N`.
fn decompose_root(g: &SimpleLieAlgebra, root_idx: usize) -> (usize, usize, Q) {
    let root = &g.positive_roots[root_idx];
    for i in 0..g.rank {
        if root.coeffs[i] == 0 {
            continue;
        }
        let mut gamma = root.coeffs.clone();
        gamma[i] -= 1;
        let Ok(g_idx) = g.positive_root_index(&gamma) else {
            continue;
        };
        let simple_idx = g
            .positive_root_index(
                &(0..g.rank).map(|k| if k == i { 1 } else { 0 }).collect::<Vec<_>>(),
            )
            .unwrap();
        for (idx, s) in g.bracket_basis(g.rank + simple_idx, g.rank + g_idx) {
            if *idx == g.rank + root_idx && !s.is_zero() {
                return (simple_idx, g_idx, s.clone());
            }
        }
    }
    unreachable!("every positive root decomposes through a simple root")
}

/// Shapovalov form evaluator with memoization, for a fixed highest weight.
pub struct Shapovalov<'g> {
    g: &'g SimpleLieAlgebra,
    lambda: Vec<Q>,
    cache: HashMap<(Monomial, Monomial), Q>,
}

impl<'g> Shapovalov<'g> {
    pub fn new(g: &'g SimpleLieAlgebra, lambda: &[Q]) -> Self {
        Shapovalov { g, lambda: lambda.to_vec(), cache: HashMap::new() }
    }

    /// `< m, m' >` for monomials of equal weight.
    pub fn pair(&mut self, a: &Monomial, b: &Monomial) -> Q {
        if a.iter().all(|&e| e == 0) {
            return if b.iter().all(|&e| e == 0) { Q::one() } else { Q::zero() };
        }
        if let Some(v) = self.cache.get(&(a.clone(), b.clone())) {
            return v.clone();
        }
        // peel the first factor of a: a = f_first a1
        let first = a.iter().position(|&e| e > 0).unwrap();
        let mut a1 = a.clone();
        a1[first] -= 1;
        // <f a1, b> = <a1, e b>
        let eb = verma_act_basis(self.g, &self.lambda, self.g.rank + first, &{
            let mut v = VermaVec::new();
            v.insert(b.clone(), Q::one());
            v
        });
        let mut s = Q::zero();
        for (m, c) in eb {
            if monomial_height(self.g, &m) == monomial_height(self.g, &a1) {
                s += &c * &self.pair(&a1, &m);
            }
        }
        self.cache.insert((a.clone(), b.clone()), s.clone());
        s
    }

    pub fn gram(&mut self, basis: &[Monomial]) -> QMat {
        let n = basis.len();
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.pair(&basis[i], &basis[j]);
                m[(i, j)] = v.clone();
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Truncated Verma module: PBW monomials organized by weight, up to a
/// total-height depth bound.
#[derive(Clone, Debug)]
pub struct VermaTruncation {
    pub g: SimpleLieAlgebra,
    pub lambda: Vec<Q>,
    pub depth: usize,
    /// offset (coefficients of lambda - mu over simple roots) -> monomials
    pub weights: BTreeMap<Vec<i64>, Vec<Monomial>>,
}

impl VermaTruncation {
    pub fn new(g: &SimpleLieAlgebra, lambda: &[Q], depth: usize) -> Self {
        let mut weights: BTreeMap<Vec<i64>, Vec<Monomial>> = BTreeMap::new();
        let npos = g.num_positive_roots();
        // enumerate exponent vectors with total height <= depth
        let mut stack: Vec<(Monomial, i64)> = vec![(vec![0; npos], 0)];
        let mut all = Vec::new();
        while let Some((m, h)) = stack.pop() {
            all.push(m.clone());
            for r in 0..npos {
                // only increase the last touched root or later, to enumerate each once
                if m[..r].iter().any(|&e| e > 0) && m[r] == 0 && m[r + 1..].iter().any(|&e| e > 0)
                {
                    continue;
                }
                if m[r + 1..].iter().any(|&e| e > 0) {
                    continue;
                }
                let hh = h + g.positive_roots[r].height();
                if hh <= depth as i64 {
                    let mut m2 = m.clone();
                    m2[r] += 1;
                    stack.push((m2, hh));
                }
            }
        }
        all.sort();
        all.dedup();
        for m in all {
            let mut offset = vec![0i64; g.rank];
            for (r, &e) in m.iter().enumerate() {
                for (i, &c) in g.positive_roots[r].coeffs.iter().enumerate() {
                    offset[i] += c * e as i64;
                }
            }
            weights.entry(offset).or_default().push(m);
        }
        VermaTruncation { g: g.clone(), lambda: lambda.to_vec(), depth, weights }
    }

    /// Weight-space dimension at `lambda - sum offset_i alpha_i`.
    pub fn weight_dim(&self, offset: &[i64]) -> usize {
        self.weights.get(offset).map_or(0, |v| v.len())
    }

    pub fn gram_at(&self, offset: &[i64]) -> Option<QMat> {
        let basis = self.weights.get(offset)?;
        let mut sh = Shapovalov::new(&self.g, &self.lambda);
        Some(sh.gram(basis))
    }

    /// Act by a Chevalley basis element, truncating above the depth bound.
    pub fn act(&self, basis_idx: usize, v: &VermaVec) -> VermaVec {
        let mut out = verma_act_basis(&self.g, &self.lambda, basis_idx, v);
        out.retain(|m, _| monomial_height(&self.g, m) <= self.depth as i64);
        out
    }
}

/// Kostant partition count: number of ways to write the offset as a sum of
/// positive roots. Independent oracle for Verma weight-space dimensions.
pub fn kostant_partitions(g: &SimpleLieAlgebra, offset: &[i64]) -> u64 {
    fn rec(g: &SimpleLieAlgebra, offset: &[i64], max_root: usize) -> u64 {
        if offset.iter().all(|&c| c == 0) {
            return 1;
        }
        let mut total = 0;
        for r in 0..=max_root {
            let coeffs = &g.positive_roots[r].coeffs;
            if coeffs.iter().zip(offset).all(|(&c, &o)| o >= c) {
                let rem: Vec<i64> = offset.iter().zip(coeffs).map(|(&o, &c)| o - c).collect();
                total += rec(g, &rem, r);
            }
        }
        total
    }
    rec(g, offset, g.num_positive_roots() - 1)
}

/// Irreducible finite-dimensional module with explicit weight basis and
/// exact generator matrices.
#[derive(Clone, Debug)]
pub struct IrrepSpace {
    pub g: SimpleLieAlgebra,
    pub lambda: Vec<i64>,
    pub dim: usize,
    /// weight (coroot pairings) of each basis vector
    pub weight_of: Vec<Vec<i64>>,
    /// weight -> ordered basis indices
    pub blocks: BTreeMap<Vec<i64>, Vec<usize>>,
    /// matrix of every Chevalley basis element
    pub matrices: Vec<QMat>,
}

/// Weyl dimension formula (simply laced pairing).
pub fn weyl_dim(g: &SimpleLieAlgebra, lambda: &[i64]) -> u64 {
    let mut num = Q::one();
    let mut den = Q::one();
    for r in &g.positive_roots {
        let pair = |w: &[i64]| -> i64 { r.coeffs.iter().zip(w).map(|(&c, &l)| c * l).sum() };
        let lam_rho: i64 = pair(lambda) + r.height();
        num *= Q::from(num::BigInt::from(lam_rho));
        den *= Q::from(num::BigInt::from(r.height()));
    }
    let d = num / den;
    assert!(d.is_integer());
    use num::ToPrimitive;
    d.to_integer().to_u64().expect("dimension fits u64")
}

/// All weights of `V_lambda` via saturation from the highest weight.
fn weight_system(g: &SimpleLieAlgebra, lambda: &[i64]) -> Vec<Vec<i64>> {
    let mut seen: std::collections::HashSet<Vec<i64>> = std::collections::HashSet::new();
    let mut queue = vec![lambda.to_vec()];
    seen.insert(lambda.to_vec());
    while let Some(mu) = queue.pop() {
        for i in 0..g.rank {
            let p: i64 = mu[i];
            // reflect along alpha_i: the string mu, mu - a_i, ..., s_i(mu)
            if p > 0 {
                let mut cur = mu.clone();
                for _ in 0..p {
                    for (j, row) in g.cartan.iter().enumerate() {
                        cur[j] -= row[i];
                    }
                    if seen.insert(cur.clone()) {
                        queue.push(cur.clone());
                    }
                }
            }
        }
    }
    let mut out: Vec<Vec<i64>> = seen.into_iter().collect();
    out.sort();
    out
}

pub fn build_irrep(g: &SimpleLieAlgebra, lambda: &[i64]) -> Result<IrrepSpace> {
    if lambda.len() != g.rank || lambda.iter().any(|&l| l < 0) {
        return Err(GaudinError::NotDominant(format!("{lambda:?}")));
    }
    let lambda_q: Vec<Q> = lambda.iter().map(|&l| Q::from(num::BigInt::from(l))).collect();
    let weights = weight_system(g, lambda);
    // offsets of each weight from lambda in simple-root coordinates
    let cartan_q = QMat::from_rows(
        (0..g.rank)
            .map(|i| (0..g.rank).map(|j| Q::from(num::BigInt::from(g.cartan[i][j]))).collect())
            .collect(),
    );
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    let mut max_depth = 0i64;
    for w in &weights {
        let rhs: Vec<Q> = lambda
            .iter()
            .zip(w)
            .map(|(&l, &m)| Q::from(num::BigInt::from(l - m)))
            .collect();
        let k = cartan_q.solve(&rhs).expect("Cartan matrix invertible");
        let ki: Vec<i64> = k
            .iter()
            .map(|x| {
                assert!(x.is_integer());
                use num::ToPrimitive;
                x.to_integer().to_i64().unwrap()
            })
            .collect();
        max_depth = max_depth.max(ki.iter().sum());
        offsets.push(ki);
    }

    let mut sh = Shapovalov::new(g, &lambda_q);
    let verma = VermaTruncation::new(g, &lambda_q, max_depth as usize);

    // per weight: representative monomials + projection data
    struct WBlock {
        monomials: Vec<Monomial>,
        reps: Vec<usize>,
        gram: QMat,
    }
    let mut wblocks: Vec<WBlock> = Vec::new();
    for off in &offsets {
        let basis = verma.weights.get(off).cloned().unwrap_or_default();
        let gram = sh.gram(&basis);
        // choose representatives: monomials independent modulo ker(gram),
        // greedily in PBW order
        let kernel = gram.kernel_basis();
        let mut rows: Vec<Vec<Q>> = kernel;
        let mut reps = Vec::new();
        let mut rank = QMat::from_rows(rows.clone()).rank();
        for mi in 0..basis.len() {
            let mut ind = vec![Q::zero(); basis.len()];
            ind[mi] = Q::one();
            rows.push(ind);
            let r2 = QMat::from_rows(rows.clone()).rank();
            if r2 > rank {
                rank = r2;
                reps.push(mi);
            } else {
                rows.pop();
            }
        }
        wblocks.push(WBlock { monomials: basis, reps, gram });
    }

    let mut weight_of = Vec::new();
    let mut blocks: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    let mut index_of: HashMap<(usize, usize), usize> = HashMap::new(); // (weight idx, rep idx) -> basis idx
    for (wi, wb) in wblocks.iter().enumerate() {
        for (ri, _) in wb.reps.iter().enumerate() {
            let idx = weight_of.len();
            weight_of.push(weights[wi].clone());
            blocks.entry(weights[wi].clone()).or_default().push(idx);
            index_of.insert((wi, ri), idx);
        }
    }
    let dim = weight_of.len();

    // coordinates of a Verma vector in the quotient basis of its weight:
    // solve Gram[:, reps] c = Gram u
    let project = |wi: usize, u: &VermaVec| -> Vec<Q> {
        let wb = &wblocks[wi];
        let n = wb.monomials.len();
        let mut uv = vec![Q::zero(); n];
        for (m, c) in u {
            if let Some(pos) = wb.monomials.iter().position(|x| x == m) {
                uv[pos] = c.clone();
            } else {
                // outside the truncation: weight not in the irrep support
                panic!("projection target missing monomial");
            }
        }
        let gu = wb.gram.mul_vec(&uv);
        let mut cols = QMat::zeros(n, wb.reps.len());
        for (j, &rj) in wb.reps.iter().enumerate() {
            for i in 0..n {
                cols[(i, j)] = wb.gram[(i, rj)].clone();
            }
        }
        cols.solve(&gu).expect("consistent projection system")
    };

    let weight_index: HashMap<Vec<i64>, usize> =
        weights.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();

    // matrices of the simple generators and Cartan
    let mut matrices: Vec<QMat> = vec![QMat::zeros(dim, dim); g.dim];
    for i in 0..g.rank {
        let mut m = QMat::zeros(dim, dim);
        for (wi, wb) in wblocks.iter().enumerate() {
            for (ri, &rep) in wb.reps.iter().enumerate() {
                let col = index_of[&(wi, ri)];
                m[(col, col)] = Q::from(num::BigInt::from(weights[wi][i]));
                let _ = rep;
            }
        }
        matrices[i] = m;
    }
    // action of simple e and f on representatives
    for (sign, label_base) in [(1i64, g.rank), (-1i64, g.rank + g.num_positive_roots())] {
        for r in 0..g.num_positive_roots() {
            if g.positive_roots[r].height() != 1 {
                continue;
            }
            let basis_idx = label_base + r;
            let mut m = QMat::zeros(dim, dim);
            for (wi, wb) in wblocks.iter().enumerate() {
                for (ri, &rep) in wb.reps.iter().enumerate() {
                    let col = index_of[&(wi, ri)];
                    let mut v = VermaVec::new();
                    v.insert(wb.monomials[rep].clone(), Q::one());
                    let image = verma_act_basis(g, &lambda_q, basis_idx, &v);
                    if image.is_empty() {
                        continue;
                    }
                    // target weight
                    let mut tw = weights[wi].clone();
                    let rw: Vec<i64> = g
                        .root_weight(r)
                        .iter()
                        .map(|x| {
                            use num::ToPrimitive;
                            x.to_integer().to_i64().unwrap()
                        })
                        .collect();
                    for k in 0..g.rank {
                        tw[k] += sign * rw[k];
                    }
                    let Some(&twi) = weight_index.get(&tw) else {
                        // image is zero in the irrep (weight outside support)
                        continue;
                    };
                    let coords = project(twi, &image);
                    for (rj, c) in coords.into_iter().enumerate() {
                        if !c.is_zero() {
                            let row = index_of[&(twi, rj)];
                            m[(row, col)] = c;
                        }
                    }
                }
            }
            matrices[basis_idx] = m;
        }
    }
    // non-simple root vectors by bracket recursion on heights
    let max_h = g.positive_roots.iter().map(|r| r.height()).max().unwrap();
    for h in 2..=max_h {
        for r in 0..g.num_positive_roots() {
            if g.positive_roots[r].height() != h {
                continue;
            }
            let (i_idx, g_idx, n) = decompose_root(g, r);
            let ninv = n.recip();
            let e_mat = matrices[g.rank + i_idx]
                .commutator(&matrices[g.rank + g_idx])
                .scale(&ninv);
            matrices[g.rank + r] = e_mat;
            // f_beta: [f_gamma, f_i] relation; compute from structure table
            let fi = g.rank + g.num_positive_roots() + i_idx;
            let fg = g.rank + g.num_positive_roots() + g_idx;
            let target = g.rank + g.num_positive_roots() + r;
            let mut coef = Q::zero();
            for (idx, s) in g.bracket_basis(fi, fg) {
                if *idx == target {
                    coef = s.clone();
                }
            }
            assert!(!coef.is_zero());
            let f_mat = matrices[fi].commutator(&matrices[fg]).scale(&coef.recip());
            matrices[target] = f_mat;
        }
    }

    Ok(IrrepSpace { g: g.clone(), lambda: lambda.to_vec(), dim, weight_of, blocks, matrices })
}

impl IrrepSpace {
    /// Matrix of an arbitrary algebra element.
    pub fn matrix_of(&self, x: &Elt) -> QMat {
        let mut m = QMat::zeros(self.dim, self.dim);
        for (a, c) in x.iter().enumerate() {
            if !c.is_zero() {
                m = m.add(&self.matrices[a].scale(c));
            }
        }
        m
    }

    /// Index of the highest weight vector.
    pub fn highest_index(&self) -> usize {
        self.blocks[&self.lambda][0]
    }

    /// Multiplicity of a weight.
    pub fn weight_multiplicity(&self, w: &[i64]) -> usize {
        self.blocks.get(w).map_or(0, |b| b.len())
    }
}

/// Tensor product of irreducibles with per-site and diagonal actions.
#[derive(Clone, Debug)]
pub struct TensorSpace {
    pub factors: Vec<IrrepSpace>,
    pub dim: usize,
    strides: Vec<usize>,
    pub weight_of: Vec<Vec<i64>>,
    pub blocks: BTreeMap<Vec<i64>, Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    At(usize),
    Diagonal,
}

impl TensorSpace {
    pub fn new(factors: Vec<IrrepSpace>) -> Result<Self> {
        assert!(!factors.is_empty());
        let rank = factors[0].g.rank;
        for f in &factors {
            if f.g.rank != rank || f.g.label != factors[0].g.label {
                return Err(GaudinError::ArityMismatch(f.g.rank, rank));
            }
        }
        let dim: usize = factors.iter().map(|f| f.dim).product();
        let n = factors.len();
        let mut strides = vec![1usize; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * factors[k + 1].dim;
        }
        let mut weight_of = Vec::with_capacity(dim);
        let mut blocks: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for idx in 0..dim {
            let mut w = vec![0i64; rank];
            let mut rem = idx;
            for (k, f) in factors.iter().enumerate() {
                let comp = rem / strides[k];
                rem %= strides[k];
                for i in 0..rank {
                    w[i] += f.weight_of[comp][i];
                }
            }
            blocks.entry(w.clone()).or_default().push(idx);
            weight_of.push(w);
        }
        Ok(TensorSpace { factors, dim, strides, weight_of, blocks })
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn component_indices(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        self.strides
            .iter()
            .map(|&s| {
                let c = rem / s;
                rem %= s;
                c
            })
            .collect()
    }

    /// Apply a single-site operator given by a matrix on the factor.
    fn apply_site_matrix(&self, site: usize, m: &QMat, v: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim];
        let stride = self.strides[site];
        let fdim = self.factors[site].dim;
        for (idx, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let comp = (idx / stride) % fdim;
            let base = idx - comp * stride;
            for row in 0..fdim {
                let entry = &m[(row, comp)];
                if !entry.is_zero() {
                    out[base + row * stride] += entry * c;
                }
            }
        }
        out
    }

    /// Act by an algebra element at one site or diagonally (exact).
    pub fn act(&self, x: &Elt, site: Site, v: &[Q]) -> Result<Vec<Q>> {
        match site {
            Site::At(s) => {
                if s >= self.arity() {
                    return Err(GaudinError::SiteOutOfRange { site: s, arity: self.arity() });
                }
                Ok(self.apply_site_matrix(s, &self.factors[s].matrix_of(x), v))
            }
            Site::Diagonal => {
                let mut out = vec![Q::zero(); self.dim];
                for s in 0..self.arity() {
                    let t = self.apply_site_matrix(s, &self.factors[s].matrix_of(x), v);
                    for (o, x) in out.iter_mut().zip(t) {
                        *o += x;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Same-site action applied to complex float vectors.
    pub fn act_c64(&self, x: &Elt, site: Site, v: &[C64]) -> Result<Vec<C64>> {
        let apply = |s: usize, v: &[C64], out: &mut Vec<C64>| {
            let m = self.factors[s].matrix_of(x);
            let stride = self.strides[s];
            let fdim = self.factors[s].dim;
            for (idx, c) in v.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let comp = (idx / stride) % fdim;
                let base = idx - comp * stride;
                for row in 0..fdim {
                    let entry = &m[(row, comp)];
                    if !entry.is_zero() {
                        out[base + row * stride] += q_to_f64(entry) * c;
                    }
                }
            }
        };
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        match site {
            Site::At(s) => {
                if s >= self.arity() {
                    return Err(GaudinError::SiteOutOfRange { site: s, arity: self.arity() });
                }
                apply(s, v, &mut out);
            }
            Site::Diagonal => {
                for s in 0..self.arity() {
                    apply(s, v, &mut out);
                }
            }
        }
        Ok(out)
    }

    /// Tensor index of the product of highest weight vectors.
    pub fn highest_tensor_index(&self) -> usize {
        let mut idx = 0;
        for (k, f) in self.factors.iter().enumerate() {
            idx += f.highest_index() * self.strides[k];
        }
        idx
    }

    /// Tensor basis index from per-site component indices.
    pub fn index_from_components(&self, comps: &[usize]) -> usize {
        comps.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }
}

/// Operators exported as sparse triplet lists.
pub fn matrix_triplets_json(m: &QMat) -> Vec<(usize, usize, String)> {
    m.triplets()
        .into_iter()
        .map(|(r, c, v)| (r, c, crate::rational::format_rational(&v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::InvariantForm;
    use crate::rational::{q, qi};

    fn a1() -> SimpleLieAlgebra {
        SimpleLieAlgebra::from_type("A1").unwrap()
    }
    fn a2() -> SimpleLieAlgebra {
        SimpleLieAlgebra::from_type("A2").unwrap()
    }

    #[test]
    fn verma_truncation_dims_a1() {
        let g = a1();
        let v = VermaTruncation::new(&g, &[q(7, 3)], 2);
        assert_eq!(v.weight_dim(&[0]), 1);
        assert_eq!(v.weight_dim(&[1]), 1);
        assert_eq!(v.weight_dim(&[2]), 1);
        assert_eq!(v.weight_dim(&[3]), 0);
    }

    #[test]
    fn verma_weight_dims_match_kostant() {
        let g = a2();
        let v = VermaTruncation::new(&g, &[q(1, 2), q(5, 7)], 4);
        for (off, basis) in &v.weights {
            assert_eq!(basis.len() as u64, kostant_partitions(&g, off), "offset {off:?}");
        }
        // the motivating example: weight lambda - a1 - a2 has dimension 2
        assert_eq!(v.weight_dim(&[1, 1]), 2);
    }

    #[test]
    fn shapovalov_symmetric_and_depth2_vanishing() {
        let g = a1();
        // at lambda = 1 the depth-2 Gram entry is 2*lambda*(lambda-1) = 0
        let v = VermaTruncation::new(&g, &[qi(1)], 2);
        let gram = v.gram_at(&[2]).unwrap();
        assert_eq!(gram[(0, 0)], qi(0));
        // generic lambda: oracle 2*lambda*(lambda-1)
        let lam = q(5, 3);
        let v = VermaTruncation::new(&g, &[lam.clone()], 2);
        let gram = v.gram_at(&[2]).unwrap();
        assert_eq!(gram[(0, 0)], qi(2) * &lam * (&lam - qi(1)));
        // symmetry on an A2 block
        let g = a2();
        let v = VermaTruncation::new(&g, &[q(3, 4), q(1, 5)], 3);
        let gram = v.gram_at(&[1, 1]).unwrap();
        assert_eq!(gram, gram.transpose());
    }

    #[test]
    fn verma_action_closure_and_truncation() {
        let g = a2();
        let lam = vec![q(5, 3), q(-1, 2)];
        let v = VermaTruncation::new(&g, &lam, 2);
        // [e_i, f_i] acts as h_i on an interior vector
        let mut hw = VermaVec::new();
        hw.insert(vec![0; g.num_positive_roots()], Q::one());
        let e0 = g.rank; // first height-1 root in root order
        let f0 = g.rank + g.num_positive_roots();
        let root0 = 0usize;
        let fv = v.act(f0 + root0, &hw);
        assert_eq!(fv.len(), 1);
        let ef = v.act(e0 + root0, &fv);
        // e_alpha f_alpha v = lambda(h_alpha) v; root0 is a simple root
        let simple = g.positive_roots[root0]
            .coeffs
            .iter()
            .position(|&c| c == 1)
            .unwrap();
        assert_eq!(ef.get(&vec![0; g.num_positive_roots()]), Some(&lam[simple]));
        // f-action beyond the depth bound truncates to zero
        let deep = v.act(f0 + root0, &v.act(f0 + root0, &fv));
        assert!(deep.is_empty(), "depth-2 truncation drops height-3 terms");
    }

    #[test]
    fn irrep_dims() {
        let g = a1();
        assert_eq!(build_irrep(&g, &[1]).unwrap().dim, 2);
        assert_eq!(build_irrep(&g, &[3]).unwrap().dim, 4);
        let g = a2();
        assert_eq!(build_irrep(&g, &[1, 0]).unwrap().dim, 3);
        let adj = build_irrep(&g, &[1, 1]).unwrap();
        assert_eq!(adj.dim, 8);
        assert_eq!(adj.weight_multiplicity(&[0, 0]), 2);
        assert!(build_irrep(&g, &[-1, 0]).is_err());
    }

    #[test]
    fn irrep_matrices_satisfy_brackets() {
        for (g, lam) in [(a1(), vec![2]), (a2(), vec![1, 1])] {
            let v = build_irrep(&g, &lam).unwrap();
            for a in 0..g.dim {
                for b in 0..g.dim {
                    let lhs = v.matrices[a].commutator(&v.matrices[b]);
                    let mut rhs = QMat::zeros(v.dim, v.dim);
                    for (c, s) in g.bracket_basis(a, b) {
                        rhs = rhs.add(&v.matrices[*c].scale(s));
                    }
                    assert_eq!(lhs, rhs, "bracket mismatch at ({a},{b})");
                }
            }
            // e_i annihilates the highest weight vector
            let hi = v.highest_index();
            for r in 0..g.num_positive_roots() {
                let col: Vec<Q> = (0..v.dim).map(|i| v.matrices[g.rank + r][(i, hi)].clone()).collect();
                assert!(col.iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn weyl_dimensions_match_construction() {
        // rank <= 2 exhaustively up to pairing 3; A3 sampled
        let g = a1();
        for l in 0..=3 {
            assert_eq!(build_irrep(&g, &[l]).unwrap().dim as u64, weyl_dim(&g, &[l]));
        }
        let g = a2();
        for l1 in 0..=3 {
            for l2 in 0..=3 {
                assert_eq!(
                    build_irrep(&g, &[l1, l2]).unwrap().dim as u64,
                    weyl_dim(&g, &[l1, l2]),
                    "A2 ({l1},{l2})"
                );
            }
        }
        let g = SimpleLieAlgebra::from_type("A3").unwrap();
        for lam in [[1, 0, 0], [0, 1, 0], [1, 0, 1], [1, 1, 1]] {
            assert_eq!(build_irrep(&g, &lam).unwrap().dim as u64, weyl_dim(&g, &lam));
        }
    }

    #[test]
    fn weight_multiplicities_weyl_invariant() {
        let g = a2();
        let v = build_irrep(&g, &[2, 1]).unwrap();
        for (w, b) in &v.blocks {
            for i in 0..g.rank {
                // s_i(w) = w - <w, a_i^vee> a_i
                let mut sw = w.clone();
                let p = w[i];
                for (j, row) in g.cartan.iter().enumerate() {
                    sw[j] -= p * row[i];
                }
                assert_eq!(v.weight_multiplicity(&sw), b.len());
            }
        }
    }

    #[test]
    fn tensor_actions() {
        let g = a1();
        let v1 = build_irrep(&g, &[1]).unwrap();
        let t = TensorSpace::new(vec![v1.clone(), v1.clone()]).unwrap();
        assert_eq!(t.dim, 4);
        // diagonal h on the highest tensor vector
        let mut v = vec![Q::zero(); 4];
        v[t.highest_tensor_index()] = Q::one();
        let h = g.basis_elt(0);
        let hv = t.act(&h, Site::Diagonal, &v).unwrap();
        assert_eq!(hv, v.iter().map(|x| x * qi(2)).collect::<Vec<_>>());
        // [e at site 0, f at site 1] = 0
        let e = g.basis_elt(1);
        let f = g.basis_elt(2);
        let mut rv = vec![q(1, 3), q(-2, 5), qi(1), q(7, 2)];
        let ab = t
            .act(&e, Site::At(0), &t.act(&f, Site::At(1), &rv).unwrap())
            .unwrap();
        let ba = t
            .act(&f, Site::At(1), &t.act(&e, Site::At(0), &rv).unwrap())
            .unwrap();
        assert_eq!(ab, ba);
        rv[0] = qi(0);
        assert!(t.act(&e, Site::At(2), &rv).is_err());
    }

    #[test]
    fn casimir_scalar_on_defining_irrep() {
        // sum_a J_a J^a acts as 3/2 on V_1; oracle: the explicit 2x2
        // matrices e, f, h with duals f, e, h/2
        let g = a1();
        let k = InvariantForm::trace_form(&g);
        let duals = crate::liealg::dual_bases(&g, &k).unwrap();
        let v = build_irrep(&g, &[1]).unwrap();
        let mut cas = QMat::zeros(2, 2);
        for a in 0..g.dim {
            cas = cas.add(&v.matrix_of(&g.basis_elt(a)).mul(&v.matrix_of(&duals.dual[a])));
        }
        assert_eq!(cas, QMat::identity(2).scale(&q(3, 2)));
        // independent oracle: ef + fe + h^2/2 on explicit 2x2 matrices
        let e = QMat::from_rows(vec![vec![qi(0), qi(1)], vec![qi(0), qi(0)]]);
        let f = e.transpose();
        let h = QMat::from_rows(vec![vec![qi(1), qi(0)], vec![qi(0), qi(-1)]]);
        let oracle = e.mul(&f).add(&f.mul(&e)).add(&h.mul(&h).scale(&q(1, 2)));
        assert_eq!(oracle, QMat::identity(2).scale(&q(3, 2)));
    }

    #[test]
    fn sparse_triplet_export() {
        let g = a1();
        let v = build_irrep(&g, &[1]).unwrap();
        // f on V_1: single entry 1 at (lowest, highest)
        let trips = matrix_triplets_json(&v.matrices[2]);
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].2, "1");
        serde_json::to_string(&trips).unwrap();
    }

    #[test]
    fn diagonal_casimir_spectrum_on_two_spins() {
        // Casimir sum_a J_a J^a with the trace form acts with eigenvalues
        // {4 (x3), 0 (x1)} on V_1 (x) V_1
        let g = a1();
        let k = InvariantForm::trace_form(&g);
        let duals = crate::liealg::dual_bases(&g, &k).unwrap();
        let v1 = build_irrep(&g, &[1]).unwrap();
        let t = TensorSpace::new(vec![v1.clone(), v1]).unwrap();
        let mut cas = QMat::zeros(4, 4);
        for a in 0..g.dim {
            let ja = g.basis_elt(a);
            let jup = &duals.dual[a];
            // diagonal action: (sum over sites) applied twice
            let mut m = QMat::zeros(4, 4);
            for col in 0..4 {
                let mut v = vec![Q::zero(); 4];
                v[col] = Q::one();
                let v = t.act(jup, Site::Diagonal, &v).unwrap();
                let v = t.act(&ja, Site::Diagonal, &v).unwrap();
                for (row, x) in v.into_iter().enumerate() {
                    m[(row, col)] = x;
                }
            }
            cas = cas.add(&m);
        }
        // exact annihilator: (C - 4)(C - 0) = 0, trace = 12
        assert_eq!(cas.trace(), qi(12));
        let shifted = cas.sub(&QMat::identity(4).scale(&qi(4)));
        assert!(shifted.mul(&cas).is_zero());
    }
}
