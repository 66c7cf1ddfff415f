//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Monomials are exponent vectors of a fixed length (the number of
//! coordinates on the ambient dual space, times the number of sites for
//! multi-site phase spaces).

use crate::error::{GaudinError, Result};
use crate::rational::{format_rational, parse_rational, Q};
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

pub type Monomial = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Monomial, Q>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        let mut m = vec![0u8; nvars];
        m[i] = 1;
        p.terms.insert(m, Q::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.len(), self.nvars);
        match self.terms.entry(m) {
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

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut acc: HashMap<Monomial, Q> =
            HashMap::with_capacity(self.terms.len() * other.terms.len() / 2 + 1);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                let c = ca * cb;
                match acc.entry(m) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += c;
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        MPoly { nvars: self.nvars, terms }
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if m[i] > 0 {
                let mut m2 = m.clone();
                m2[i] -= 1;
                out.add_term(m2, c * Q::from(num::BigInt::from(m[i])));
            }
        }
        out
    }

    /// Directional derivative with direction given by coordinate values.
    pub fn directional(&self, dir: &[Q]) -> Self {
        assert_eq!(dir.len(), self.nvars);
        let mut out = Self::zero(self.nvars);
        for (i, d) in dir.iter().enumerate() {
            if !d.is_zero() {
                out = out.add(&self.partial(i).scale(d));
            }
        }
        out
    }

    pub fn eval(&self, point: &[Q]) -> Q {
        assert_eq!(point.len(), self.nvars);
        let mut s = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    t *= &point[i];
                }
            }
            s += t;
        }
        s
    }

    /// Substitute zero for every variable outside `keep`.
    pub fn restrict_to(&self, keep: &[usize]) -> Self {
        let keep: std::collections::HashSet<usize> = keep.iter().copied().collect();
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if m.iter().enumerate().all(|(i, &e)| e == 0 || keep.contains(&i)) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Expand `p(x + u·dir)` as a polynomial in the original variables plus a
    /// trailing fresh variable `u`.
    pub fn shift_expand(&self, dir: &[Q]) -> MPoly {
        let nv = self.nvars + 1;
        let mut out = MPoly::zero(nv);
        // x_i -> x_i + u * dir_i, expanded monomial by monomial via repeated
        // multiplication by the linear factors.
        for (m, c) in &self.terms {
            let mut acc = MPoly::constant(nv, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut lin = MPoly::var(nv, i);
                if !dir[i].is_zero() {
                    let mut um = vec![0u8; nv];
                    um[nv - 1] = 1;
                    lin.add_term(um, dir[i].clone());
                }
                for _ in 0..e {
                    acc = acc.mul(&lin);
                }
            }
            out = out.add(&acc);
        }
        out
    }

    /// Coefficient of `u^k` in a polynomial produced by [`shift_expand`].
    pub fn coeff_of_last_var(&self, k: u8) -> MPoly {
        let nv = self.nvars - 1;
        let mut out = MPoly::zero(nv);
        for (m, c) in &self.terms {
            if m[nv] == k {
                out.add_term(m[..nv].to_vec(), c.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> PolyDoc {
        PolyDoc {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.iter().map(|&e| e as u32).collect(), format_rational(c)))
                .collect(),
        }
    }

    pub fn from_json(doc: &PolyDoc) -> Result<Self> {
        let mut p = MPoly::zero(doc.nvars);
        for (m, c) in &doc.terms {
            if m.len() != doc.nvars {
                return Err(GaudinError::Parse(format!(
                    "exponent vector of length {} does not match nvars {}",
                    m.len(),
                    doc.nvars
                )));
            }
            if m.iter().any(|&e| e > u8::MAX as u32) {
                return Err(GaudinError::Parse("exponent too large".into()));
            }
            p.add_term(m.iter().map(|&e| e as u8).collect(), parse_rational(c)?);
        }
        Ok(p)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: PolyDoc =
            serde_json::from_str(s).map_err(|e| GaudinError::Parse(e.to_string()))?;
        Self::from_json(&doc)
    }
}

/// Wire format: list of (exponent vector, "p/q") pairs.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct PolyDoc {
    pub nvars: usize,
    pub terms: Vec<(Vec<u32>, String)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn arithmetic() {
        let x = MPoly::var(2, 0);
        let y = MPoly::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y)); // x^2 - y^2
        let x2 = x.mul(&x);
        let y2 = y.mul(&y);
        assert_eq!(p, x2.sub(&y2));
        assert_eq!(p.eval(&[qi(3), qi(2)]), qi(5));
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn derivative_and_shift() {
        // p = x^2 y
        let x = MPoly::var(2, 0);
        let y = MPoly::var(2, 1);
        let p = x.mul(&x).mul(&y);
        assert_eq!(p.partial(0), x.mul(&y).scale(&qi(2)));
        // p(x + u e_x) = x^2 y + 2 u x y + u^2 y
        let e = p.shift_expand(&[qi(1), qi(0)]);
        assert_eq!(e.coeff_of_last_var(0), p);
        assert_eq!(e.coeff_of_last_var(1), x.mul(&y).scale(&qi(2)));
        assert_eq!(e.coeff_of_last_var(2), y);
    }

    #[test]
    fn json_roundtrip() {
        let p = MPoly::var(3, 1).scale(&q(7, 3));
        let doc = p.to_json();
        let s = serde_json::to_string(&doc).unwrap();
        assert_eq!(MPoly::from_json_str(&s).unwrap(), p);
    }
}
