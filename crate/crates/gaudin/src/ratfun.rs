//! Univariate polynomials and rational functions over exact complex
//! rationals. This is the coefficient arithmetic behind oper
//! canonicalization, so everything here is exact.
//!
//! Rational functions keep their denominator in factored form (a product
//! of monic linear factors). Everything that arises from connections with
//! prescribed poles stays in this class, and reduction never needs a
//! polynomial gcd: common factors can only sit at the recorded roots.

use crate::rational::{C64, CQ, Q};
use num::Zero;
use std::cmp::Ordering;

/// Dense polynomial; `coeffs[k]` multiplies `t^k`. Invariant: no trailing
/// zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly1 {
    pub coeffs: Vec<CQ>,
}

impl Poly1 {
    pub fn zero() -> Self {
        Poly1 { coeffs: vec![] }
    }

    pub fn constant(c: CQ) -> Self {
        let mut p = Poly1 { coeffs: vec![c] };
        p.normalize();
        p
    }

    pub fn one() -> Self {
        Self::constant(CQ::from_i64(1))
    }

    pub fn t() -> Self {
        Poly1 { coeffs: vec![CQ::zero(), CQ::from_i64(1)] }
    }

    pub fn from_coeffs(coeffs: Vec<CQ>) -> Self {
        let mut p = Poly1 { coeffs };
        p.normalize();
        p
    }

    /// `t - a`
    pub fn linear(a: &CQ) -> Self {
        Poly1 { coeffs: vec![-a.clone(), CQ::from_i64(1)] }
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn leading(&self) -> Option<&CQ> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut c = vec![CQ::zero(); n];
        for (i, x) in self.coeffs.iter().enumerate() {
            c[i] += x;
        }
        for (i, x) in o.coeffs.iter().enumerate() {
            c[i] += x;
        }
        Self::from_coeffs(c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Poly1 { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![CQ::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                let prod = a * b;
                c[i + j] += &prod;
            }
        }
        Self::from_coeffs(c)
    }

    pub fn scale(&self, c: &CQ) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::from_coeffs(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c.scale_q(&Q::from(num::BigInt::from(k as i64 + 1))))
                .collect(),
        )
    }

    /// Euclidean division: (quotient, remainder).
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.clone();
        let mut q = Self::zero();
        let dl = d.leading().unwrap().clone();
        let dinv = dl.inv();
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = (r.degree() - d.degree()) as usize;
            let coef = &r.leading().unwrap().clone() * &dinv;
            let mut qt = vec![CQ::zero(); shift + 1];
            qt[shift] = coef;
            let qt = Poly1::from_coeffs(qt);
            r = r.sub(&qt.mul(d));
            q = q.add(&qt);
        }
        (q, r)
    }

    /// Exact division by `(t - a)`; panics if `a` is not a root.
    pub fn div_linear(&self, a: &CQ) -> Self {
        // synthetic division
        let n = self.coeffs.len();
        assert!(n >= 1);
        let mut out = vec![CQ::zero(); n - 1];
        let mut carry = CQ::zero();
        for k in (0..n).rev() {
            let c = self.coeffs[k].clone() + &carry;
            if k == 0 {
                assert!(c.is_zero(), "div_linear: not a root");
            } else {
                carry = &c * a;
                out[k - 1] = c;
            }
        }
        Self::from_coeffs(out)
    }

    pub fn eval(&self, x: &CQ) -> CQ {
        let mut s = CQ::zero();
        for c in self.coeffs.iter().rev() {
            s = &s * x;
            s += c;
        }
        s
    }

    pub fn eval_c64(&self, x: C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            s = s * x + c.to_c64();
        }
        s
    }

    /// Expand around `a`: returns coefficients in powers of `s = t - a`.
    pub fn shift(&self, a: &CQ) -> Self {
        let mut out = Self::zero();
        let lin = Poly1 { coeffs: vec![a.clone(), CQ::from_i64(1)] };
        for c in self.coeffs.iter().rev() {
            out = out.mul(&lin).add(&Self::constant(c.clone()));
        }
        out
    }

}

fn cq_cmp(a: &CQ, b: &CQ) -> Ordering {
    a.re.cmp(&b.re).then(a.im.cmp(&b.im))
}

/// Rational function with a factored monic denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFun {
    pub num: Poly1,
    /// sorted (root, multiplicity) pairs, multiplicities >= 1
    den: Vec<(CQ, usize)>,
}

impl RatFun {
    pub fn zero() -> Self {
        RatFun { num: Poly1::zero(), den: vec![] }
    }

    pub fn constant(c: CQ) -> Self {
        RatFun { num: Poly1::constant(c), den: vec![] }
    }

    pub fn from_q(c: Q) -> Self {
        Self::constant(CQ::from_q(c))
    }

    pub fn from_poly(p: Poly1) -> Self {
        RatFun { num: p, den: vec![] }
    }

    /// `c / (t - a)^k`
    pub fn pole(c: CQ, a: &CQ, k: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFun { num: Poly1::constant(c), den: vec![(a.clone(), k)] }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Denominator expanded to a dense polynomial.
    pub fn expanded_den(&self) -> Poly1 {
        let mut d = Poly1::one();
        for (p, k) in &self.den {
            let lin = Poly1::linear(p);
            for _ in 0..*k {
                d = d.mul(&lin);
            }
        }
        d
    }

    pub fn den_factors(&self) -> &[(CQ, usize)] {
        &self.den
    }

    fn reduce(mut self) -> Self {
        if self.num.is_zero() {
            return Self::zero();
        }
        let mut den = Vec::with_capacity(self.den.len());
        for (p, mut k) in std::mem::take(&mut self.den) {
            while k > 0 && self.num.eval(&p).is_zero() {
                self.num = self.num.div_linear(&p);
                k -= 1;
            }
            if k > 0 {
                den.push((p, k));
            }
        }
        den.sort_by(|a, b| cq_cmp(&a.0, &b.0));
        RatFun { num: self.num, den }
    }

    fn merged_den(&self, o: &Self) -> Vec<(CQ, usize)> {
        let mut out = self.den.clone();
        for (p, k) in &o.den {
            match out.iter_mut().find(|(q, _)| q == p) {
                Some((_, m)) => *m = (*m).max(*k),
                None => out.push((p.clone(), *k)),
            }
        }
        out.sort_by(|a, b| cq_cmp(&a.0, &b.0));
        out
    }

    /// Multiplier polynomial bringing this function onto the common
    /// denominator `common`.
    fn complement(&self, common: &[(CQ, usize)]) -> Poly1 {
        let mut m = Poly1::one();
        for (p, k) in common {
            let own = self
                .den
                .iter()
                .find(|(q, _)| q == p)
                .map_or(0, |(_, kk)| *kk);
            let lin = Poly1::linear(p);
            for _ in own..*k {
                m = m.mul(&lin);
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let common = self.merged_den(o);
        let num = self
            .num
            .mul(&self.complement(&common))
            .add(&o.num.mul(&o.complement(&common)));
        RatFun { num, den: common }.reduce()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        RatFun { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut den = self.den.clone();
        for (p, k) in &o.den {
            match den.iter_mut().find(|(q, _)| q == p) {
                Some((_, m)) => *m += *k,
                None => den.push((p.clone(), *k)),
            }
        }
        den.sort_by(|a, b| cq_cmp(&a.0, &b.0));
        RatFun { num: self.num.mul(&o.num), den }.reduce()
    }

    pub fn scale(&self, c: &CQ) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFun { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn scale_q(&self, c: &Q) -> Self {
        self.scale(&CQ::from_q(c.clone()))
    }

    /// Division by a nonzero polynomial that splits over linear factors we
    /// can discover from its roots among our structural points is not
    /// needed; only division by factored functions with constant or known
    /// numerators occurs, via `mul` with an explicit inverse:
    pub fn inverse_of_pole(c: CQ, a: &CQ, k: usize) -> Self {
        // (c/(t-a)^k)^{-1} = (t-a)^k / c
        let mut p = Poly1::constant(c.inv());
        let lin = Poly1::linear(a);
        for _ in 0..k {
            p = p.mul(&lin);
        }
        RatFun::from_poly(p)
    }

    pub fn derivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if self.den.is_empty() {
            return Self::from_poly(self.num.derivative());
        }
        // f = n / prod (t-p_i)^{k_i};
        // f' = [n' L - n sum_i k_i L/(t-p_i)] / (D L), L = prod (t-p_i)
        let mut l = Poly1::one();
        for (p, _) in &self.den {
            l = l.mul(&Poly1::linear(p));
        }
        let mut s = Poly1::zero();
        for (p, k) in &self.den {
            let mut li = Poly1::constant(CQ::from_i64(*k as i64));
            for (q2, _) in &self.den {
                if q2 != p {
                    li = li.mul(&Poly1::linear(q2));
                }
            }
            s = s.add(&li);
        }
        let num = self.num.derivative().mul(&l).sub(&self.num.mul(&s));
        let mut den = self.den.clone();
        for (_, k) in den.iter_mut() {
            *k += 1;
        }
        RatFun { num, den }.reduce()
    }

    /// Order of vanishing at `a`: positive = zero, negative = pole;
    /// `i64::MAX` for the zero function.
    pub fn order_at(&self, a: &CQ) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        let den_mult = self
            .den
            .iter()
            .find(|(p, _)| p == a)
            .map_or(0, |(_, k)| *k) as i64;
        if den_mult > 0 {
            // reduced: numerator cannot vanish at a denominator root
            return -den_mult;
        }
        let mut m = 0i64;
        let mut p = self.num.clone();
        while !p.is_zero() && p.eval(a).is_zero() {
            p = p.div_linear(a);
            m += 1;
        }
        m
    }

    /// Laurent coefficients at `a`, for exponents `lo..=hi`.
    pub fn laurent_at(&self, a: &CQ, lo: i64, hi: i64) -> Vec<CQ> {
        assert!(lo <= hi);
        if self.is_zero() {
            return vec![CQ::zero(); (hi - lo + 1) as usize];
        }
        // local series of num and den around a
        let mut n = self.num.shift(a);
        let mut d = self.expanded_den().shift(a);
        let strip = |p: &mut Poly1| -> i64 {
            let mut k = 0;
            while !p.is_zero() && p.coeffs.first().map_or(false, |c| c.is_zero()) {
                p.coeffs.remove(0);
                k += 1;
            }
            k
        };
        let kn = strip(&mut n);
        let kd = strip(&mut d);
        let ord = kn - kd;
        let need = (hi - ord).max(0) as usize + 1;
        let dinv0 = d.coeffs[0].inv();
        let mut series: Vec<CQ> = Vec::with_capacity(need);
        let mut rem: Vec<CQ> = n.coeffs.clone();
        rem.resize(need.max(rem.len()), CQ::zero());
        for k in 0..need {
            let c = &rem[k] * &dinv0;
            for (j, dc) in d.coeffs.iter().enumerate() {
                if k + j < rem.len() {
                    let sub = &c * dc;
                    rem[k + j] -= &sub;
                }
            }
            series.push(c);
        }
        (lo..=hi)
            .map(|e| {
                let idx = e - ord;
                if idx < 0 || idx as usize >= series.len() {
                    CQ::zero()
                } else {
                    series[idx as usize].clone()
                }
            })
            .collect()
    }

    /// Order at infinity: positive = decay, negative = growth.
    pub fn order_at_infinity(&self) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        let dd: i64 = self.den.iter().map(|(_, k)| *k as i64).sum();
        dd - self.num.degree()
    }

    /// Substitute `t = 1/s`.
    pub fn subst_inverse(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        // num(1/s) = s^{-dn} rev(num)(s), den factor (1/s - p):
        //   p != 0: (1 - p s)/s = (-p)(s - 1/p) / s
        //   p == 0: 1/s
        let dn = self.num.degree();
        let mut rev: Vec<CQ> = self.num.coeffs.iter().rev().cloned().collect();
        // rev may have leading (low-order) zeros corresponding to s factors
        let mut s_num_zeros = 0i64;
        while rev.first().map_or(false, |c| c.is_zero()) {
            rev.remove(0);
            s_num_zeros += 1;
        }
        let mut num = Poly1::from_coeffs(rev);
        let mut s_power = -dn + s_num_zeros; // num(1/s) = s^{s_power} * num(s)
        let mut den = Vec::new();
        let mut scalar = CQ::from_i64(1);
        for (p, k) in &self.den {
            if p.is_zero() {
                s_power += *k as i64;
            } else {
                s_power += *k as i64;
                let mut f = -p.clone();
                let mut pw = CQ::from_i64(1);
                for _ in 0..*k {
                    pw = &pw * &f;
                }
                let _ = f;
                f = pw;
                scalar = &scalar * &f.inv();
                den.push((p.inv(), *k));
            }
        }
        num = num.scale(&scalar);
        match s_power.cmp(&0) {
            Ordering::Greater => {
                let mut t = Poly1::one();
                for _ in 0..s_power {
                    t = t.mul(&Poly1::t());
                }
                num = num.mul(&t);
            }
            Ordering::Less => {
                den.push((CQ::zero(), (-s_power) as usize));
            }
            Ordering::Equal => {}
        }
        den.sort_by(|a, b| cq_cmp(&a.0, &b.0));
        RatFun { num, den }.reduce()
    }

    pub fn eval(&self, x: &CQ) -> CQ {
        let mut d = CQ::from_i64(1);
        for (p, k) in &self.den {
            let lin = x.clone() - p.clone();
            assert!(!lin.is_zero(), "evaluation at a pole");
            for _ in 0..*k {
                d = &d * &lin;
            }
        }
        &self.num.eval(x) * &d.inv()
    }

    pub fn eval_c64(&self, x: C64) -> C64 {
        let mut d = C64::new(1.0, 0.0);
        for (p, k) in &self.den {
            let lin = x - p.to_c64();
            for _ in 0..*k {
                d *= lin;
            }
        }
        self.num.eval_c64(x) / d
    }
}
