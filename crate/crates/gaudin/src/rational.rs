//! Exact scalars: arbitrary-precision rationals and complex rationals.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Complex, FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::GaudinError;

pub type Q = BigRational;
pub type C64 = Complex<f64>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

/// Parse a rational from the wire format `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Q, GaudinError> {
    let s = s.trim();
    let mk_err = || GaudinError::Parse(format!("invalid rational `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| mk_err())?;
    let d: BigInt = den.parse().map_err(|_| mk_err())?;
    if d.is_zero() {
        return Err(GaudinError::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Q::new(n, d))
}

/// Format a rational in the wire format `"p/q"` (or `"p"` when integral).
pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact embedding of an f64 into the rationals (f64 values are dyadic).
pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_f64(x)
}

/// Complex number with exact rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq)]
pub struct CQ {
    pub re: Q,
    pub im: Q,
}

impl CQ {
    pub fn new(re: Q, im: Q) -> Self {
        CQ { re, im }
    }

    pub fn from_q(re: Q) -> Self {
        CQ { re, im: Q::zero() }
    }

    pub fn from_i64(n: i64) -> Self {
        CQ::from_q(qi(n))
    }

    /// Exact embedding of a complex float.
    pub fn from_c64(z: C64) -> Option<Self> {
        Some(CQ { re: q_from_f64(z.re)?, im: q_from_f64(z.im)? })
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(q_to_f64(&self.re), q_to_f64(&self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> Q {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn conj(&self) -> Self {
        CQ { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        assert!(!n.is_zero(), "division by zero in CQ");
        CQ { re: &self.re / &n, im: -(&self.im / &n) }
    }

    pub fn scale_q(&self, c: &Q) -> Self {
        CQ { re: &self.re * c, im: &self.im * c }
    }

    /// Rough magnitude, for diagnostics only.
    pub fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl fmt::Debug for CQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", format_rational(&self.re))
        } else {
            write!(f, "{}+{}i", format_rational(&self.re), format_rational(&self.im))
        }
    }
}

impl Zero for CQ {
    fn zero() -> Self {
        CQ { re: Q::zero(), im: Q::zero() }
    }
    fn is_zero(&self) -> bool {
        CQ::is_zero(self)
    }
}

impl Add for CQ {
    type Output = CQ;
    fn add(self, rhs: CQ) -> CQ {
        CQ { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl<'a> Add<&'a CQ> for CQ {
    type Output = CQ;
    fn add(self, rhs: &CQ) -> CQ {
        CQ { re: self.re + &rhs.re, im: self.im + &rhs.im }
    }
}

impl AddAssign<&CQ> for CQ {
    fn add_assign(&mut self, rhs: &CQ) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl Sub for CQ {
    type Output = CQ;
    fn sub(self, rhs: CQ) -> CQ {
        CQ { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl SubAssign<&CQ> for CQ {
    fn sub_assign(&mut self, rhs: &CQ) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl Mul for CQ {
    type Output = CQ;
    fn mul(self, rhs: CQ) -> CQ {
        &self * &rhs
    }
}

impl<'a, 'b> Mul<&'b CQ> for &'a CQ {
    type Output = CQ;
    fn mul(self, rhs: &CQ) -> CQ {
        CQ {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl MulAssign<&CQ> for CQ {
    fn mul_assign(&mut self, rhs: &CQ) {
        *self = &*self * rhs;
    }
}

impl Div for CQ {
    type Output = CQ;
    fn div(self, rhs: CQ) -> CQ {
        &self * &rhs.inv()
    }
}

impl Neg for CQ {
    type Output = CQ;
    fn neg(self) -> CQ {
        CQ { re: -self.re, im: -self.im }
    }
}

/// Largest absolute value of a rational, for pivot diagnostics.
pub fn q_abs(x: &Q) -> Q {
    x.abs()
}
