//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| ≤ ulp(hi)/2`, giving about 106 bits of significand.
//!
//! Built from the error-free transformations `two_sum` and `two_prod` (the
//! latter via fused multiply-add).

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    /// Normalizes `hi + lo` exactly.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    /// Nearest `f64`.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::ZERO
            } else {
                Self::new(f64::NAN, 0.0)
            };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let corr = (self - Self::product(ax, ax)).hi * (x * 0.5);
        let (hi, lo) = two_sum(ax, corr);
        Self { hi, lo }
    }

    /// Multiplication by an exact power of two.
    fn ldexp(self, e: i32) -> Self {
        let s = 2f64.powi(e);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    /// `eᵗ` to roughly 1e-29 relative accuracy for `|t| ≤ 700`.
    ///
    /// `t = m·ln 2 + r` with `|r| ≤ ln 2 / 2`; `e^{r/2¹⁰}` comes from a short
    /// Taylor series kept in `expm1` form through the squarings.
    pub fn exp(self) -> Self {
        const LN_2: DoubleDouble = DoubleDouble {
            hi: std::f64::consts::LN_2,
            lo: 2.3190468138462996e-17,
        };
        const HALVINGS: i32 = 10;

        let m = (self.hi / LN_2.hi).round();
        let s = (self - LN_2 * m).ldexp(-HALVINGS);
        // |s| < 3.4e-4, so twelve terms exhaust double-double precision.
        let mut term = s;
        let mut expm1 = s;
        for i in 2..=12 {
            term = term * s / i as f64;
            expm1 = expm1 + term;
        }
        // expm1(2s) = expm1(s)·(2 + expm1(s))
        for _ in 0..HALVINGS {
            expm1 = expm1 * (expm1 + 2.0);
        }
        (expm1 + 1.0).ldexp(m as i32)
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + q3
    }
}

macro_rules! with_f64 {
    ($tr:ident, $f:ident) => {
        impl $tr<f64> for DoubleDouble {
            type Output = Self;
            fn $f(self, rhs: f64) -> Self {
                self.$f(DoubleDouble::from(rhs))
            }
        }
    };
}
with_f64!(Add, add);
with_f64!(Sub, sub);
with_f64!(Mul, mul);
with_f64!(Div, div);
