//! The solution family `u(x, t) = r²eᵗ + h(t)` on `ℝ^{n−1} × ℝ`, with
//! `r = |x|` and `2k = n + 1`.
//!
//! Substituting the ansatz into `σ_k(D²u)` leaves
//! `A·e^{(k−1)t}·h''(t) + B·e^{kt}`, because the `r²` coefficient
//! `C(n−2,k−1) − C(n−2,k−2)` vanishes exactly when `2k = n + 1`. Setting the
//! result to 1 and integrating twice (dropping the affine part) gives
//!
//! ```text
//! h(t) = e^{−(k−1)t} / (A (k−1)²) − (B/A) eᵗ
//! ```
//!
//! with `A = 2^{k−1}·C(n−1,k−1)` and `B = 2^k·C(n−1,k)`. Extra variables
//! `w ∈ ℝ^m` on which `u` does not depend extend the construction to any
//! total dimension `n + m ≥ 2k − 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::symfunc::{DoubleDouble, SymmetricMatrix};

/// `|exponent|` beyond which `exp` is refused.
pub const EXPONENT_LIMIT: f64 = 700.0;

pub(crate) fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || n < 0 || k > n {
        0
    } else {
        num_integer::binomial(n, k)
    }
}

/// `C(n−2,k−1) − C(n−2,k−2)`, the coefficient of `r²` (up to `2^{k−1}e^{kt}`)
/// left in `σ_k(D²u)` by the ansatz.
pub fn cancellation_coefficient(n: i64, k: i64) -> Result<i64> {
    if k < 2 || k > n - 1 {
        return domain(format!("k = {k} must satisfy 2 <= k <= n - 1 = {}", n - 1));
    }
    Ok(binomial(n - 2, k - 1) - binomial(n - 2, k - 2))
}

fn rational_to_string<S: Serializer>(
    q: &BigRational,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.serialize_str(&q.to_string())
}

/// Constants of one member of the solution family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionParams {
    pub n_base: usize,
    pub k: usize,
    pub m: usize,
    #[serde(rename = "A", serialize_with = "rational_to_string")]
    pub a: BigRational,
    #[serde(rename = "B", serialize_with = "rational_to_string")]
    pub b: BigRational,
    #[serde(serialize_with = "rational_to_string")]
    pub h_coeff_decay: BigRational,
    #[serde(serialize_with = "rational_to_string")]
    pub h_coeff_growth: BigRational,
    #[serde(skip)]
    floats: Floats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Floats {
    a: f64,
    b: f64,
    decay: f64,
    growth: f64,
    /// `h_coeff_decay`, and the coefficients of `e^{−(k−1)t}` and `eᵗ` in
    /// `h''`, as double-doubles.
    decay_dd: DoubleDouble,
    second_decay: DoubleDouble,
    second_growth: DoubleDouble,
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Nearest double-double to `q`.
fn to_extended(q: &BigRational) -> DoubleDouble {
    let hi = to_f64(q);
    let lo = BigRational::from_float(hi).map_or(0.0, |h| to_f64(&(q - h)));
    DoubleDouble::new(hi, lo)
}

fn check_base(n_base: usize) -> Result<usize> {
    if n_base < 3 || n_base.is_multiple_of(2) {
        return domain(format!("2k = n+1 requires odd n >= 3 (got n = {n_base})"));
    }
    Ok(n_base.div_ceil(2))
}

impl SolutionParams {
    /// Builds the family member for arbitrary candidate constants `A`, `B`.
    /// Only [`derive_constants`] guarantees that the result solves the
    /// equation; this constructor exists so wrong constants can be checked
    /// and rejected by the exact certifier.
    pub fn with_constants(n_base: usize, a: BigRational, b: BigRational) -> Result<Self> {
        let k = check_base(n_base)?;
        if !a.is_positive() || !b.is_positive() {
            return domain("A and B must be positive");
        }
        let km1 = BigInt::from(k as i64 - 1);
        let h_coeff_decay =
            BigRational::one() / (a.clone() * BigRational::from_integer(&km1 * &km1));
        let h_coeff_growth = -(b.clone() / a.clone());
        let second_decay = &h_coeff_decay * BigRational::from_integer(&km1 * &km1);
        let floats = Floats {
            a: to_f64(&a),
            b: to_f64(&b),
            decay: to_f64(&h_coeff_decay),
            growth: to_f64(&h_coeff_growth),
            decay_dd: to_extended(&h_coeff_decay),
            second_decay: to_extended(&second_decay),
            second_growth: to_extended(&h_coeff_growth),
        };
        Ok(Self {
            n_base,
            k,
            m: 0,
            a,
            b,
            h_coeff_decay,
            h_coeff_growth,
            floats,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.n_base + self.m
    }

    /// Human-readable closed form of `h`.
    pub fn h_formula(&self) -> String {
        format!(
            "({})*exp({}) + ({})*exp(t)",
            self.h_coeff_decay,
            exponent_string(-(self.k as i64 - 1)),
            self.h_coeff_growth
        )
    }

    fn guard(&self, t: f64) -> Result<()> {
        let scale = (self.k as f64 - 1.0).max(1.0);
        if !t.is_finite() || t.abs() * scale > EXPONENT_LIMIT {
            return Err(Error::Range(format!(
                "t = {t} overflows: |t|·max(k-1,1) must stay within {EXPONENT_LIMIT}"
            )));
        }
        Ok(())
    }
}

fn exponent_string(b: i64) -> String {
    match b {
        0 => "0".into(),
        1 => "t".into(),
        -1 => "-t".into(),
        _ => format!("{b}t"),
    }
}

/// The solution constants for odd `n_base ≥ 3` and `k = (n_base + 1)/2`.
pub fn derive_constants(n_base: usize) -> Result<SolutionParams> {
    let k = check_base(n_base)? as i64;
    let n = n_base as i64;
    let pow2 = |e: i64| BigInt::from(1u8) << e as usize;
    let a = pow2(k - 1) * BigInt::from(binomial(n - 2, k - 2) + binomial(n - 2, k - 1));
    let b = pow2(k) * BigInt::from(binomial(n - 1, k));
    SolutionParams::with_constants(
        n_base,
        BigRational::from_integer(a),
        BigRational::from_integer(b),
    )
}

/// Pads the construction with `m` variables on which `u` does not depend.
pub fn extend(p: &SolutionParams, m: usize) -> SolutionParams {
    SolutionParams { m, ..p.clone() }
}

/// `h`, `h'` or `h''` at `t` (`order` 0, 1 or 2).
pub fn h_eval(p: &SolutionParams, t: f64, order: u8) -> Result<f64> {
    if order > 2 {
        return domain(format!("derivative order {order} not in 0..=2"));
    }
    p.guard(t)?;
    let decay_rate = -(p.k as f64 - 1.0);
    let f = &p.floats;
    Ok(f.decay * decay_rate.powi(order as i32) * (decay_rate * t).exp() + f.growth * t.exp())
}

/// Right-hand side `(1 − B e^{kt}) / (A e^{(k−1)t})` of the ODE for `h''`.
pub fn h_second_from_equation(p: &SolutionParams, t: f64) -> Result<f64> {
    p.guard(t)?;
    let k = p.k as f64;
    let f = &p.floats;
    Ok((1.0 - f.b * (k * t).exp()) / (f.a * ((k - 1.0) * t).exp()))
}

/// Evaluation point: `x ∈ ℝ^{n−1}`, `t ∈ ℝ`, `w ∈ ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub t: f64,
    pub w: Vec<f64>,
}

/// The Hessian of [`eval_jet`] in double-double arithmetic, row-major.
///
/// Rounding the Hessian entries to `f64` already moves `σ_k` by up to a few
/// `1e-9` near the edge of the standard sample box for `n = 7`; this form
/// keeps entry errors near `1e-18` relative.
pub fn eval_hessian_extended(p: &SolutionParams, pt: &Point) -> Result<Vec<DoubleDouble>> {
    pt.check(p)?;
    p.guard(pt.t)?;
    let nx = p.n_base - 1;
    let dim = p.total_dim();
    let t = DoubleDouble::from(pt.t);
    let et = t.exp();
    let decay = (t * -(p.k as f64 - 1.0)).exp();
    let r2 = pt.x.iter().fold(DoubleDouble::from(0.0), |acc, &v| {
        acc + DoubleDouble::product(v, v)
    });

    let zero = DoubleDouble::from(0.0);
    let mut h = vec![zero; dim * dim];
    for (i, &xi) in pt.x.iter().enumerate() {
        h[i * dim + i] = et * 2.0;
        let cross = et * (2.0 * xi);
        h[i * dim + nx] = cross;
        h[nx * dim + i] = cross;
    }
    h[nx * dim + nx] = r2 * et + p.floats.second_decay * decay + p.floats.second_growth * et;
    Ok(h)
}

impl Point {
    pub fn new(x: Vec<f64>, t: f64, w: Vec<f64>) -> Self {
        Self { x, t, w }
    }

    /// Splits a flat coordinate list `(x_1, …, x_{n−1}, t, w_1, …, w_m)`.
    pub fn from_coords(p: &SolutionParams, coords: &[f64]) -> Result<Self> {
        if coords.len() != p.total_dim() {
            return domain(format!(
                "expected {} coordinates (x: {}, t: 1, w: {}), got {}",
                p.total_dim(),
                p.n_base - 1,
                p.m,
                coords.len()
            ));
        }
        let nx = p.n_base - 1;
        Ok(Self {
            x: coords[..nx].to_vec(),
            t: coords[nx],
            w: coords[nx + 1..].to_vec(),
        })
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.push(self.t);
        c.extend_from_slice(&self.w);
        c
    }

    fn check(&self, p: &SolutionParams) -> Result<()> {
        if self.x.len() != p.n_base - 1 || self.w.len() != p.m {
            return domain(format!(
                "point has x: {}, w: {} coordinates; expected x: {}, w: {}",
                self.x.len(),
                self.w.len(),
                p.n_base - 1,
                p.m
            ));
        }
        Ok(())
    }
}

/// Value, gradient and Hessian of `u` at a point. Coordinates are ordered
/// `x`, then `t`, then `w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymmetricMatrix,
}

/// `u` alone; cheaper than [`eval_jet`] and used by finite differences.
pub fn eval_value(p: &SolutionParams, pt: &Point) -> Result<f64> {
    pt.check(p)?;
    let r2: f64 = pt.x.iter().map(|v| v * v).sum();
    Ok(r2 * pt.t.exp() + h_eval(p, pt.t, 0)?)
}

/// `u` in double-double arithmetic at flat coordinates `(x, t, w)`.
pub fn eval_value_extended(p: &SolutionParams, coords: &[DoubleDouble]) -> Result<DoubleDouble> {
    if coords.len() != p.total_dim() {
        return domain(format!(
            "expected {} coordinates, got {}",
            p.total_dim(),
            coords.len()
        ));
    }
    let nx = p.n_base - 1;
    let t = coords[nx];
    p.guard(t.to_f64())?;
    let r2 = coords[..nx]
        .iter()
        .fold(DoubleDouble::ZERO, |acc, &v| acc + v * v);
    let et = t.exp();
    let decay = (t * -(p.k as f64 - 1.0)).exp();
    Ok(r2 * et + p.floats.decay_dd * decay + p.floats.second_growth * et)
}

/// Closed-form jet in unrotated coordinates:
/// `u_{x_i x_j} = 2eᵗδ_ij`, `u_{x_i t} = 2x_i eᵗ`, `u_tt = r²eᵗ + h''`.
pub fn eval_jet(p: &SolutionParams, pt: &Point) -> Result<Jet2> {
    pt.check(p)?;
    let nx = p.n_base - 1;
    let dim = p.total_dim();
    let et = {
        p.guard(pt.t)?;
        pt.t.exp()
    };
    let r2: f64 = pt.x.iter().map(|v| v * v).sum();

    let mut gradient = vec![0.0; dim];
    for (g, &xi) in gradient.iter_mut().zip(&pt.x) {
        *g = 2.0 * xi * et;
    }
    gradient[nx] = r2 * et + h_eval(p, pt.t, 1)?;

    let mut h = vec![0.0; dim * dim];
    for (i, &xi) in pt.x.iter().enumerate() {
        h[i * dim + i] = 2.0 * et;
        h[i * dim + nx] = 2.0 * xi * et;
        h[nx * dim + i] = 2.0 * xi * et;
    }
    h[nx * dim + nx] = r2 * et + h_eval(p, pt.t, 2)?;

    Ok(Jet2 {
        value: r2 * et + h_eval(p, pt.t, 0)?,
        gradient,
        hessian: SymmetricMatrix::new(dim, h)?,
    })
}

/// Exact rational `p/q`.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
