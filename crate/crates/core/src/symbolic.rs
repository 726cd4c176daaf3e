//! Exact expansion of `σ_k` of the solution Hessian.
//!
//! Every entry of the Hessian, written in coordinates where `x = (r, 0, …, 0)`,
//! is a finite sum `Σ c·r^a·e^{bt}` with rational `c`, nonnegative integer `a`
//! and integer `b`. Such sums form a ring closed under the operations needed
//! for determinants, so `σ_k(D²u)` can be expanded with no rounding at all and
//! compared against the constant 1.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::solution::{binomial, derive_constants, SolutionParams};

/// Largest matrix accepted by the Leibniz expansion in [`sym_det`].
pub const MAX_SYM_DET_DIM: usize = 8;

/// Work limit `C(dim,k)·k!` for [`sym_sigma_k`].
pub const MAX_SIGMA_WORK: u64 = 10_000_000;

/// `r^a · e^{bt}`; ordered by `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Monomial {
    pub a: u32,
    pub b: i32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { a: 0, b: 0 };

    fn times(self, other: Monomial) -> Monomial {
        Monomial {
            a: self.a + other.a,
            b: self.b + other.b,
        }
    }
}

/// Finite sum of rational multiples of [`Monomial`]s. Zero coefficients are
/// never stored, so structural equality is mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymExpr {
    terms: BTreeMap<Monomial, BigRational>,
}

impl SymExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::term(c, 0, 0)
    }

    /// `c · r^a · e^{bt}`.
    pub fn term(c: BigRational, a: u32, b: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial { a, b }, c);
        }
        Self { terms }
    }

    /// Integer-coefficient shorthand for [`SymExpr::term`].
    pub fn int_term(c: i64, a: u32, b: i32) -> Self {
        Self::term(BigRational::from_integer(BigInt::from(c)), a, b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Monomial::ONE).is_some_and(One::is_one)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: u32, b: i32) -> BigRational {
        self.terms
            .get(&Monomial { a, b })
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// The terms carrying exactly `r^a`, as an expression in `t` alone
    /// (the `r` power is kept).
    pub fn r_power_part(&self, a: u32) -> SymExpr {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.a == a)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> SymExpr {
        if c.is_zero() {
            return SymExpr::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Floating-point value at `(r, t)`.
    pub fn eval_f64(&self, r: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                c.to_f64().unwrap_or(f64::NAN) * r.powi(m.a as i32) * (m.b as f64 * t).exp()
            })
            .sum()
    }

    /// Exact value at rational `r` and rational `E = eᵗ`.
    pub fn eval_exact(&self, r: &BigRational, exp_t: &BigRational) -> BigRational {
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let rp: BigRational = Pow::pow(r, m.a);
            let ep: BigRational = if m.b >= 0 {
                Pow::pow(exp_t, m.b as u32)
            } else {
                Pow::pow(exp_t.recip(), m.b.unsigned_abs())
            };
            total += c * rp * ep;
        }
        total
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts = self.terms.iter().map(|(m, c)| {
            let mut s = format!("({c})");
            match m.a {
                0 => {}
                1 => s.push_str("*r"),
                a => s.push_str(&format!("*r^{a}")),
            }
            match m.b {
                0 => {}
                1 => s.push_str("*exp(t)"),
                -1 => s.push_str("*exp(-t)"),
                b => s.push_str(&format!("*exp({b}t)")),
            }
            s
        });
        write!(f, "{}", parts.format(" + "))
    }
}

#[derive(Serialize)]
struct TermRecord {
    coeff: String,
    r_power: u32,
    exp_t: i32,
}

impl Serialize for SymExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (m, c) in &self.terms {
            seq.serialize_element(&TermRecord {
                coeff: c.to_string(),
                r_power: m.a,
                exp_t: m.b,
            })?;
        }
        seq.end()
    }
}

impl Add for &SymExpr {
    type Output = SymExpr;
    fn add(self, rhs: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl Sub for &SymExpr {
    type Output = SymExpr;
    fn sub(self, rhs: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl Neg for &SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        SymExpr {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}

impl Mul for &SymExpr {
    type Output = SymExpr;
    fn mul(self, rhs: &SymExpr) -> SymExpr {
        let mut out = SymExpr::zero();
        for (ml, cl) in &self.terms {
            for (mr, cr) in &rhs.terms {
                out.add_term(ml.times(*mr), cl * cr);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for SymExpr {
            type Output = SymExpr;
            fn $f(self, rhs: SymExpr) -> SymExpr {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Symmetric matrix of [`SymExpr`] entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<SymExpr>,
}

impl SymMatrix {
    pub fn new(dim: usize, entries: Vec<SymExpr>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return domain(format!("expected a non-empty {dim}x{dim} matrix"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return domain(format!("symbolic matrix is not symmetric at ({i},{j})"));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_diagonal(diag: Vec<SymExpr>) -> Self {
        let dim = diag.len();
        let mut entries = vec![SymExpr::zero(); dim * dim];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &SymExpr {
        &self.entries[i * self.dim + j]
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        let entries = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        SymMatrix {
            dim: idx.len(),
            entries,
        }
    }
}

fn permutation_sign(perm: &[usize]) -> bool {
    let inversions = (0..perm.len())
        .flat_map(|i| ((i + 1)..perm.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| perm[i] > perm[j])
        .count();
    inversions % 2 == 0
}

/// Exact determinant by the Leibniz permutation sum.
pub fn sym_det(m: &SymMatrix) -> Result<SymExpr> {
    let n = m.dim();
    if n > MAX_SYM_DET_DIM {
        return Err(Error::Capability(format!(
            "symbolic determinant is limited to dim <= {MAX_SYM_DET_DIM}, got {n}"
        )));
    }
    let mut det = SymExpr::zero();
    'perm: for perm in (0..n).permutations(n) {
        let mut prod = SymExpr::one();
        for (row, &col) in perm.iter().enumerate() {
            let e = m.get(row, col);
            if e.is_zero() {
                continue 'perm;
            }
            prod = &prod * e;
        }
        det = if permutation_sign(&perm) {
            &det + &prod
        } else {
            &det - &prod
        };
    }
    Ok(det)
}

/// `h''` of the closed-form solution as an exact expression.
pub fn h_second_expr(p: &SolutionParams) -> SymExpr {
    let km1 = p.k as i32 - 1;
    let rate = BigRational::from_integer(BigInt::from(km1 * km1));
    &SymExpr::term(&p.h_coeff_decay * rate, 0, -km1)
        + &SymExpr::term(p.h_coeff_growth.clone(), 0, 1)
}

/// The Hessian of `r²eᵗ + h(t)` in coordinates with `x = (r, 0, …, 0)`:
/// `2eᵗ` on the first `n − 1` diagonal slots, `2r·eᵗ` in the corners
/// `(1, n)` and `(n, 1)`, and `r²eᵗ + h''` at `(n, n)`.
///
/// `h_second` is arbitrary here, which lets the same matrix be built for
/// any `(n, k)` pairing.
pub fn rotated_hessian_with(n: usize, h_second: &SymExpr) -> Result<SymMatrix> {
    if n < 2 {
        return domain(format!("rotated Hessian needs n >= 2, got {n}"));
    }
    let last = n - 1;
    let mut entries = vec![SymExpr::zero(); n * n];
    for i in 0..last {
        entries[i * n + i] = SymExpr::int_term(2, 0, 1);
    }
    entries[last] = SymExpr::int_term(2, 1, 1);
    entries[last * n] = SymExpr::int_term(2, 1, 1);
    entries[last * n + last] = &SymExpr::int_term(1, 2, 1) + h_second;
    SymMatrix::new(n, entries)
}

/// [`rotated_hessian_with`] for the given solution constants.
pub fn rotated_hessian_for(p: &SolutionParams) -> Result<SymMatrix> {
    rotated_hessian_with(p.n_base, &h_second_expr(p))
}

/// The rotated Hessian of the derived solution for odd `n_base ≥ 3`.
pub fn build_rotated_hessian(n_base: usize) -> Result<SymMatrix> {
    rotated_hessian_for(&derive_constants(n_base)?)
}

/// `σ_k` split over the index classes used in the hand computation. With
/// `first = 0` and `last = dim − 1`, a `k`-subset is in
///
/// * `both` if it contains `first` and `last`,
/// * `last_only` if it contains `last` but not `first`,
/// * `without_last` if it does not contain `last`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaExpansion {
    pub total: SymExpr,
    pub both: SymExpr,
    pub last_only: SymExpr,
    pub without_last: SymExpr,
    /// Number of subsets in each class, in the order above.
    pub class_sizes: [u64; 3],
}

/// Exact `σ_k(M)` as the sum of all principal `k × k` determinants.
pub fn sym_sigma_k(m: &SymMatrix, k: usize) -> Result<SigmaExpansion> {
    let n = m.dim();
    if k == 0 || k > n {
        return domain(format!("k = {k} must lie in 1..={n}"));
    }
    let work =
        (binomial(n as i64, k as i64) as u64).saturating_mul((1..=k as u64).product::<u64>());
    if work > MAX_SIGMA_WORK {
        return Err(Error::Capability(format!(
            "C({n},{k})·{k}! = {work} exceeds the work limit {MAX_SIGMA_WORK}"
        )));
    }
    let last = n - 1;
    let mut both = SymExpr::zero();
    let mut last_only = SymExpr::zero();
    let mut without_last = SymExpr::zero();
    let mut class_sizes = [0u64; 3];
    for idx in (0..n).combinations(k) {
        let minor = sym_det(&m.principal_submatrix(&idx))?;
        let has_first = idx[0] == 0;
        let has_last = idx[k - 1] == last;
        let (slot, count) = match (has_first, has_last) {
            (true, true) => (&mut both, &mut class_sizes[0]),
            (false, true) => (&mut last_only, &mut class_sizes[1]),
            (_, false) => (&mut without_last, &mut class_sizes[2]),
        };
        *slot = &*slot + &minor;
        *count += 1;
    }
    let total = &(&both + &last_only) + &without_last;
    Ok(SigmaExpansion {
        total,
        both,
        last_only,
        without_last,
        class_sizes,
    })
}

/// Outcome of [`verify_exact`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub n_base: usize,
    pub k: usize,
    pub ok: bool,
    /// `σ_k(D²u) − 1`; empty when `ok`.
    pub residual_expr: SymExpr,
}

fn check_exact_range(n_base: usize) -> Result<()> {
    if !(3..=9).contains(&n_base) || n_base.is_multiple_of(2) {
        return Err(Error::Capability(format!(
            "exact certification covers odd n in 3..=9 (2k = n+1 requires odd n), got {n_base}"
        )));
    }
    Ok(())
}

/// Certifies the given constants: expands `σ_k` of the rotated Hessian and
/// checks that it is identically 1.
pub fn verify_exact_params(p: &SolutionParams) -> Result<Certification> {
    check_exact_range(p.n_base)?;
    let expansion = sym_sigma_k(&rotated_hessian_for(p)?, p.k)?;
    let residual_expr = &expansion.total - &SymExpr::one();
    Ok(Certification {
        n_base: p.n_base,
        k: p.k,
        ok: residual_expr.is_zero(),
        residual_expr,
    })
}

/// Certifies the derived solution for odd `n_base` in `3..=9`.
pub fn verify_exact(n_base: usize) -> Result<Certification> {
    check_exact_range(n_base)?;
    verify_exact_params(&derive_constants(n_base)?)
}
