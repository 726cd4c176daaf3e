//! Elementary symmetric functions and `σ_k` of dense symmetric matrices.
//!
//! `σ_k(M)` is computed three independent ways so each can serve as an
//! oracle for the others:
//!
//! * [`elementary_symmetric`] on the spectrum from [`eigenvalues_symmetric`],
//! * [`sigma_via_minors`], the sum of all principal `k × k` minors,
//! * [`sigma_all_via_charpoly`], the Faddeev–LeVerrier trace recursion.

pub use crate::extended::DoubleDouble;
use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// Largest dimension accepted by [`sigma_via_minors`].
pub const MAX_MINOR_DIM: usize = 14;

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_JACOBI_SWEEPS: usize = 50;

/// Dense real symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from row-major entries, rejecting anything that is not
    /// exactly symmetric.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return domain("matrix dimension must be at least 1");
        }
        if entries.len() != dim * dim {
            return domain(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            ));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                if a != b && !(a.is_nan() && b.is_nan()) {
                    return domain(format!("matrix is not symmetric at ({i},{j}): {a} vs {b}"));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return domain("matrix rows must all have length equal to the row count");
        }
        Self::new(dim, rows.concat())
    }

    /// Accepts a nearly symmetric matrix (`|a_ij − a_ji| ≤ tol`) and replaces
    /// each off-diagonal pair by its average.
    pub fn symmetrized(dim: usize, mut entries: Vec<f64>, tol: f64) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return domain(format!("expected a non-empty {dim}x{dim} matrix"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                if (a - b).abs() > tol {
                    return domain(format!(
                        "matrix is not symmetric at ({i},{j}): |{a} - {b}| exceeds {tol:e}"
                    ));
                }
                let mean = 0.5 * (a + b);
                entries[i * dim + j] = mean;
                entries[j * dim + i] = mean;
            }
        }
        Self::new(dim, entries)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|v| c * v).collect(),
        }
    }

    /// Returns `Gᵀ M G` for the plane rotation `G` by `angle` in the `(p, q)`
    /// coordinate plane.
    pub fn rotated(&self, p: usize, q: usize, angle: f64) -> Result<Self> {
        let n = self.dim;
        if p >= n || q >= n || p == q {
            return domain(format!("invalid rotation plane ({p},{q}) for dim {n}"));
        }
        let (s, c) = angle.sin_cos();
        let mut a = self.entries.clone();
        // columns
        for r in 0..n {
            let (arp, arq) = (a[r * n + p], a[r * n + q]);
            a[r * n + p] = c * arp - s * arq;
            a[r * n + q] = s * arp + c * arq;
        }
        // rows
        for col in 0..n {
            let (apc, aqc) = (a[p * n + col], a[q * n + col]);
            a[p * n + col] = c * apc - s * aqc;
            a[q * n + col] = s * apc + c * aqc;
        }
        Self::symmetrized(n, a, f64::INFINITY)
    }

    /// Entries of the principal submatrix on `idx`, row-major.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }

    fn matmul(&self, other: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.entries[i * n + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other[l * n + j];
                }
            }
        }
        out
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Number of eigenvalues strictly below `-threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v < -threshold).count()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `σ_1 … σ_n` of an `n × n` matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaVector {
    pub n: usize,
    pub sigmas: Vec<f64>,
}

impl SigmaVector {
    /// `σ_k`, with `σ_0 = 1`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.sigmas[k - 1]
        }
    }

    pub fn trace(&self) -> f64 {
        self.get(1)
    }

    pub fn det(&self) -> f64 {
        self.get(self.n)
    }
}

/// `e_k(values)` by the one-row recurrence `e_j ← e_j + v·e_{j−1}`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return domain(format!(
            "k = {k} exceeds the number of values {}",
            values.len()
        ));
    }
    Ok(e_k_recurrence(values, k))
}

/// Determinant of a row-major `k × k` block by Gaussian elimination with
/// partial pivoting. Consumes the scratch buffer.
pub(crate) fn lu_determinant(a: &mut [f64], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x * k + col].abs().total_cmp(&a[y * k + col].abs()))
            .unwrap_or(col);
        if a[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            det = -det;
        }
        let d = a[col * k + col];
        det *= d;
        for r in (col + 1)..k {
            let f = a[r * k + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in (col + 1)..k {
                a[r * k + j] -= f * a[col * k + j];
            }
        }
    }
    det
}

/// `σ_k(M)` as the sum of all principal `k × k` minors.
pub fn sigma_via_minors(m: &SymmetricMatrix, k: usize) -> Result<f64> {
    let n = m.dim();
    if n > MAX_MINOR_DIM {
        return Err(Error::Capability(format!(
            "minor enumeration is limited to dim <= {MAX_MINOR_DIM}, got {n}"
        )));
    }
    if k == 0 || k > n {
        return domain(format!("k = {k} must lie in 1..={n}"));
    }
    let total = (0..n)
        .combinations(k)
        .map(|idx| {
            let mut block = m.principal_submatrix(&idx);
            lu_determinant(&mut block, k)
        })
        .sum();
    Ok(total)
}

/// All of `σ_1 … σ_n` from the characteristic polynomial, computed with the
/// Faddeev–LeVerrier recursion
/// `M_j = A·M_{j−1} + c_{n−j+1}·I`, `c_{n−j} = −tr(A·M_j)/j`.
pub fn sigma_all_via_charpoly(m: &SymmetricMatrix) -> SigmaVector {
    let n = m.dim();
    // c[i] is the coefficient of λ^i; c[n] = 1.
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = vec![0.0; n * n];
    for j in 1..=n {
        for i in 0..n {
            mk[i * n + i] += c[n - j + 1];
        }
        let amk = m.matmul(&mk);
        let tr: f64 = (0..n).map(|i| amk[i * n + i]).sum();
        c[n - j] = -tr / j as f64;
        mk = amk;
    }
    let sigmas = (1..=n)
        .map(|j| if j % 2 == 0 { c[n - j] } else { -c[n - j] })
        .collect();
    SigmaVector { n, sigmas }
}

/// Scalar types the Jacobi solver and the `e_k` recurrence run on.
trait Scalar:
    Copy
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Scalar for DoubleDouble {
    fn from_f64(v: f64) -> Self {
        DoubleDouble::from(v)
    }
    fn to_f64(self) -> f64 {
        DoubleDouble::to_f64(self)
    }
    fn abs(self) -> Self {
        DoubleDouble::abs(self)
    }
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
}

fn e_k_recurrence<T: Scalar>(values: &[T], k: usize) -> T {
    let zero = T::from_f64(0.0);
    let mut e = vec![zero; k + 1];
    e[0] = T::from_f64(1.0);
    for (seen, &v) in values.iter().enumerate() {
        for j in (1..=k.min(seen + 1)).rev() {
            e[j] = e[j] + v * e[j - 1];
        }
    }
    e[k]
}

/// Cyclic Jacobi on a row-major symmetric matrix; returns the (unsorted)
/// diagonal once the off-diagonal Frobenius norm is at most `tol`.
fn jacobi<T: Scalar>(n: usize, mut a: Vec<T>, tol: T) -> Result<Vec<T>> {
    let zero = T::from_f64(0.0);
    let one = T::from_f64(1.0);
    let half = T::from_f64(0.5);
    let two = T::from_f64(2.0);
    let off_norm = |a: &[T]| -> T {
        let mut s = zero;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if !(off > tol) {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::Numeric {
                message: format!("Jacobi did not converge in {MAX_JACOBI_SWEEPS} sweeps"),
                residual: off.to_f64(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == zero {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (two * apq);
                let t = if theta.abs().to_f64() > 1e150 {
                    half / theta
                } else {
                    let mag = one / (theta.abs() + (theta * theta + one).sqrt());
                    if theta < zero {
                        -mag
                    } else {
                        mag
                    }
                };
                let c = one / (t * t + one).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = zero;
                a[q * n + p] = zero;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (a[r * n + p], a[r * n + q]);
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i * n + i]).collect())
}

/// Eigenvalues of `m` by the cyclic Jacobi method.
///
/// Converged once the off-diagonal Frobenius norm is at most
/// `1e-12 · (1 + ‖M‖_F)`; fails after [`MAX_JACOBI_SWEEPS`] sweeps.
pub fn eigenvalues_symmetric(m: &SymmetricMatrix) -> Result<Spectrum> {
    let tol = 1e-12 * (1.0 + m.frobenius_norm());
    let mut values = jacobi(m.dim, m.entries.clone(), tol)?;
    values.sort_by(f64::total_cmp);
    Ok(Spectrum { values })
}

/// Double-double counterpart of [`eigenvalues_symmetric`] for a row-major
/// symmetric matrix. Converges to an off-diagonal norm of
/// `1e-28 · (1 + ‖M‖_F)`. Results are sorted ascending.
pub fn eigenvalues_symmetric_extended(
    dim: usize,
    entries: &[DoubleDouble],
) -> Result<Vec<DoubleDouble>> {
    if dim == 0 || entries.len() != dim * dim {
        return domain(format!("expected a non-empty {dim}x{dim} matrix"));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            if entries[i * dim + j] != entries[j * dim + i] {
                return domain(format!("matrix is not symmetric at ({i},{j})"));
            }
        }
    }
    let norm = entries
        .iter()
        .fold(DoubleDouble::from(0.0), |acc, &v| acc + v * v)
        .sqrt();
    let tol = DoubleDouble::from(1e-28) * (norm + 1.0);
    let mut values = jacobi(dim, entries.to_vec(), tol)?;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(values)
}

/// [`elementary_symmetric`] in double-double arithmetic.
pub fn elementary_symmetric_extended(values: &[DoubleDouble], k: usize) -> Result<DoubleDouble> {
    if k > values.len() {
        return domain(format!(
            "k = {k} exceeds the number of values {}",
            values.len()
        ));
    }
    Ok(e_k_recurrence(values, k))
}

/// `σ_k(M)` through the spectrum: `e_k(λ_1, …, λ_n)`.
pub fn sigma_via_eigenvalues(m: &SymmetricMatrix, k: usize) -> Result<f64> {
    if k > m.dim() {
        return domain(format!("k = {k} must lie in 0..={}", m.dim()));
    }
    let spectrum = eigenvalues_symmetric(m)?;
    elementary_symmetric(&spectrum.values, k)
}
