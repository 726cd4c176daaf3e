//! Seeded numerical audits of the constructed solutions.
//!
//! Sample points come from a counter-based SplitMix64 stream: draw number
//! `c` (0-based) is `mix(seed + (c + 1)·0x9E3779B97F4A7C15)`, mapped to
//! `[0, 1)` as `(z >> 11)·2⁻⁵³`. Sample `i` of a scan in total dimension `D`
//! uses draws `i·D … i·D + D − 1` for `x_1 … x_{n−1}, t, w_1 … w_m` in that
//! order. Any implementation of the same recipe sees identical points.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cone::{gamma_k_by_lemma, gamma_k_by_sigma_positivity, negative_threshold};
use crate::error::{domain, Error, Result};
use crate::solution::{
    eval_hessian_extended, eval_jet, eval_value, eval_value_extended, Point, SolutionParams,
    EXPONENT_LIMIT,
};
use crate::symfunc::{
    eigenvalues_symmetric, eigenvalues_symmetric_extended, elementary_symmetric_extended,
    sigma_via_minors, DoubleDouble, SymmetricMatrix,
};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw number `counter` of the stream for `seed`, uniform in `[0, 1)`.
pub fn uniform_draw(seed: u64, counter: u64) -> f64 {
    let z = splitmix64_mix(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sampling region and stream for a residual scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBox {
    pub x_radius: f64,
    pub t_range: (f64, f64),
    pub w_radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl SampleBox {
    /// `|x_i| ≤ 3`, `t ∈ [−2, 2]`, `|w_j| ≤ 3`.
    pub fn standard(count: usize, seed: u64) -> Self {
        Self {
            x_radius: 3.0,
            t_range: (-2.0, 2.0),
            w_radius: 3.0,
            count,
            seed,
        }
    }

    fn validate(&self, p: &SolutionParams) -> Result<()> {
        let (t_min, t_max) = self.t_range;
        if !(self.x_radius > 0.0 && self.x_radius.is_finite()) {
            return domain(format!("x_radius must be positive, got {}", self.x_radius));
        }
        if !(self.w_radius >= 0.0 && self.w_radius.is_finite()) {
            return domain(format!(
                "w_radius must be nonnegative, got {}",
                self.w_radius
            ));
        }
        if !(t_min < t_max) {
            return domain(format!("t range [{t_min}, {t_max}] is empty"));
        }
        if self.count == 0 {
            return domain("sample count must be positive");
        }
        let scale = (p.k as f64 - 1.0).max(1.0);
        if t_min.abs().max(t_max.abs()) * scale > EXPONENT_LIMIT {
            return Err(Error::Range(format!(
                "t range [{t_min}, {t_max}] exceeds the overflow guard for k = {}",
                p.k
            )));
        }
        Ok(())
    }

    /// Sample `index` of the deterministic stream.
    pub fn point(&self, p: &SolutionParams, index: usize) -> Point {
        let dim = p.total_dim() as u64;
        let base = index as u64 * dim;
        let draw = |j: u64, lo: f64, hi: f64| lo + (hi - lo) * uniform_draw(self.seed, base + j);
        let nx = (p.n_base - 1) as u64;
        let x = (0..nx)
            .map(|j| draw(j, -self.x_radius, self.x_radius))
            .collect();
        let t = draw(nx, self.t_range.0, self.t_range.1);
        let w = (0..p.m as u64)
            .map(|j| draw(nx + 1 + j, -self.w_radius, self.w_radius))
            .collect();
        Point { x, t, w }
    }
}

/// The solution constants as echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub n_base: usize,
    pub k: usize,
    pub m: usize,
    pub total_dim: usize,
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    pub h: String,
}

impl From<&SolutionParams> for ParamsEcho {
    fn from(p: &SolutionParams) -> Self {
        Self {
            n_base: p.n_base,
            k: p.k,
            m: p.m,
            total_dim: p.total_dim(),
            a: p.a.to_string(),
            b: p.b.to_string(),
            h: p.h_formula(),
        }
    }
}

/// Every this-many samples, the eigenvalue residual is cross-checked against
/// the principal-minor sum.
pub const MINOR_CHECK_STRIDE: usize = 100;

/// Largest accepted gap between the `f64` minor sum and the extended
/// eigenvalue path. The minor sum works from the rounded Hessian, so this
/// only catches gross disagreement.
pub const MINOR_CHECK_TOLERANCE: f64 = 1e-6;

/// Tolerance for `|Σ arctan λ_i − π/2|` in the phase check.
pub const PHASE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub params: ParamsEcho,
    pub sample_box: SampleBox,
    pub samples: usize,
    /// `max |σ_k(D²u) − 1|`, with `σ_k` taken from the spectrum of the
    /// double-double Hessian.
    pub max_abs_residual: f64,
    /// First sample attaining the maximum.
    pub argmax_point: Point,
    pub argmax_index: usize,
    /// Samples rejected by the `σ_j > 0` cone test.
    pub cone_failures: usize,
    /// Samples where the lemma's hypotheses do not hold.
    pub lemma_failures: usize,
    pub max_negative_eigenvalues: usize,
    /// Smallest `σ_j`, `j ≤ k`, seen at any sample.
    pub min_sigma_j: f64,
    /// Present only for the unextended `n = 3` case.
    pub phase_ok: Option<bool>,
    pub max_phase_deviation: Option<f64>,
    pub minor_check_samples: usize,
    /// `max |σ_k(minors) − σ_k(spectrum)|` over the cross-checked samples.
    pub minor_check_max_abs_diff: f64,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl ResidualReport {
    /// Whether every check of the scan passed with residual tolerance `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        self.max_abs_residual <= tol
            && self.cone_failures == 0
            && self.lemma_failures == 0
            && self.max_negative_eigenvalues <= 1
            && self.phase_ok != Some(false)
            && self.minor_check_max_abs_diff <= MINOR_CHECK_TOLERANCE
    }
}

struct SampleOutcome {
    residual: f64,
    in_cone: bool,
    lemma_ok: bool,
    negatives: usize,
    min_sigma: f64,
    phase_dev: Option<f64>,
    minor_diff: Option<f64>,
}

fn audit_point(p: &SolutionParams, pt: &Point, index: usize) -> Result<SampleOutcome> {
    let jet = eval_jet(p, pt)?;
    let hess = &jet.hessian;
    let spectrum = eigenvalues_symmetric(hess)?;
    let extended = eigenvalues_symmetric_extended(p.total_dim(), &eval_hessian_extended(p, pt)?)?;
    let sigma_k = elementary_symmetric_extended(&extended, p.k)?;
    let positivity = gamma_k_by_sigma_positivity(hess, p.k)?;
    let lemma = gamma_k_by_lemma(hess, p.k)?;
    let min_sigma = (1..=p.k)
        .map(|j| positivity.sigmas.get(j))
        .fold(f64::INFINITY, f64::min);
    let phase_dev = (p.n_base == 3 && p.m == 0).then(|| {
        let phase: f64 = extended.iter().map(|l| l.to_f64().atan()).sum();
        (phase - FRAC_PI_2).abs()
    });
    let minor_diff = if index.is_multiple_of(MINOR_CHECK_STRIDE) {
        Some((sigma_via_minors(hess, p.k)? - sigma_k.to_f64()).abs())
    } else {
        None
    };
    Ok(SampleOutcome {
        residual: (sigma_k - 1.0).abs().to_f64(),
        in_cone: positivity.in_cone,
        lemma_ok: lemma.in_cone,
        negatives: spectrum.count_below(negative_threshold(hess)),
        min_sigma,
        phase_dev,
        minor_diff,
    })
}

/// Samples the box and audits `σ_k(D²u) = 1` and ellipticity at each point.
///
/// Points are evaluated in parallel on the current rayon pool; the reduction
/// runs in sample order, so the report does not depend on the thread count.
pub fn residual_scan(p: &SolutionParams, sample_box: &SampleBox) -> Result<ResidualReport> {
    sample_box.validate(p)?;
    let start = Instant::now();
    let outcomes: Vec<(Point, SampleOutcome)> = (0..sample_box.count)
        .into_par_iter()
        .map(|i| {
            let pt = sample_box.point(p, i);
            audit_point(p, &pt, i).map(|o| (pt, o))
        })
        .collect::<Result<_>>()?;

    let mut max_abs_residual = -1.0;
    let mut argmax_index = 0;
    let mut cone_failures = 0;
    let mut lemma_failures = 0;
    let mut max_negative_eigenvalues = 0;
    let mut min_sigma_j = f64::INFINITY;
    let mut max_phase: Option<f64> = None;
    let mut minor_check_samples = 0;
    let mut minor_check_max_abs_diff: f64 = 0.0;
    for (i, (_, o)) in outcomes.iter().enumerate() {
        if o.residual > max_abs_residual {
            max_abs_residual = o.residual;
            argmax_index = i;
        }
        cone_failures += usize::from(!o.in_cone);
        lemma_failures += usize::from(!o.lemma_ok);
        max_negative_eigenvalues = max_negative_eigenvalues.max(o.negatives);
        min_sigma_j = min_sigma_j.min(o.min_sigma);
        if let Some(d) = o.phase_dev {
            max_phase = Some(max_phase.map_or(d, |m| m.max(d)));
        }
        if let Some(d) = o.minor_diff {
            minor_check_samples += 1;
            minor_check_max_abs_diff = minor_check_max_abs_diff.max(d);
        }
    }

    Ok(ResidualReport {
        params: ParamsEcho::from(p),
        sample_box: sample_box.clone(),
        samples: sample_box.count,
        max_abs_residual,
        argmax_point: outcomes[argmax_index].0.clone(),
        argmax_index,
        cone_failures,
        lemma_failures,
        max_negative_eigenvalues,
        min_sigma_j,
        phase_ok: max_phase.map(|d| d <= PHASE_TOLERANCE),
        max_phase_deviation: max_phase,
        minor_check_samples,
        minor_check_max_abs_diff,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Central-difference Hessian of an arbitrary function of `coords`.
///
/// Diagonal entries use `(f(+h) − 2f + f(−h))/h²`, off-diagonal entries the
/// four-point cross stencil `(f(++) − f(+−) − f(−+) + f(−−))/(4h²)`.
/// Stencil coordinates and the function are double-double, so shifted
/// coordinates are exact and cancellation in the differences does not eat
/// the result.
pub fn fd_hessian_of<F>(f: F, coords: &[f64], step: f64) -> Result<SymmetricMatrix>
where
    F: Fn(&[DoubleDouble]) -> Result<DoubleDouble>,
{
    if !(step > 0.0 && step.is_finite()) {
        return domain(format!(
            "finite-difference step must be positive, got {step}"
        ));
    }
    let n = coords.len();
    let base: Vec<DoubleDouble> = coords.iter().map(|&c| DoubleDouble::from(c)).collect();
    let mut x = base.clone();
    let mut at = |shifts: &[(usize, f64)]| -> Result<DoubleDouble> {
        for &(i, s) in shifts {
            x[i] = x[i] + s;
        }
        let v = f(&x);
        x.copy_from_slice(&base);
        v
    };
    let centre = at(&[])?;
    let h2 = DoubleDouble::product(step, step);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let second = (at(&[(i, step)])? - centre * 2.0 + at(&[(i, -step)])?) / h2;
        out[i * n + i] = second.to_f64();
        for j in (i + 1)..n {
            let pp = at(&[(i, step), (j, step)])?;
            let pm = at(&[(i, step), (j, -step)])?;
            let mp = at(&[(i, -step), (j, step)])?;
            let mm = at(&[(i, -step), (j, -step)])?;
            let v = ((pp - pm - mp + mm) / (h2 * 4.0)).to_f64();
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    SymmetricMatrix::new(n, out)
}

/// Finite-difference Hessian of the solution's value function.
pub fn fd_hessian(p: &SolutionParams, pt: &Point, step: f64) -> Result<SymmetricMatrix> {
    let coords = pt.coords();
    if coords.len() != p.total_dim() {
        return domain("point dimension does not match the solution");
    }
    fd_hessian_of(|c| eval_value_extended(p, c), &coords, step)
}

/// Special Lagrangian phase `Σ arctan λ_i`.
pub fn sl_phase(m: &SymmetricMatrix) -> Result<f64> {
    Ok(eigenvalues_symmetric(m)?
        .values
        .iter()
        .map(|l| l.atan())
        .sum())
}

/// Largest degree accepted by [`nonpoly_witness`].
pub const MAX_WITNESS_DEGREE: usize = 40;

/// Finite differences showing that `t ↦ u(0, t)` is not a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Entry `d − 1` is `Δ^{d+1} f(0)` at unit spacing, `d = 1..=max_degree`.
    pub differences: Vec<f64>,
    /// Each difference divided by the largest `|f|` on its stencil.
    pub scaled: Vec<f64>,
}

/// Forward differences `Δ^{d+1} f(0)`, `d = 1..=max_degree`, of any function
/// sampled at `t = 0, 1, …, max_degree + 1`.
pub fn forward_differences<F>(f: F, max_degree: usize) -> Result<Witness>
where
    F: Fn(f64) -> Result<f64>,
{
    if max_degree == 0 || max_degree > MAX_WITNESS_DEGREE {
        return domain(format!(
            "max_degree must lie in 1..={MAX_WITNESS_DEGREE}, got {max_degree}"
        ));
    }
    let values: Vec<f64> = (0..=max_degree + 1)
        .map(|i| f(i as f64))
        .collect::<Result<_>>()?;
    let mut table = values.clone();
    let mut differences = Vec::with_capacity(max_degree);
    let mut scaled = Vec::with_capacity(max_degree);
    for order in 1..=max_degree + 1 {
        for i in 0..table.len() - order {
            table[i] = table[i + 1] - table[i];
        }
        if order >= 2 {
            let stencil_max = values[..=order].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            differences.push(table[0]);
            scaled.push(if stencil_max > 0.0 {
                table[0] / stencil_max
            } else {
                0.0
            });
        }
    }
    Ok(Witness {
        differences,
        scaled,
    })
}

/// [`forward_differences`] of `t ↦ u(0, t)`; every entry is nonzero for a
/// non-polynomial `u`.
pub fn nonpoly_witness(p: &SolutionParams, max_degree: usize) -> Result<Witness> {
    if p.m != 0 {
        return domain("the non-polynomial witness is defined for m = 0");
    }
    let x0 = vec![0.0; p.n_base - 1];
    forward_differences(
        |t| eval_value(p, &Point::new(x0.clone(), t, Vec::new())),
        max_degree,
    )
}

/// Absolute off-diagonal Hessian entries.
///
/// A split `u = f(G₁) + g(G₂)` along coordinate groups forces every
/// cross-group entry to vanish identically, so a nonzero `(i, j)` entry at
/// any point rules out splits separating `i` from `j`. This only inspects
/// coordinate-aligned splits.
pub fn split_indicator(p: &SolutionParams, pt: &Point) -> Result<SymmetricMatrix> {
    let hess = eval_jet(p, pt)?.hessian;
    let n = hess.dim();
    let entries = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| if i == j { 0.0 } else { hess.get(i, j).abs() })
        .collect();
    SymmetricMatrix::new(n, entries)
}
