//! Membership in the Gårding cone `Γ_k⁺`, the component of `{σ_k > 0}`
//! containing the positive-definite matrices.
//!
//! Two tests are provided. [`gamma_k_by_sigma_positivity`] uses the
//! characterization `σ_j > 0` for `j = 1..=k` and is the authority.
//! [`gamma_k_by_lemma`] checks the sufficient condition "σ_k > 0 and at most
//! one negative eigenvalue"; a `false` from it only means the hypotheses
//! fail.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::symfunc::{
    eigenvalues_symmetric, elementary_symmetric, sigma_all_via_charpoly, SigmaVector,
    SymmetricMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMethod {
    SigmaPositivity,
    Lemma,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeVerdict {
    pub in_cone: bool,
    pub sigmas: SigmaVector,
    /// Eigenvalues below [`negative_threshold`].
    pub negative_count: usize,
    pub method: ConeMethod,
}

/// Values of `σ_j` at or below this are treated as the cone boundary.
pub fn sigma_threshold(m: &SymmetricMatrix, j: usize) -> f64 {
    1e-12 * (1.0 + m.frobenius_norm().powi(j as i32))
}

/// Eigenvalues must lie below `-negative_threshold` to count as negative.
pub fn negative_threshold(m: &SymmetricMatrix) -> f64 {
    1e-10 * (1.0 + m.frobenius_norm())
}

fn check_k(m: &SymmetricMatrix, k: usize) -> Result<()> {
    if k == 0 || k > m.dim() {
        return domain(format!("k = {k} must lie in 1..={}", m.dim()));
    }
    Ok(())
}

fn sigma_positive(m: &SymmetricMatrix, sigmas: &SigmaVector, j: usize) -> bool {
    sigmas.get(j) > sigma_threshold(m, j)
}

pub fn gamma_k_by_sigma_positivity(m: &SymmetricMatrix, k: usize) -> Result<ConeVerdict> {
    check_k(m, k)?;
    let sigmas = sigma_all_via_charpoly(m);
    let in_cone = (1..=k).all(|j| sigma_positive(m, &sigmas, j));
    let negative_count = eigenvalues_symmetric(m)?.count_below(negative_threshold(m));
    Ok(ConeVerdict {
        in_cone,
        sigmas,
        negative_count,
        method: ConeMethod::SigmaPositivity,
    })
}

pub fn gamma_k_by_lemma(m: &SymmetricMatrix, k: usize) -> Result<ConeVerdict> {
    check_k(m, k)?;
    let sigmas = sigma_all_via_charpoly(m);
    let negative_count = eigenvalues_symmetric(m)?.count_below(negative_threshold(m));
    let in_cone = negative_count <= 1 && sigma_positive(m, &sigmas, k);
    Ok(ConeVerdict {
        in_cone,
        sigmas,
        negative_count,
        method: ConeMethod::Lemma,
    })
}

/// Result of [`deformation_monotonicity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deformation {
    /// `s ↦ e_k(λ_1 + s, λ_2, …)` is nondecreasing on the grid and the
    /// closed-form slope is nonnegative.
    pub nondecreasing: bool,
    /// `∂e_k/∂λ_1 = e_{k−1}(λ_2, …, λ_n)`.
    pub slope: f64,
}

/// Checks that raising the (only possibly negative) first eigenvalue never
/// decreases `e_k`, both on `s_grid` and through the closed-form slope.
pub fn deformation_monotonicity_check(
    lambdas: &[f64],
    k: usize,
    s_grid: &[f64],
) -> Result<Deformation> {
    let n = lambdas.len();
    if n == 0 || k > n {
        return domain(format!(
            "k = {k} must lie in 0..={n} with at least one value"
        ));
    }
    if let Some(bad) = lambdas[1..].iter().find(|&&l| !(l >= 0.0)) {
        return domain(format!("only the first value may be negative, found {bad}"));
    }
    if let Some(bad) = s_grid.iter().find(|&&s| !(s >= 0.0 && s.is_finite())) {
        return domain(format!(
            "deformation parameters must be finite and nonnegative, found {bad}"
        ));
    }

    let rest = &lambdas[1..];
    let slope = if k == 0 {
        0.0
    } else {
        elementary_symmetric(rest, k - 1)?
    };

    let mut grid = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut shifted = lambdas.to_vec();
    let mut values = Vec::with_capacity(grid.len());
    for &s in &grid {
        shifted[0] = lambdas[0] + s;
        values.push(elementary_symmetric(&shifted, k)?);
    }
    let grid_ok = values.windows(2).all(|w| {
        let scale = 1.0 + w[0].abs().max(w[1].abs());
        w[1] >= w[0] - 1e-12 * scale
    });

    Ok(Deformation {
        nondecreasing: grid_ok && slope >= 0.0,
        slope,
    })
}
