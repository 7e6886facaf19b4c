use serde::{Deserialize, Serialize};

use crate::disintegration::MrpModel;
use crate::error::{MrpError, Result};
use crate::process::validate_times;

/// Number of mixing quantiles examined.
const THETA_GRID: usize = 99;

/// Distance of the kernel at one parameter from the exponential law with the same hazard at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppRecord {
    pub quantile: f64,
    pub theta: f64,
    pub lambda: f64,
    pub hazard: f64,
    /// `max_t |G_λ(t) - exp(-p t)|` over the time grid.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppReport {
    pub model: String,
    pub tol: f64,
    pub t_grid_points: usize,
    pub t_max: f64,
    pub records: Vec<MppRecord>,
    pub max_distance: f64,
    pub is_mpp: bool,
    /// The mixed Poisson rate variable `p(h(Θ))` when the process is mixed Poisson.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_variable: Option<String>,
}

/// Decides whether every conditional renewal law is exponential.
///
/// At each of 99 mixing quantiles the survival function `G_λ`, `λ = h(θ)`, is compared on
/// `t_grid` with `exp(-p(λ) t)` where `p` is the hazard at zero. The process is declared
/// mixed Poisson iff the largest distance is at most `tol`.
pub fn mpp_check(model: &MrpModel, t_grid: &[f64], tol: f64) -> Result<MppReport> {
    validate_times(t_grid)?;
    if !(tol >= 0.0) {
        return Err(MrpError::InvalidInput(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let kernel = model.kernel();
    let thetas = model.mixing().quantile_grid(THETA_GRID);
    let levels: Vec<f64> = if thetas.len() == 1 {
        vec![0.5]
    } else {
        (1..=THETA_GRID)
            .map(|i| i as f64 / (THETA_GRID + 1) as f64)
            .collect()
    };
    let mut records = Vec::with_capacity(thetas.len());
    for (&theta, &quantile) in thetas.iter().zip(&levels) {
        let lambda = model.rate_for(theta)?;
        let hazard = kernel.hazard_at_zero(lambda).map_err(|e| match e {
            MrpError::RegularityViolation(_) => e,
            other => MrpError::RegularityViolation(format!("hazard at θ={theta}: {other}")),
        })?;
        let distance = t_grid
            .iter()
            .map(|&t| (kernel.survival_raw(lambda, t) - (-hazard * t).exp()).abs())
            .fold(0.0, f64::max);
        records.push(MppRecord {
            quantile,
            theta,
            lambda,
            hazard,
            distance,
        });
    }
    let max_distance = records.iter().map(|r| r.distance).fold(0.0, f64::max);
    let is_mpp = max_distance <= tol;
    Ok(MppReport {
        model: model.describe(),
        tol,
        t_grid_points: t_grid.len(),
        t_max: *t_grid.last().expect("validated"),
        records,
        max_distance,
        is_mpp,
        rate_variable: is_mpp.then(|| kernel.describe_hazard(&model.map().describe("Θ"))),
    })
}
