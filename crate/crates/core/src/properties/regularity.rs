use serde::{Deserialize, Serialize};

use crate::disintegration::MrpModel;
use crate::error::{MrpError, Result};
use crate::process::validate_times;
use crate::rng::{domain, substream};

/// Largest admissible `|Δf| / (max f · Δt)` between adjacent grid points.
pub const MAX_RELATIVE_SLOPE: f64 = 1e3;

/// Mixing draws for the Monte Carlo estimate of `E[C(Θ)]`.
const BOUND_DRAWS: usize = 100_000;

/// Relative change allowed between the half-sample and full-sample means of `C(Θ)`.
const BOUND_STABILITY: f64 = 0.1;

/// Slack on `f <= C` for rounding.
const BOUND_SLACK: f64 = 1e-12;

/// `n` equally spaced points on `(0, t_max]`.
pub fn default_t_grid(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// Checks at one grid parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityRecord {
    pub theta: f64,
    pub lambda: Option<f64>,
    pub has_density: bool,
    pub density_positive: bool,
    /// Analytic dominating bound `C(θ)`.
    pub density_bound: Option<f64>,
    pub bounded: bool,
    pub max_relative_slope: Option<f64>,
    pub smooth: bool,
    /// Hazard at zero `p(θ)`.
    pub hazard: Option<f64>,
    pub passes: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub model: String,
    pub records: Vec<RegularityRecord>,
    pub hazard_positive: bool,
    /// Strict monotonicity of `θ -> p(θ)` over the grid, the injectivity proxy.
    pub hazard_monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hazard_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_mean: Option<f64>,
    pub bound_mean_stable: bool,
    pub passes: bool,
    pub notes: Vec<String>,
}

fn check_theta(model: &MrpModel, theta: f64, t_grid: &[f64]) -> RegularityRecord {
    let kernel = model.kernel();
    let mut rec = RegularityRecord {
        theta,
        lambda: None,
        has_density: kernel.has_density(),
        density_positive: false,
        density_bound: None,
        bounded: false,
        max_relative_slope: None,
        smooth: false,
        hazard: None,
        passes: false,
        note: None,
    };
    let lambda = match model.rate_for(theta) {
        Ok(l) => l,
        Err(e) => {
            rec.note = Some(e.to_string());
            return rec;
        }
    };
    rec.lambda = Some(lambda);
    if !kernel.has_density() {
        rec.note = Some(format!("the {} kernel has no density", kernel.name()));
        return rec;
    }
    let f: Vec<f64> = t_grid.iter().map(|&t| kernel.pdf_raw(lambda, t)).collect();
    rec.density_positive = f.iter().all(|&v| v > 0.0 && v.is_finite());
    rec.density_bound = kernel.density_bound(lambda).ok();
    rec.bounded = rec
        .density_bound
        .is_some_and(|c| f.iter().all(|&v| v <= c * (1.0 + BOUND_SLACK)));
    let slope = f
        .windows(2)
        .zip(t_grid.windows(2))
        .map(|(fv, tv)| (fv[1] - fv[0]).abs() / (fv[0].max(fv[1]) * (tv[1] - tv[0])))
        .fold(0.0, f64::max);
    rec.max_relative_slope = Some(slope);
    rec.smooth = slope.is_finite() && slope <= MAX_RELATIVE_SLOPE;
    rec.hazard = kernel.hazard_at_zero(lambda).ok();
    rec.passes =
        rec.density_positive && rec.bounded && rec.smooth && rec.hazard.is_some_and(|p| p > 0.0);
    rec
}

/// Checks the smoothness/domination condition and the injectivity of the hazard at zero.
///
/// Failures are reported, never raised; only malformed grids are errors.
pub fn regularity_check(
    model: &MrpModel,
    theta_grid: &[f64],
    t_grid: &[f64],
) -> Result<RegularityReport> {
    if theta_grid.is_empty() {
        return Err(MrpError::InvalidInput("θ grid is empty".into()));
    }
    validate_times(t_grid)?;
    let mut thetas = theta_grid.to_vec();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let records: Vec<RegularityRecord> = thetas
        .iter()
        .map(|&th| check_theta(model, th, t_grid))
        .collect();
    let mut notes = Vec::new();

    let hazards: Option<Vec<f64>> = records.iter().map(|r| r.hazard).collect();
    let (hazard_positive, hazard_monotone, hazard_range) = match &hazards {
        Some(p) => {
            let inc = p.windows(2).all(|w| w[0] < w[1]);
            let dec = p.windows(2).all(|w| w[0] > w[1]);
            let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (p.iter().all(|&v| v > 0.0), inc || dec, Some((lo, hi)))
        }
        None => {
            notes.push("hazard at zero is undefined on part of the grid".into());
            (false, false, None)
        }
    };

    let kernel = model.kernel();
    let (bound_mean, bound_mean_stable) = if kernel.has_density() {
        let mut rng = substream(0, domain::REGULARITY, 0);
        let mut sum = 0.0;
        let mut half = f64::NAN;
        let mut failed = None;
        for i in 0..BOUND_DRAWS {
            let theta = model.mixing().sample(&mut rng);
            match model.rate_for(theta).and_then(|l| kernel.density_bound(l)) {
                Ok(c) => sum += c,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
            if i + 1 == BOUND_DRAWS / 2 {
                half = sum / (BOUND_DRAWS / 2) as f64;
            }
        }
        match failed {
            Some(e) => {
                notes.push(format!("E[C(Θ)] could not be estimated: {e}"));
                (None, false)
            }
            None => {
                let full = sum / BOUND_DRAWS as f64;
                let stable =
                    full.is_finite() && (half - full).abs() <= BOUND_STABILITY * full.abs();
                if !stable {
                    notes.push(format!("E[C(Θ)] estimate does not stabilize ({half} after half the draws, {full} after all)"));
                }
                (Some(full), stable)
            }
        }
    } else {
        notes.push(format!(
            "the {} kernel has no density, so the smoothness condition fails",
            kernel.name()
        ));
        (None, false)
    };

    let failing = records.iter().filter(|r| !r.passes).count();
    if failing > 0 {
        notes.push(format!(
            "{failing} of {} grid parameters fail the pointwise checks",
            records.len()
        ));
    }
    if hazards.is_some() && !hazard_monotone {
        notes.push("hazard at zero is not strictly monotone in θ".into());
    }
    let passes = failing == 0 && hazard_positive && hazard_monotone && bound_mean_stable;
    Ok(RegularityReport {
        model: model.describe(),
        records,
        hazard_positive,
        hazard_monotone,
        hazard_range,
        bound_mean,
        bound_mean_stable,
        passes,
        notes,
    })
}
