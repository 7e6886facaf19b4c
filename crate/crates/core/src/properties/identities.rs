use serde::{Deserialize, Serialize};

use crate::disintegration::MrpModel;
use crate::error::{MrpError, Result};

/// Residuals of the integral identities at one `(t, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub t: f64,
    pub v: f64,
    /// `E[-G(t+v) p] / E[G(v) G'(t)] - 1`
    pub d_joint: f64,
    /// `E[-G(t) p] / E[G'(t)] - 1`
    pub d_single: f64,
    /// `E[G(t+v) p²] - E[-G(v) G'(t) p]`
    pub e: f64,
    /// `E[G(t) G(v) p²] - E[-G(v) G'(t) p]`
    pub f: f64,
    /// `E[(G'(t) + p G(t))²]`
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub model: String,
    pub quad_tol: f64,
    pub records: Vec<IdentityRecord>,
    pub max_d: f64,
    pub max_e: f64,
    pub max_f: f64,
    pub max_g: f64,
}

/// Evaluates the four identities linking survival, density and hazard at zero, each as an
/// expectation over the mixing law computed by adaptive quadrature with absolute tolerance
/// `quad_tol`. They all hold when every conditional kernel is exponential.
pub fn integral_identities_check(
    model: &MrpModel,
    grid: &[(f64, f64)],
    quad_tol: f64,
) -> Result<IdentityReport> {
    if grid.is_empty() {
        return Err(MrpError::InvalidInput("identity grid is empty".into()));
    }
    if !(quad_tol > 0.0) {
        return Err(MrpError::InvalidInput(format!(
            "quadrature tolerance must be positive, got {quad_tol}"
        )));
    }
    let kernel = model.kernel();
    if !kernel.has_density() {
        return Err(MrpError::RegularityViolation(format!(
            "the {} kernel has no density",
            kernel.name()
        )));
    }
    let map = model.map();
    let mixing = model.mixing();
    let hazard = |lambda: f64| kernel.hazard_at_zero(lambda).unwrap_or(f64::NAN);
    let surv = |lambda: f64, s: f64| kernel.survival_raw(lambda, s);
    let dsurv = |lambda: f64, s: f64| -kernel.pdf_raw(lambda, s);
    let expect = |integrand: &dyn Fn(f64) -> f64| -> Result<f64> {
        let value = mixing.expectation(|theta| integrand(map.eval(theta)), quad_tol)?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(MrpError::Numeric(format!(
                "identity integrand is not integrable ({value})"
            )))
        }
    };

    let mut records = Vec::with_capacity(grid.len());
    for &(t, v) in grid {
        if !(t > 0.0 && v > 0.0) || !t.is_finite() || !v.is_finite() {
            return Err(MrpError::InvalidInput(format!(
                "identity grid needs 0 < t, v, got ({t}, {v})"
            )));
        }
        let num_joint = expect(&|l| -surv(l, t + v) * hazard(l))?;
        let den_joint = expect(&|l| surv(l, v) * dsurv(l, t))?;
        let num_single = expect(&|l| -surv(l, t) * hazard(l))?;
        let den_single = expect(&|l| dsurv(l, t))?;
        let e = expect(&|l| {
            let p = hazard(l);
            surv(l, t + v) * p * p + surv(l, v) * dsurv(l, t) * p
        })?;
        let f = expect(&|l| {
            let p = hazard(l);
            surv(l, t) * surv(l, v) * p * p + surv(l, v) * dsurv(l, t) * p
        })?;
        let g = expect(&|l| (dsurv(l, t) + hazard(l) * surv(l, t)).powi(2))?;
        if g < -quad_tol {
            return Err(MrpError::Numeric(format!(
                "integral of a square came out negative ({g}) at t={t}, beyond tolerance {quad_tol}"
            )));
        }
        records.push(IdentityRecord {
            t,
            v,
            d_joint: num_joint / den_joint - 1.0,
            d_single: num_single / den_single - 1.0,
            e,
            f,
            g,
        });
    }
    let max_abs =
        |sel: fn(&IdentityRecord) -> f64| records.iter().map(|r| sel(r).abs()).fold(0.0, f64::max);
    Ok(IdentityReport {
        model: model.describe(),
        quad_tol,
        max_d: max_abs(|r| r.d_joint.abs().max(r.d_single.abs())),
        max_e: max_abs(|r| r.e),
        max_f: max_abs(|r| r.f),
        max_g: max_abs(|r| r.g),
        records,
    })
}
