use serde::{Deserialize, Serialize};

use super::{
    default_t_grid, markov_test, mpp_check, multinomial_test, regularity_check, MppReport,
    RegularityReport, TestReport, TesterConfig, DEFAULT_ALPHA,
};
use crate::disintegration::{sample_ensemble, MrpModel};
use crate::error::{MrpError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictConfig {
    pub n_paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub alpha: f64,
    /// Tolerance on the distance to the exponential law in the mixed Poisson check.
    pub mpp_tol: f64,
    pub multinomial_times: Vec<f64>,
    pub markov_times: Vec<f64>,
    pub tester: TesterConfig,
    pub theta_grid_size: usize,
    pub t_grid_points: usize,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            n_paths: 200_000,
            horizon: 4.0,
            seed: 7,
            alpha: DEFAULT_ALPHA,
            mpp_tol: 1e-9,
            multinomial_times: vec![1.0, 2.0],
            markov_times: vec![1.0, 2.0, 3.0],
            tester: TesterConfig::default(),
            theta_grid_size: 99,
            t_grid_points: 400,
        }
    }
}

/// The mixed Poisson check either produces a report or fails for lack of a hazard at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppOutcome {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<MppReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    EquivalentAllPositive,
    EquivalentAllNegative,
    TheoremViolation,
    NotLicensed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub model: String,
    pub config: VerdictConfig,
    pub regularity: RegularityReport,
    pub mpp: MppOutcome,
    pub multinomial: TestReport,
    pub markov: TestReport,
    pub mpp_holds: bool,
    pub multinomial_holds: bool,
    pub markov_holds: bool,
    /// Whether the regularity conditions hold, so the three properties must agree.
    pub licensed: bool,
    pub outcome: VerdictOutcome,
    pub summary: String,
    pub anomalies: Vec<String>,
}

impl VerdictReport {
    pub fn has_anomaly(&self) -> bool {
        !self.anomalies.is_empty()
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Runs the regularity check, the mixed Poisson check and both statistical testers on one
/// fresh ensemble, and checks that the three properties agree when regularity holds.
pub fn theorem_verdict(model: &MrpModel, config: &VerdictConfig) -> Result<VerdictReport> {
    if config.theta_grid_size == 0 || config.t_grid_points < 2 {
        return Err(MrpError::InvalidInput("verdict grids are too small".into()));
    }
    let t_grid = default_t_grid(config.horizon, config.t_grid_points);
    let theta_grid = model.mixing().quantile_grid(config.theta_grid_size);
    let regularity = regularity_check(model, &theta_grid, &t_grid)?;

    let mpp = match mpp_check(model, &t_grid, config.mpp_tol) {
        Ok(report) => MppOutcome {
            holds: report.is_mpp,
            report: Some(report),
            error: None,
        },
        Err(e @ MrpError::RegularityViolation(_)) => MppOutcome {
            holds: false,
            report: None,
            error: Some(e.to_string()),
        },
        Err(e) => return Err(e),
    };

    let ensemble = sample_ensemble(model, config.n_paths, config.horizon, config.seed)?;
    let multinomial = multinomial_test(
        &ensemble,
        &config.multinomial_times,
        config.alpha,
        &config.tester,
    )?;
    let markov = markov_test(
        &ensemble,
        &config.markov_times,
        config.alpha,
        &config.tester,
    )?;

    let mpp_holds = mpp.holds;
    let multinomial_holds = !multinomial.rejected();
    let markov_holds = !markov.rejected();
    let licensed = regularity.passes;
    let flags = format!(
        "MPP={}, multinomial={}, Markov={}",
        yes_no(mpp_holds),
        yes_no(multinomial_holds),
        yes_no(markov_holds)
    );
    let mut anomalies = Vec::new();
    let (outcome, summary) = if !licensed {
        (
            VerdictOutcome::NotLicensed,
            format!(
                "regularity failed; Markov={}, MPP={} (equivalence not licensed; multinomial={})",
                yes_no(markov_holds),
                yes_no(mpp_holds),
                yes_no(multinomial_holds)
            ),
        )
    } else if mpp_holds && multinomial_holds && markov_holds {
        (
            VerdictOutcome::EquivalentAllPositive,
            "equivalent, all positive".to_string(),
        )
    } else if !mpp_holds && !multinomial_holds && !markov_holds {
        (
            VerdictOutcome::EquivalentAllNegative,
            "equivalent, all negative".to_string(),
        )
    } else {
        anomalies.push(format!(
            "theorem violation: regularity holds but the properties disagree ({flags}; multinomial p={}, Markov p={}, MPP distance={})",
            multinomial.p_value,
            markov.p_value,
            mpp.report.as_ref().map_or(f64::NAN, |r| r.max_distance),
        ));
        (
            VerdictOutcome::TheoremViolation,
            format!("theorem violation: {flags}"),
        )
    };

    Ok(VerdictReport {
        model: model.describe(),
        config: config.clone(),
        regularity,
        mpp,
        multinomial,
        markov,
        mpp_holds,
        multinomial_holds,
        markov_holds,
        licensed,
        outcome,
        summary,
        anomalies,
    })
}
