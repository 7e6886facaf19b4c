//! Checkers for the multinomial property, the Markov property and the mixed Poisson
//! property, the regularity conditions that tie them together, and the composite verdict.

mod identities;
mod markov;
mod mpp;
mod multinomial;
mod regularity;
mod verdict;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use identities::{integral_identities_check, IdentityRecord, IdentityReport};
pub use markov::markov_test;
pub use mpp::{mpp_check, MppRecord, MppReport};
pub use multinomial::{compositions, multinomial_pmf, multinomial_rhs, multinomial_test};
pub use regularity::{default_t_grid, regularity_check, RegularityRecord, RegularityReport};
pub use verdict::{theorem_verdict, MppOutcome, VerdictConfig, VerdictOutcome, VerdictReport};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Cell-size rules shared by the statistical testers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    /// Minimum paths with `N_{t_m} = n` for the multinomial test to use that `n`.
    pub min_cell_multinomial: usize,
    /// Minimum paths sharing a history for the Markov test to use it.
    pub min_cell_markov: usize,
    /// Chi-square cells with smaller expected counts are pooled.
    pub min_expected: f64,
}

impl Default for TesterConfig {
    fn default() -> Self {
        Self {
            min_cell_multinomial: 50,
            min_cell_markov: 100,
            min_expected: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    pub fn from_p(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::Reject
        } else {
            Decision::FailToReject
        }
    }

    pub fn rejected(self) -> bool {
        self == Decision::Reject
    }
}

/// A named estimate, optionally with its standard error and a reference value it was compared to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Outcome of a statistical test, with enough metadata to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub inputs: serde_json::Value,
    pub estimates: Vec<Estimate>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub sample_sizes: BTreeMap<String, usize>,
    pub seed: u64,
    pub notes: Vec<String>,
    pub anomalies: Vec<String>,
}

impl TestReport {
    pub fn rejected(&self) -> bool {
        self.decision.rejected()
    }
}
