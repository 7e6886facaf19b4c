use std::collections::BTreeMap;

use serde_json::json;

use super::multinomial::validate_alpha;
use super::{Decision, Estimate, TestReport, TesterConfig};
use crate::disintegration::PathEnsemble;
use crate::error::{MrpError, Result};
use crate::process::validate_times;
use crate::stats;

type History = Vec<usize>;

/// Tests the Markov property of the counting process on `times = (t_1, ..., t_{m+1})`, `m >= 2`.
///
/// Paths are grouped by `n_m = N_{t_m}`. Within a group, every history
/// `(N_{t_1}, ..., N_{t_{m-1}})` seen in at least `min_cell_markov` paths is a row of a
/// contingency table whose columns are values of the future increment
/// `N_{t_{m+1}} - N_{t_m}`. Under the Markov property the future is independent of the
/// history given `n_m`, so each table is tested for independence and the per-group
/// p-values are combined by Fisher's method. Groups with fewer than two eligible histories
/// carry no information about the property and are skipped.
pub fn markov_test(
    ensemble: &PathEnsemble,
    times: &[f64],
    alpha: f64,
    config: &TesterConfig,
) -> Result<TestReport> {
    validate_times(times)?;
    validate_alpha(alpha)?;
    if times.len() < 3 {
        return Err(MrpError::InvalidInput(format!(
            "the Markov test needs at least three times, got {}",
            times.len()
        )));
    }
    let end = *times.last().expect("validated");
    if end > ensemble.horizon() {
        return Err(MrpError::OutOfHorizon {
            query: end,
            horizon: ensemble.horizon(),
        });
    }
    let m = times.len() - 1;

    let mut groups: BTreeMap<usize, BTreeMap<History, BTreeMap<usize, u64>>> = BTreeMap::new();
    for path in ensemble.paths() {
        let counts: Vec<usize> = times
            .iter()
            .map(|&t| path.count_at(t))
            .collect::<Result<_>>()?;
        let n_m = counts[m - 1];
        let future = counts[m] - n_m;
        let history = counts[..m - 1].to_vec();
        *groups
            .entry(n_m)
            .or_default()
            .entry(history)
            .or_default()
            .entry(future)
            .or_insert(0) += 1;
    }

    let mut p_values = Vec::new();
    let mut estimates = Vec::new();
    let mut notes = Vec::new();
    let mut sample_sizes = BTreeMap::new();
    sample_sizes.insert("paths".to_string(), ensemble.len());
    let mut eligible_histories = 0usize;
    for (&n_m, histories) in &groups {
        let rows: Vec<(&History, &BTreeMap<usize, u64>)> = histories
            .iter()
            .filter(|(_, f)| f.values().sum::<u64>() as usize >= config.min_cell_markov)
            .collect();
        if rows.is_empty() {
            continue;
        }
        eligible_histories += rows.len();
        let group_total: u64 = histories.values().flat_map(|f| f.values()).sum();
        let group_future: f64 = histories
            .values()
            .flat_map(|f| f.iter())
            .map(|(&k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / group_total as f64;
        for (history, futures) in &rows {
            let total: u64 = futures.values().sum();
            sample_sizes.insert(format!("N_tm={n_m},history={history:?}"), total as usize);
            let mean: f64 = futures
                .iter()
                .map(|(&k, &c)| k as f64 * c as f64)
                .sum::<f64>()
                / total as f64;
            let var: f64 = futures
                .iter()
                .map(|(&k, &c)| (k as f64 - mean).powi(2) * c as f64)
                .sum::<f64>()
                / total as f64;
            estimates.push(Estimate {
                name: format!("E[future increment | N_tm={n_m}, history={history:?}]"),
                value: mean,
                se: Some((var / total as f64).sqrt()),
                reference: Some(group_future),
                z: None,
            });
        }
        if rows.len() < 2 {
            notes.push(format!("N_tm={n_m}: a single eligible history, no test"));
            continue;
        }
        let width = rows
            .iter()
            .flat_map(|(_, f)| f.keys())
            .max()
            .map_or(0, |&k| k + 1);
        let table: Vec<Vec<u64>> = rows
            .iter()
            .map(|(_, f)| {
                (0..width)
                    .map(|k| f.get(&k).copied().unwrap_or(0))
                    .collect()
            })
            .collect();
        let chi = stats::chi_square_independence(&table, config.min_expected);
        if chi.dof == 0 {
            notes.push(format!(
                "N_tm={n_m}: future increment is constant after pooling, no test"
            ));
            continue;
        }
        estimates.push(Estimate {
            name: format!("chi_square[N_tm={n_m}]"),
            value: chi.statistic,
            se: None,
            reference: Some(chi.dof as f64),
            z: None,
        });
        p_values.push(chi.p_value);
    }
    if eligible_histories == 0 {
        return Err(MrpError::InsufficientData(format!(
            "no history is observed in at least {} of {} paths",
            config.min_cell_markov,
            ensemble.len()
        )));
    }
    if p_values.is_empty() {
        notes.push("no testable group; the property is not contradicted".into());
    }
    let statistic = stats::fisher_statistic(&p_values);
    let p_value = stats::fisher_combine(&p_values);
    Ok(TestReport {
        test: "markov".into(),
        inputs: json!({
            "times": times,
            "model": ensemble.model().describe(),
            "n_paths": ensemble.len(),
            "horizon": ensemble.horizon(),
            "min_cell": config.min_cell_markov,
            "min_expected": config.min_expected,
        }),
        estimates,
        statistic,
        dof: 2 * p_values.len(),
        p_value,
        alpha,
        decision: Decision::from_p(p_value, alpha),
        sample_sizes,
        seed: ensemble.seed(),
        notes,
        anomalies: Vec::new(),
    })
}
