use std::collections::BTreeMap;

use serde_json::json;

use super::{Decision, Estimate, TestReport, TesterConfig};
use crate::disintegration::PathEnsemble;
use crate::error::{MrpError, Result};
use crate::process::{validate_times, PartitionQuery};
use crate::stats::{self, ln_factorial};

/// Upper bound on enumerated compositions per total count.
const MAX_COMPOSITIONS: usize = 200_000;

/// All `(κ_1, ..., κ_m)` of nonnegative integers summing to `n`, in lexicographic order.
pub fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            rec(remaining - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(n, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

fn composition_count(n: usize, m: usize) -> f64 {
    // C(n+m-1, m-1)
    (ln_factorial(n + m - 1) - ln_factorial(m - 1) - ln_factorial(n)).exp()
}

/// Multinomial coefficient `n! / ∏ κ_j!`.
fn multinomial_coefficient(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n <= 150 {
        // product of binomials, exact for moderate n
        let mut coef = 1.0;
        let mut seen = 0usize;
        for &k in counts {
            for i in 1..=k {
                coef *= (seen + i) as f64 / i as f64;
            }
            seen += k;
        }
        coef
    } else {
        (ln_factorial(n) - counts.iter().map(|&k| ln_factorial(k)).sum::<f64>()).exp()
    }
}

/// `P(κ; n, probs)` for the multinomial law.
pub fn multinomial_pmf(counts: &[usize], probs: &[f64]) -> f64 {
    let coef = multinomial_coefficient(counts);
    counts
        .iter()
        .zip(probs)
        .map(|(&k, &p)| p.powi(k as i32))
        .product::<f64>()
        * coef
}

fn cell_probabilities(times: &[f64]) -> Vec<f64> {
    let end = *times.last().expect("validated non-empty");
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let p = (t - prev) / end;
            prev = t;
            p
        })
        .collect()
}

/// Right-hand side of the multinomial identity:
/// `n!/∏κ_j! · ∏((t_j - t_{j-1})/t_m)^{κ_j} · P(N_{t_m} = n)`.
pub fn multinomial_rhs(query: &PartitionQuery, p_n_at_tm: f64) -> f64 {
    multinomial_pmf(query.counts(), &cell_probabilities(query.times())) * p_n_at_tm
}

/// Tests the multinomial property on the partition `times` (with `t_0 = 0`).
///
/// For every total `n = N_{t_m}` observed in at least `min_cell_multinomial` paths the
/// increment vectors are compared with the multinomial law `(n, (Δt_j / t_m)_j)` by a
/// pooled chi-square test; the per-`n` p-values are combined by Fisher's method. The
/// identity is also reported directly for every increment vector seen at least as often.
pub fn multinomial_test(
    ensemble: &PathEnsemble,
    times: &[f64],
    alpha: f64,
    config: &TesterConfig,
) -> Result<TestReport> {
    validate_times(times)?;
    validate_alpha(alpha)?;
    let end = *times.last().expect("validated");
    if end > ensemble.horizon() {
        return Err(MrpError::OutOfHorizon {
            query: end,
            horizon: ensemble.horizon(),
        });
    }
    let m = times.len();
    let probs = cell_probabilities(times);

    let mut by_total: BTreeMap<usize, BTreeMap<Vec<usize>, u64>> = BTreeMap::new();
    for path in ensemble.paths() {
        let inc = path.increments_at(times)?;
        let n: usize = inc.iter().sum();
        *by_total.entry(n).or_default().entry(inc).or_insert(0) += 1;
    }
    let n_paths = ensemble.len() as f64;

    let mut p_values = Vec::new();
    let mut estimates = Vec::new();
    let mut notes = Vec::new();
    let mut sample_sizes = BTreeMap::new();
    sample_sizes.insert("paths".to_string(), ensemble.len());
    let mut eligible = 0usize;
    for (&n, cells) in &by_total {
        let total: u64 = cells.values().sum();
        if (total as usize) < config.min_cell_multinomial {
            continue;
        }
        eligible += 1;
        sample_sizes.insert(format!("N_tm={n}"), total as usize);

        for (kappa, &count) in cells {
            if (count as usize) < config.min_cell_multinomial {
                continue;
            }
            let query = PartitionQuery::new(times.to_vec(), kappa.clone())?;
            let lhs = count as f64 / n_paths;
            let rhs = multinomial_rhs(&query, total as f64 / n_paths);
            estimates.push(Estimate {
                name: format!("P(increments={kappa:?})"),
                value: lhs,
                se: Some((lhs * (1.0 - lhs) / n_paths).sqrt()),
                reference: Some(rhs),
                z: Some(stats::two_proportion_z(
                    count as f64,
                    n_paths,
                    rhs * n_paths,
                    n_paths,
                )),
            });
        }

        if n == 0 || m == 1 {
            continue;
        }
        if composition_count(n, m) > MAX_COMPOSITIONS as f64 {
            notes.push(format!(
                "N_tm={n}: too many increment patterns to enumerate, skipped"
            ));
            continue;
        }
        let comps = compositions(n, m);
        let observed: Vec<u64> = comps
            .iter()
            .map(|c| cells.get(c).copied().unwrap_or(0))
            .collect();
        let expected: Vec<f64> = comps.iter().map(|c| multinomial_pmf(c, &probs)).collect();
        let chi = stats::chi_square_gof(&observed, &expected, config.min_expected);
        if chi.dof == 0 {
            notes.push(format!("N_tm={n}: a single pooled cell, no test"));
            continue;
        }
        estimates.push(Estimate {
            name: format!("chi_square[N_tm={n}]"),
            value: chi.statistic,
            se: None,
            reference: Some(chi.dof as f64),
            z: None,
        });
        p_values.push(chi.p_value);
    }
    if eligible == 0 {
        return Err(MrpError::InsufficientData(format!(
            "no value of N_{end} is observed in at least {} of {} paths",
            config.min_cell_multinomial,
            ensemble.len()
        )));
    }
    if p_values.is_empty() {
        notes.push("no testable cell; the property is not contradicted".into());
    }
    let statistic = stats::fisher_statistic(&p_values);
    let p_value = stats::fisher_combine(&p_values);
    Ok(TestReport {
        test: "multinomial".into(),
        inputs: json!({
            "times": times,
            "model": ensemble.model().describe(),
            "n_paths": ensemble.len(),
            "horizon": ensemble.horizon(),
            "min_cell": config.min_cell_multinomial,
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

pub(super) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(MrpError::InvalidInput(format!(
            "alpha must lie in (0,1), got {alpha}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let q = PartitionQuery::new(vec![2.5], vec![3]).unwrap();
        assert!((multinomial_rhs(&q, 0.2) - 0.2).abs() < 1e-15);
        let q = PartitionQuery::new(vec![1.0, 2.0], vec![1, 1]).unwrap();
        assert!((multinomial_rhs(&q, 0.5) - 0.25).abs() < 1e-15);
        let q = PartitionQuery::new(vec![1.0, 2.0, 4.0], vec![0, 1, 1]).unwrap();
        assert!((multinomial_rhs(&q, 0.4) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn compositions_enumerate_all() {
        let c = compositions(3, 2);
        assert_eq!(c, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
        for n in 0..8 {
            for m in 1..5 {
                let expected = composition_count(n, m).round() as usize;
                assert_eq!(compositions(n, m).len(), expected, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn large_coefficients_agree_with_logs() {
        let counts = [100, 60, 40];
        let direct = multinomial_coefficient(&counts);
        let via_logs =
            (ln_factorial(200) - ln_factorial(100) - ln_factorial(60) - ln_factorial(40)).exp();
        assert!(((direct - via_logs) / direct).abs() < 1e-10);
    }
}
