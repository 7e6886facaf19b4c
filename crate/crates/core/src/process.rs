//! Counting-process paths.
//!
//! A path stores the arrival times `T_1 < T_2 < ...` that fall in `[0, horizon]`;
//! `T_0 = 0` is implicit. Interarrival times are the successive differences and
//! the count `N_t` is the number of arrivals at or before `t`. Any query beyond the
//! horizon is an error because the path carries no information there.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{MrpError, Result};

/// One realization of a counting process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalPath {
    theta: Vec<f64>,
    arrivals: Vec<f64>,
    horizon: f64,
}

/// Partial sums of `interarrivals` truncated at `horizon`.
///
/// The list must carry the path past the horizon: its total has to reach `horizon`.
/// A total equal to the horizon is enough, since the next arrival is strictly later.
pub fn build_path(theta: Vec<f64>, interarrivals: &[f64], horizon: f64) -> Result<ArrivalPath> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(MrpError::InvalidInput(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let mut arrivals = Vec::new();
    let mut total = 0.0_f64;
    for &w in interarrivals {
        if !(w > 0.0) || !w.is_finite() {
            return Err(MrpError::InvalidInput(format!(
                "interarrival times must be positive and finite, got {w}"
            )));
        }
        let next = total + w;
        if next <= total {
            return Err(MrpError::InvalidInput(format!(
                "interarrival {w} is below the resolution of the arrival time {total}"
            )));
        }
        total = next;
        if total > horizon {
            return Ok(ArrivalPath {
                theta,
                arrivals,
                horizon,
            });
        }
        arrivals.push(total);
    }
    if total >= horizon {
        Ok(ArrivalPath {
            theta,
            arrivals,
            horizon,
        })
    } else {
        Err(MrpError::IncompletePath {
            reached: total,
            horizon,
        })
    }
}

impl ArrivalPath {
    /// Builds a path from arrival times directly, validating the invariants.
    pub fn from_arrivals(theta: Vec<f64>, arrivals: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(MrpError::InvalidInput(format!(
                "horizon must be finite and nonnegative, got {horizon}"
            )));
        }
        let mut prev = 0.0;
        for &a in &arrivals {
            if !(a > prev) {
                return Err(MrpError::InvalidInput(format!(
                    "arrival times must be strictly increasing and positive ({a} after {prev})"
                )));
            }
            if a > horizon {
                return Err(MrpError::InvalidInput(format!(
                    "arrival {a} exceeds horizon {horizon}"
                )));
            }
            prev = a;
        }
        Ok(Self {
            theta,
            arrivals,
            horizon,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Interarrival times of the stored arrivals.
    pub fn interarrivals(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.arrivals
            .iter()
            .map(|&a| {
                let w = a - prev;
                prev = a;
                w
            })
            .collect()
    }

    /// `N_t`, the number of arrivals in `[0, t]`.
    pub fn count_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t > self.horizon {
            return Err(MrpError::OutOfHorizon {
                query: t,
                horizon: self.horizon,
            });
        }
        Ok(self.arrivals.partition_point(|&a| a <= t))
    }

    /// `T_n` for `n >= 1`.
    pub fn arrival_of(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(MrpError::InvalidInput("arrival index starts at 1".into()));
        }
        self.arrivals
            .get(n - 1)
            .copied()
            .ok_or(MrpError::OutOfHorizon {
                query: n as f64,
                horizon: self.horizon,
            })
    }

    /// Increment counts `N_{t_j} - N_{t_{j-1}}` over the query partition.
    pub fn increments(&self, query: &PartitionQuery) -> Result<Vec<usize>> {
        self.increments_at(query.times())
    }

    pub(crate) fn increments_at(&self, times: &[f64]) -> Result<Vec<usize>> {
        let mut prev = 0;
        times
            .iter()
            .map(|&t| {
                let c = self.count_at(t)?;
                let inc = c - prev;
                prev = c;
                Ok(inc)
            })
            .collect()
    }

    /// Line-oriented text form: a `theta=... horizon=...` header, then one arrival per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let theta: Vec<String> = self.theta.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "theta={} horizon={}", theta.join(","), self.horizon);
        for a in &self.arrivals {
            let _ = writeln!(out, "{a:.16e}");
        }
        out
    }

    /// Parses the output of [`ArrivalPath::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut paths = parse_paths(text)?;
        match paths.len() {
            1 => Ok(paths.remove(0)),
            n => Err(MrpError::Parse(format!(
                "expected exactly one path, found {n}"
            ))),
        }
    }
}

fn parse_header(line: &str) -> Result<(Vec<f64>, f64)> {
    let mut theta = None;
    let mut horizon = None;
    for field in line.split_whitespace() {
        if let Some(v) = field.strip_prefix("theta=") {
            let parsed: std::result::Result<Vec<f64>, _> = v
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect();
            theta = Some(parsed.map_err(|e| MrpError::Parse(format!("bad theta {v:?}: {e}")))?);
        } else if let Some(v) = field.strip_prefix("horizon=") {
            horizon = Some(
                v.parse()
                    .map_err(|e| MrpError::Parse(format!("bad horizon {v:?}: {e}")))?,
            );
        } else {
            return Err(MrpError::Parse(format!(
                "unexpected header field {field:?}"
            )));
        }
    }
    match (theta, horizon) {
        (Some(t), Some(h)) => Ok((t, h)),
        _ => Err(MrpError::Parse(format!("incomplete path header {line:?}"))),
    }
}

/// Parses a concatenation of path text blocks.
pub fn parse_paths(text: &str) -> Result<Vec<ArrivalPath>> {
    let mut paths = Vec::new();
    let mut current: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line.starts_with("theta=") {
            if let Some((theta, horizon, arrivals)) = current.take() {
                paths.push(ArrivalPath::from_arrivals(theta, arrivals, horizon)?);
            }
            let (theta, horizon) = parse_header(line)?;
            current = Some((theta, horizon, Vec::new()));
        } else {
            let (_, _, arrivals) = current
                .as_mut()
                .ok_or_else(|| MrpError::Parse("arrival line before any path header".into()))?;
            arrivals.push(
                line.parse()
                    .map_err(|e| MrpError::Parse(format!("bad arrival {line:?}: {e}")))?,
            );
        }
    }
    if let Some((theta, horizon, arrivals)) = current {
        paths.push(ArrivalPath::from_arrivals(theta, arrivals, horizon)?);
    }
    Ok(paths)
}

/// A partition `0 = t_0 < t_1 < ... < t_m` together with increment counts `κ_1..κ_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionQuery {
    times: Vec<f64>,
    counts: Vec<usize>,
}

impl PartitionQuery {
    pub fn new(times: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        validate_times(&times)?;
        if counts.len() != times.len() {
            return Err(MrpError::InvalidInput(format!(
                "{} times but {} counts",
                times.len(),
                counts.len()
            )));
        }
        Ok(Self { times, counts })
    }

    /// A query over `times` with all counts zero; useful when only the grid matters.
    pub fn grid(times: Vec<f64>) -> Result<Self> {
        let counts = vec![0; times.len()];
        Self::new(times, counts)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `n = Σ κ_j`.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Partition endpoint `t_m`.
    pub fn end(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }
}

/// Checks `0 < t_1 < ... < t_m`, `m >= 1`.
pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(MrpError::InvalidInput(
            "a partition needs at least one time point".into(),
        ));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t > prev) || !t.is_finite() {
            return Err(MrpError::InvalidInput(format!(
                "partition times must be positive and strictly increasing ({t} after {prev})"
            )));
        }
        prev = t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(arrivals: &[f64], horizon: f64) -> ArrivalPath {
        ArrivalPath::from_arrivals(vec![1.0], arrivals.to_vec(), horizon).unwrap()
    }

    #[test]
    fn build_path_truncates_at_horizon() {
        let p = build_path(vec![1.0], &[0.5, 0.7, 2.0], 2.0).unwrap();
        assert_eq!(p.arrivals(), &[0.5, 1.2]);
    }

    #[test]
    fn build_path_empty() {
        let p = build_path(vec![1.0], &[], 0.0).unwrap();
        assert!(p.arrivals().is_empty());
    }

    #[test]
    fn build_path_deterministic_unit() {
        let p = build_path(vec![1.0], &[1.0, 1.0, 1.0], 3.0).unwrap();
        assert_eq!(p.arrivals(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn build_path_errors() {
        assert!(matches!(
            build_path(vec![], &[0.5, 0.0], 3.0),
            Err(MrpError::InvalidInput(_))
        ));
        assert!(matches!(
            build_path(vec![], &[0.5, -1.0], 3.0),
            Err(MrpError::InvalidInput(_))
        ));
        assert!(matches!(
            build_path(vec![], &[0.5, 0.5], 3.0),
            Err(MrpError::IncompletePath { .. })
        ));
    }

    #[test]
    fn count_at_examples() {
        let empty = path(&[], 10.0);
        assert_eq!(empty.count_at(0.0).unwrap(), 0);
        let p = path(&[0.5, 1.2, 3.0], 4.0);
        assert_eq!(p.count_at(1.2).unwrap(), 2);
        assert_eq!(p.count_at(0.49).unwrap(), 0);
        assert_eq!(p.count_at(0.0).unwrap(), 0);
        assert!(matches!(
            p.count_at(4.5),
            Err(MrpError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn arrival_of_examples() {
        assert_eq!(path(&[0.5, 1.2], 2.0).arrival_of(2).unwrap(), 1.2);
        assert_eq!(path(&[1.0, 2.0, 3.0], 3.0).arrival_of(1).unwrap(), 1.0);
        assert!(matches!(
            path(&[0.5], 1.0).arrival_of(2),
            Err(MrpError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn increments_examples() {
        let p = path(&[0.5, 1.2, 3.0], 4.0);
        let q = PartitionQuery::grid(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(p.increments(&q).unwrap(), vec![1, 1, 1]);
        let e = path(&[], 2.0);
        let q = PartitionQuery::grid(vec![1.0, 2.0]).unwrap();
        assert_eq!(e.increments(&q).unwrap(), vec![0, 0]);
    }

    #[test]
    fn partition_validation() {
        assert!(PartitionQuery::grid(vec![]).is_err());
        assert!(PartitionQuery::grid(vec![1.0, 1.0]).is_err());
        assert!(PartitionQuery::grid(vec![0.0, 1.0]).is_err());
        assert!(PartitionQuery::new(vec![1.0], vec![1, 2]).is_err());
        assert_eq!(
            PartitionQuery::new(vec![1.0, 2.0], vec![2, 3])
                .unwrap()
                .total(),
            5
        );
    }

    #[test]
    fn text_round_trip_keeps_full_precision() {
        let p = ArrivalPath::from_arrivals(vec![0.1, 2.5], vec![0.1 + 0.2, 1.0 / 3.0 + 1.0], 4.0)
            .unwrap();
        let text = p.to_text();
        assert!(text.starts_with("theta=0.1,2.5 horizon=4\n"));
        assert_eq!(ArrivalPath::from_text(&text).unwrap(), p);
    }
}
