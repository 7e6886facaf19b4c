//! Mixed renewal models as disintegrated families.
//!
//! A model draws `Θ` from the mixing law and, conditionally on `Θ = θ`, runs a renewal
//! process with interarrival law `K(h(θ))`. The conditional law at `θ` is represented
//! operationally by the conditional simulator [`MrpModel::conditional_path`]; identities
//! about the family are checked as integrals of path events estimated by simulation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MrpError, Result};
use crate::kernels::{InterarrivalKernel, MixingLaw, ParameterMap};
use crate::process::{parse_paths, ArrivalPath};
use crate::rng::{domain, substream, Stream};
use crate::stats::{self, EmpiricalSample};

/// Number of sampled parameters used to validate a model's support.
const SUPPORT_CHECK_DRAWS: u64 = 1000;

/// An extended mixed renewal process: mixing law, parameter map `h` and kernel family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrpModel {
    mixing: MixingLaw,
    map: ParameterMap,
    kernel: InterarrivalKernel,
}

impl MrpModel {
    /// Assembles a model, checking on sampled support that `h(θ)` is a valid kernel parameter.
    pub fn new(mixing: MixingLaw, map: ParameterMap, kernel: InterarrivalKernel) -> Result<Self> {
        let model = Self {
            mixing,
            map,
            kernel,
        };
        let mut probe: Vec<f64> = model.mixing.quantile_grid(99);
        let mut rng = substream(0, domain::INJECTIVITY, u64::MAX);
        probe.extend((0..SUPPORT_CHECK_DRAWS).map(|_| model.mixing.sample(&mut rng)));
        for theta in probe {
            model.rate_for(theta)?;
        }
        Ok(model)
    }

    pub fn mixing(&self) -> &MixingLaw {
        &self.mixing
    }

    pub fn map(&self) -> &ParameterMap {
        &self.map
    }

    pub fn kernel(&self) -> InterarrivalKernel {
        self.kernel
    }

    /// Kernel parameter `λ = h(θ)`.
    pub fn rate_for(&self, theta: f64) -> Result<f64> {
        let lambda = self.map.apply(theta)?;
        self.kernel.check_parameter(lambda)?;
        Ok(lambda)
    }

    /// One path of the renewal process at fixed `θ` on `[0, horizon]`.
    pub fn conditional_path<R: Rng + ?Sized>(
        &self,
        theta: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Result<ArrivalPath> {
        let lambda = self.rate_for(theta)?;
        let mut arrivals = Vec::new();
        let mut t = 0.0_f64;
        loop {
            let next = t + self.kernel.sample(lambda, rng)?;
            if next <= t {
                return Err(MrpError::Numeric(format!(
                    "interarrival below float resolution at t={t} (θ={theta}, λ={lambda})"
                )));
            }
            if next > horizon {
                break;
            }
            arrivals.push(next);
            t = next;
        }
        ArrivalPath::from_arrivals(vec![theta], arrivals, horizon)
    }

    /// One joint draw: `θ` from the mixing law, then a conditional path.
    pub fn sample_path<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<ArrivalPath> {
        let theta = self.mixing.sample(rng);
        self.conditional_path(theta, horizon, rng)
    }

    /// `n` conditionally i.i.d. interarrival times at `θ`.
    pub fn conditional_interarrivals<R: Rng + ?Sized>(
        &self,
        theta: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let lambda = self.rate_for(theta)?;
        (0..n).map(|_| self.kernel.sample(lambda, rng)).collect()
    }

    /// Model in the `key=value` configuration grammar, `;`-separated.
    pub fn describe(&self) -> String {
        crate::config::describe_model(self)
    }
}

/// Simulated paths plus everything needed to regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    paths: Vec<ArrivalPath>,
    seed: u64,
    model: MrpModel,
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    model: MrpModel,
    model_config: String,
    seed: u64,
    n_paths: usize,
    horizon: f64,
}

impl PathEnsemble {
    pub fn paths(&self) -> &[ArrivalPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &MrpModel {
        &self.model
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// JSON header line followed by the text form of every path.
    pub fn to_text(&self) -> String {
        let header = EnsembleHeader {
            model: self.model.clone(),
            model_config: self.model.describe(),
            seed: self.seed,
            n_paths: self.paths.len(),
            horizon: self.horizon,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for p in &self.paths {
            out.push_str(&p.to_text());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let header: EnsembleHeader = serde_json::from_str(first)
            .map_err(|e| MrpError::Parse(format!("bad ensemble header: {e}")))?;
        let paths = parse_paths(rest)?;
        if paths.len() != header.n_paths {
            return Err(MrpError::Parse(format!(
                "header announces {} paths, found {}",
                header.n_paths,
                paths.len()
            )));
        }
        Ok(Self {
            paths,
            seed: header.seed,
            model: header.model,
            horizon: header.horizon,
        })
    }
}

/// Simulates `n_paths` independent paths; path `i` uses the substream keyed by `(seed, i)`.
pub fn sample_ensemble(
    model: &MrpModel,
    n_paths: usize,
    horizon: f64,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(MrpError::InvalidInput(
            "an ensemble needs at least one path".into(),
        ));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(MrpError::InvalidInput(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::ENSEMBLE, i);
            model.sample_path(horizon, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        paths,
        seed,
        model: model.clone(),
        horizon,
    })
}

/// Replaces the mixing law by the law of `Θ̃ = h(Θ)` and the map by the identity.
///
/// The unconditional law of paths is unchanged. Fails if `h` is not injective on the
/// sampled support.
pub fn reparameterize(model: &MrpModel) -> Result<MrpModel> {
    if model.map.is_identity() {
        return Ok(MrpModel {
            mixing: model.mixing.clone(),
            map: ParameterMap::identity(),
            kernel: model.kernel,
        });
    }
    let mut rng = substream(0, domain::INJECTIVITY, 0);
    let mut support: Vec<f64> = model.mixing.quantile_grid(999);
    support.extend((0..SUPPORT_CHECK_DRAWS).map(|_| model.mixing.sample(&mut rng)));
    support.sort_by(f64::total_cmp);
    support.dedup();
    let images: Vec<f64> = support
        .iter()
        .map(|&t| model.map.apply(t))
        .collect::<Result<_>>()?;
    let increasing = images.windows(2).all(|w| w[0] < w[1]);
    let decreasing = images.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(MrpError::Injectivity(format!(
            "{} is not strictly monotone on {} sampled support points",
            model.map.describe("θ"),
            support.len()
        )));
    }
    Ok(MrpModel {
        mixing: MixingLaw::pushforward(model.mixing.clone(), model.map.clone()),
        map: ParameterMap::identity(),
        kernel: model.kernel,
    })
}

/// One constraint on counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventAtom {
    /// `N_t = n`
    CountEq { t: f64, n: usize },
    /// `N_t - N_s = k` for `s < t`
    IncrementEq { s: f64, t: f64, k: usize },
}

/// A finite conjunction of count constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    atoms: Vec<EventAtom>,
}

impl PathEvent {
    pub fn new(atoms: Vec<EventAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(MrpError::InvalidInput(
                "an event needs at least one constraint".into(),
            ));
        }
        for a in &atoms {
            match *a {
                EventAtom::CountEq { t, .. } if !(t >= 0.0) => {
                    return Err(MrpError::InvalidInput(format!(
                        "event time {t} is negative"
                    )))
                }
                EventAtom::IncrementEq { s, t, .. } if !(s >= 0.0 && s < t) => {
                    return Err(MrpError::InvalidInput(format!(
                        "increment needs 0 <= s < t, got s={s}, t={t}"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { atoms })
    }

    pub fn count_eq(t: f64, n: usize) -> Result<Self> {
        Self::new(vec![EventAtom::CountEq { t, n }])
    }

    pub fn atoms(&self) -> &[EventAtom] {
        &self.atoms
    }

    /// Latest time the event looks at.
    pub fn horizon(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| match *a {
                EventAtom::CountEq { t, .. } | EventAtom::IncrementEq { t, .. } => t,
            })
            .fold(0.0, f64::max)
    }

    pub fn holds(&self, path: &ArrivalPath) -> Result<bool> {
        for a in &self.atoms {
            let ok = match *a {
                EventAtom::CountEq { t, n } => path.count_at(t)? == n,
                EventAtom::IncrementEq { s, t, k } => path.count_at(t)? - path.count_at(s)? == k,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Conditional replicate paths per mixing draw on the disintegration side.
pub const CONSISTENCY_REPLICATES: usize = 4;

/// Both sides of `∫_B Q_θ̃(A) P_Θ̃(dθ̃) = P(A ∩ {Θ̃ ∈ B})`, each estimated by simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Integral of conditional probabilities over `B`.
    pub disintegrated: f64,
    pub disintegrated_se: f64,
    /// Joint probability `P(A ∩ {Θ̃ ∈ B})`.
    pub joint: f64,
    pub joint_se: f64,
    pub difference: f64,
    pub z: f64,
    pub mass_b: f64,
    pub n: usize,
    pub seed: u64,
}

/// Monte Carlo check of the disintegration identity for the event `event` and the
/// interval `set_b = [low, high]` of the reparameterized parameter `Θ̃ = h(Θ)`.
///
/// The disintegrated side draws `θ`, and for `h(θ) ∈ B` averages the event over
/// [`CONSISTENCY_REPLICATES`] conditional paths; the joint side draws `(θ, path)` pairs.
/// The two sides use disjoint random streams.
pub fn check_consistency(
    model: &MrpModel,
    event: &PathEvent,
    set_b: (f64, f64),
    n: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    if n < 2 {
        return Err(MrpError::InvalidInput(
            "consistency check needs n >= 2".into(),
        ));
    }
    let (low, high) = set_b;
    if !(low <= high) {
        return Err(MrpError::InvalidInput(format!(
            "set B needs low <= high, got [{low}, {high}]"
        )));
    }
    let in_b = |theta: f64| -> Result<bool> {
        let lambda = model.map.apply(theta)?;
        Ok(low <= lambda && lambda <= high)
    };
    let horizon = event.horizon();

    let disintegrated: Vec<(bool, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::CONSISTENCY_MIXING, i);
            let theta = model.mixing.sample(&mut rng);
            if !in_b(theta)? {
                return Ok((false, 0.0));
            }
            let mut hits = 0usize;
            for r in 0..CONSISTENCY_REPLICATES as u64 {
                let mut crng = substream(
                    seed,
                    domain::CONSISTENCY_CONDITIONAL,
                    i * CONSISTENCY_REPLICATES as u64 + r,
                );
                if event.holds(&model.conditional_path(theta, horizon, &mut crng)?)? {
                    hits += 1;
                }
            }
            Ok((true, hits as f64 / CONSISTENCY_REPLICATES as f64))
        })
        .collect::<Result<_>>()?;
    let mass_b = disintegrated.iter().filter(|(b, _)| *b).count() as f64 / n as f64;
    let required = 10.0 / n as f64;
    if mass_b < required {
        return Err(MrpError::InsufficientMass {
            estimated: mass_b,
            required,
        });
    }
    let values: Vec<f64> = disintegrated.iter().map(|&(_, q)| q).collect();
    let (lhs, lhs_se) = stats::mean_and_se(&values);

    let joint_hits: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::CONSISTENCY_JOINT, i);
            let path = model.sample_path(horizon, &mut rng)?;
            let theta = path.theta()[0];
            Ok(if in_b(theta)? && event.holds(&path)? {
                1.0
            } else {
                0.0
            })
        })
        .collect::<Result<_>>()?;
    let (rhs, rhs_se) = stats::mean_and_se(&joint_hits);

    let difference = lhs - rhs;
    let pooled = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let z = if pooled > 0.0 {
        difference / pooled
    } else if difference == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(difference)
    };
    Ok(ConsistencyReport {
        disintegrated: lhs,
        disintegrated_se: lhs_se,
        joint: rhs,
        joint_se: rhs_se,
        difference,
        z,
        mass_b,
        n,
        seed,
    })
}

/// Per-parameter comparison of simulated interarrivals with the kernel cdf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEqualityReport {
    pub n_theta: usize,
    pub n_per_theta: usize,
    pub max_ks: f64,
    /// `1%` Kolmogorov critical value for the KS distance at `n_per_theta`.
    pub critical: f64,
    pub exceed_fraction: f64,
    pub thetas: Vec<f64>,
    pub ks: Vec<f64>,
    pub seed: u64,
}

/// Witnesses `(P_θ)_{W_n} = K(h(θ))` at sample scale: for each drawn `θ`, the KS distance
/// between `n_per_theta` conditional interarrivals and the kernel cdf at `h(θ)`.
pub fn kernel_equality_check(
    model: &MrpModel,
    n_theta: usize,
    n_per_theta: usize,
    seed: u64,
) -> Result<KernelEqualityReport> {
    let kernel = model.kernel;
    kernel_equality_check_with_sampler(model, n_theta, n_per_theta, seed, |lambda, rng| {
        kernel.sample(lambda, rng)
    })
}

/// [`kernel_equality_check`] with a caller-supplied conditional sampler `(λ, rng) -> W`.
pub fn kernel_equality_check_with_sampler<S>(
    model: &MrpModel,
    n_theta: usize,
    n_per_theta: usize,
    seed: u64,
    sampler: S,
) -> Result<KernelEqualityReport>
where
    S: Fn(f64, &mut Stream) -> Result<f64> + Sync,
{
    if n_theta == 0 || n_per_theta == 0 {
        return Err(MrpError::InvalidInput(
            "kernel equality check needs positive sample sizes".into(),
        ));
    }
    let n_theta = if model.mixing.is_degenerate() {
        1
    } else {
        n_theta
    };
    let critical = stats::kolmogorov_critical(0.01) / (n_per_theta as f64).sqrt();
    let kernel = model.kernel;
    let rows: Vec<(f64, f64)> = (0..n_theta as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::KERNEL_EQUALITY, i);
            let theta = model.mixing.sample(&mut rng);
            let lambda = model.rate_for(theta)?;
            let draws = (0..n_per_theta)
                .map(|_| sampler(lambda, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let ks = if kernel.has_density() {
                stats::ks_distance(&EmpiricalSample::new(draws)?, |t| kernel.cdf_raw(lambda, t))
            } else {
                // point mass at 1: the sup distance is the mass placed elsewhere
                draws.iter().filter(|&&w| w != 1.0).count() as f64 / n_per_theta as f64
            };
            Ok((theta, ks))
        })
        .collect::<Result<_>>()?;
    let ks: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let max_ks = ks.iter().copied().fold(0.0, f64::max);
    let exceed = ks.iter().filter(|&&d| d > critical).count();
    Ok(KernelEqualityReport {
        n_theta,
        n_per_theta,
        max_ks,
        critical,
        exceed_fraction: exceed as f64 / n_theta as f64,
        thetas: rows.iter().map(|r| r.0).collect(),
        ks,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(rate: f64) -> MrpModel {
        MrpModel::new(
            MixingLaw::dirac(rate).unwrap(),
            ParameterMap::identity(),
            InterarrivalKernel::Exponential,
        )
        .unwrap()
    }

    #[test]
    fn zero_horizon_path_is_empty() {
        let e = sample_ensemble(&poisson(2.0), 1, 0.0, 1).unwrap();
        assert!(e.paths()[0].arrivals().is_empty());
    }

    #[test]
    fn ensemble_is_deterministic() {
        let m = poisson(1.5);
        let a = sample_ensemble(&m, 500, 3.0, 42).unwrap();
        let b = sample_ensemble(&m, 500, 3.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
        let c = sample_ensemble(&m, 500, 3.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ensemble_text_round_trip() {
        let m = MrpModel::new(
            MixingLaw::gamma(2.0, 1.0).unwrap(),
            ParameterMap::reciprocal(),
            InterarrivalKernel::ParetoUnitShape,
        )
        .unwrap();
        let e = sample_ensemble(&m, 50, 4.0, 9).unwrap();
        let back = PathEnsemble::from_text(&e.to_text()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn map_null_set_propagates_with_theta() {
        let map = ParameterMap::identity()
            .with_domain(0.0, Some(1.5))
            .unwrap();
        let model = MrpModel {
            mixing: MixingLaw::uniform(1.0, 2.0).unwrap(),
            map,
            kernel: InterarrivalKernel::Exponential,
        };
        let err = sample_ensemble(&model, 200, 1.0, 3).unwrap_err();
        assert!(matches!(err, MrpError::NullSet { theta } if theta >= 1.5));
        assert!(MrpModel::new(model.mixing.clone(), model.map.clone(), model.kernel).is_err());
    }

    #[test]
    fn reparameterize_examples() {
        let m = MrpModel::new(
            MixingLaw::gamma(2.0, 1.0).unwrap(),
            ParameterMap::affine(1.0, 0.0).unwrap(),
            InterarrivalKernel::Exponential,
        )
        .unwrap();
        let r = reparameterize(&m).unwrap();
        assert_eq!(r.mixing(), m.mixing());
        assert!(r.map().is_identity());

        let m = MrpModel::new(
            MixingLaw::uniform(1.0, 2.0).unwrap(),
            ParameterMap::reciprocal(),
            InterarrivalKernel::ParetoUnitShape,
        )
        .unwrap();
        let r = reparameterize(&m).unwrap();
        assert_eq!(r.mixing().support(), (0.5, 1.0));
        assert!(matches!(r.map().form(), crate::kernels::MapForm::Identity));
    }

    #[test]
    fn insufficient_mass_for_empty_b() {
        let m = MrpModel::new(
            MixingLaw::uniform(1.0, 2.0).unwrap(),
            ParameterMap::identity(),
            InterarrivalKernel::Exponential,
        )
        .unwrap();
        let a = PathEvent::count_eq(1.0, 0).unwrap();
        let err = check_consistency(&m, &a, (5.0, 6.0), 1000, 1).unwrap_err();
        assert!(matches!(err, MrpError::InsufficientMass { .. }));
    }

    #[test]
    fn event_validation_and_evaluation() {
        assert!(PathEvent::new(vec![]).is_err());
        assert!(PathEvent::new(vec![EventAtom::IncrementEq {
            s: 2.0,
            t: 1.0,
            k: 0
        }])
        .is_err());
        let p = ArrivalPath::from_arrivals(vec![1.0], vec![0.5, 1.5, 1.7], 3.0).unwrap();
        let e = PathEvent::new(vec![
            EventAtom::CountEq { t: 1.0, n: 1 },
            EventAtom::IncrementEq {
                s: 1.0,
                t: 2.0,
                k: 2,
            },
        ])
        .unwrap();
        assert!(e.holds(&p).unwrap());
        assert_eq!(e.horizon(), 2.0);
        let beyond = PathEvent::count_eq(4.0, 0).unwrap();
        assert!(matches!(
            beyond.holds(&p),
            Err(MrpError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn kernel_equality_dirac_checks_one_theta() {
        let r = kernel_equality_check(&poisson(2.0), 50, 2000, 5).unwrap();
        assert_eq!(r.n_theta, 1);
        assert_eq!(r.thetas, vec![2.0]);
    }
}
