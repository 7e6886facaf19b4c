//! Interarrival kernel families, mixing laws and parameter maps.
//!
//! A kernel family maps a positive parameter `λ` to an interarrival law with cdf `F_λ`,
//! density `f_λ`, survival `G_λ = 1 - F_λ` and hazard at zero `p = lim f_λ(t)` as `t → 0+`.
//! The Pareto and generalized-gamma families use the densities
//!
//! * `ParetoUnitShape`: `f_λ(t) = λ / (1 + λt)^2`
//! * `GenGammaHalf`: `f_λ(t) = exp(-sqrt(t/λ)) / (2λ)`

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{MrpError, Result};
use crate::numeric;
use crate::stats;

/// Step of the forward difference used by [`InterarrivalKernel::hazard_at_zero_numeric`].
pub const HAZARD_STEP: f64 = 1e-7;

/// Bracket and tolerance for inverting `(1 + u) e^{-u}` when sampling `GenGammaHalf`.
const GEN_GAMMA_BRACKET: f64 = 50.0;
const GEN_GAMMA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterarrivalKernel {
    Exponential,
    ParetoUnitShape,
    GenGammaHalf,
    /// Point mass at 1: every interarrival equals one time unit.
    DeterministicUnit,
}

impl InterarrivalKernel {
    pub const ALL: [InterarrivalKernel; 4] = [
        Self::Exponential,
        Self::ParetoUnitShape,
        Self::GenGammaHalf,
        Self::DeterministicUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::ParetoUnitShape => "pareto_unit_shape",
            Self::GenGammaHalf => "gen_gamma_half",
            Self::DeterministicUnit => "deterministic_unit",
        }
    }

    pub fn has_density(self) -> bool {
        !matches!(self, Self::DeterministicUnit)
    }

    pub fn check_parameter(self, lambda: f64) -> Result<()> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(())
        } else {
            Err(MrpError::Parameter {
                family: self.name(),
                value: lambda,
            })
        }
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 {
            Ok(())
        } else {
            Err(MrpError::InvalidInput(format!(
                "time must be nonnegative, got {t}"
            )))
        }
    }

    pub fn cdf(self, lambda: f64, t: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        Self::check_time(t)?;
        Ok(self.cdf_raw(lambda, t))
    }

    pub fn survival(self, lambda: f64, t: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        Self::check_time(t)?;
        Ok(self.survival_raw(lambda, t))
    }

    pub fn pdf(self, lambda: f64, t: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        if !(t > 0.0) {
            return Err(MrpError::InvalidInput(format!(
                "density is evaluated at t > 0, got {t}"
            )));
        }
        if !self.has_density() {
            return Err(MrpError::NoDensity(self.name()));
        }
        Ok(self.pdf_raw(lambda, t))
    }

    pub(crate) fn cdf_raw(self, lambda: f64, t: f64) -> f64 {
        match self {
            Self::Exponential => -(-lambda * t).exp_m1(),
            Self::ParetoUnitShape => lambda * t / (1.0 + lambda * t),
            Self::GenGammaHalf => {
                let u = (t / lambda).sqrt();
                -(-u).exp_m1() - u * (-u).exp()
            }
            Self::DeterministicUnit => {
                if t < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub(crate) fn survival_raw(self, lambda: f64, t: f64) -> f64 {
        match self {
            Self::Exponential => (-lambda * t).exp(),
            Self::ParetoUnitShape => 1.0 / (1.0 + lambda * t),
            Self::GenGammaHalf => {
                let u = (t / lambda).sqrt();
                (1.0 + u) * (-u).exp()
            }
            Self::DeterministicUnit => 1.0 - self.cdf_raw(lambda, t),
        }
    }

    /// Density; zero for the deterministic family, which has none.
    pub(crate) fn pdf_raw(self, lambda: f64, t: f64) -> f64 {
        match self {
            Self::Exponential => lambda * (-lambda * t).exp(),
            Self::ParetoUnitShape => lambda / ((1.0 + lambda * t) * (1.0 + lambda * t)),
            Self::GenGammaHalf => (-(t / lambda).sqrt()).exp() / (2.0 * lambda),
            Self::DeterministicUnit => 0.0,
        }
    }

    /// Inverse cdf at `v ∈ (0, 1)`.
    pub fn quantile(self, lambda: f64, v: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        if !(v > 0.0 && v < 1.0) {
            return Err(MrpError::InvalidInput(format!(
                "quantile level must lie in (0,1), got {v}"
            )));
        }
        Ok(match self {
            Self::Exponential => -(-v).ln_1p() / lambda,
            Self::ParetoUnitShape => v / ((1.0 - v) * lambda),
            Self::GenGammaHalf => {
                let target = 1.0 - v;
                let u = numeric::brent_root(
                    |u: f64| (1.0 + u) * (-u).exp() - target,
                    0.0,
                    GEN_GAMMA_BRACKET,
                    GEN_GAMMA_TOL,
                )?;
                lambda * u * u
            }
            Self::DeterministicUnit => 1.0,
        })
    }

    /// One interarrival draw by inverse transform.
    pub fn sample<R: Rng + ?Sized>(self, lambda: f64, rng: &mut R) -> Result<f64> {
        let v: f64 = rng.sample(Open01);
        self.quantile(lambda, v)
    }

    /// `p(λ) = lim_{t→0+} f_λ(t)`.
    pub fn hazard_at_zero(self, lambda: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        match self {
            Self::Exponential | Self::ParetoUnitShape => Ok(lambda),
            Self::GenGammaHalf => Ok(1.0 / (2.0 * lambda)),
            Self::DeterministicUnit => Err(MrpError::RegularityViolation(
                "deterministic_unit kernel has no density, so the hazard at zero does not exist"
                    .into(),
            )),
        }
    }

    /// Hazard at zero from the cdf alone: forward difference `D(h) = F(h)/h` at
    /// `h = 1e-7`, refined once as `2 D(h) - D(4h)`. The refinement cancels an
    /// `O(sqrt h)` error term, which is what a cdf in `sqrt(t)` such as
    /// `GenGammaHalf` produces; for analytic cdfs it leaves an `O(h)` error.
    pub fn hazard_at_zero_numeric(self, lambda: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        let d = |h: f64| self.cdf_raw(lambda, h) / h;
        let p = 2.0 * d(HAZARD_STEP) - d(4.0 * HAZARD_STEP);
        if p > 0.0 && p.is_finite() {
            Ok(p)
        } else {
            Err(MrpError::RegularityViolation(format!(
                "{} kernel: numeric hazard at zero is {p}",
                self.name()
            )))
        }
    }

    /// Analytic supremum of the density, the dominating bound `C`.
    pub fn density_bound(self, lambda: f64) -> Result<f64> {
        self.check_parameter(lambda)?;
        match self {
            Self::Exponential | Self::ParetoUnitShape => Ok(lambda),
            Self::GenGammaHalf => Ok(1.0 / (2.0 * lambda)),
            Self::DeterministicUnit => Err(MrpError::NoDensity(self.name())),
        }
    }

    pub(crate) fn describe_hazard(self, lambda: &str) -> String {
        match self {
            Self::Exponential | Self::ParetoUnitShape => lambda.to_string(),
            Self::GenGammaHalf => format!("1/(2·({lambda}))"),
            Self::DeterministicUnit => "undefined".into(),
        }
    }
}

/// Excluded null set of a parameter map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Excluded {
    Point {
        at: f64,
    },
    /// Closed interval.
    Interval {
        low: f64,
        high: f64,
    },
}

impl Excluded {
    fn contains(&self, x: f64) -> bool {
        match *self {
            Excluded::Point { at } => x == at,
            Excluded::Interval { low, high } => low <= x && x <= high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum MapForm {
    Affine { a: f64, b: f64 },
    Reciprocal,
    Identity,
}

/// The parameter map `h`, injective on its domain minus the excluded null set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterMap {
    form: MapForm,
    /// Open interval `(lower, upper)`; `upper = None` means unbounded.
    lower: f64,
    upper: Option<f64>,
    excluded: Vec<Excluded>,
}

impl ParameterMap {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(MrpError::InvalidInput(format!(
                "affine map needs a > 0 and b >= 0, got a={a}, b={b}"
            )));
        }
        Ok(Self::with_form(MapForm::Affine { a, b }))
    }

    pub fn reciprocal() -> Self {
        Self::with_form(MapForm::Reciprocal)
    }

    pub fn identity() -> Self {
        Self::with_form(MapForm::Identity)
    }

    fn with_form(form: MapForm) -> Self {
        Self {
            form,
            lower: 0.0,
            upper: None,
            excluded: Vec::new(),
        }
    }

    /// Restricts the injectivity domain to the open interval `(lower, upper)`.
    pub fn with_domain(mut self, lower: f64, upper: Option<f64>) -> Result<Self> {
        if !(lower >= 0.0) || upper.is_some_and(|u| !(u > lower)) {
            return Err(MrpError::InvalidInput(format!(
                "bad map domain ({lower}, {upper:?})"
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_excluded(mut self, excluded: Vec<Excluded>) -> Self {
        self.excluded = excluded;
        self
    }

    pub fn form(&self) -> MapForm {
        self.form
    }

    pub fn domain(&self) -> (f64, Option<f64>) {
        (self.lower, self.upper)
    }

    pub fn excluded(&self) -> &[Excluded] {
        &self.excluded
    }

    pub fn is_identity(&self) -> bool {
        matches!(
            self.form,
            MapForm::Identity | MapForm::Affine { a: 1.0, b: 0.0 }
        )
    }

    pub fn is_increasing(&self) -> bool {
        !matches!(self.form, MapForm::Reciprocal)
    }

    fn admissible(&self, theta: f64) -> bool {
        theta > self.lower
            && self.upper.is_none_or(|u| theta < u)
            && !self.excluded.iter().any(|e| e.contains(theta))
    }

    /// The bare formula, without domain checks.
    pub(crate) fn eval(&self, theta: f64) -> f64 {
        match self.form {
            MapForm::Affine { a, b } => a * theta + b,
            MapForm::Reciprocal => 1.0 / theta,
            MapForm::Identity => theta,
        }
    }

    fn eval_inverse(&self, lambda: f64) -> f64 {
        match self.form {
            MapForm::Affine { a, b } => (lambda - b) / a,
            MapForm::Reciprocal => 1.0 / lambda,
            MapForm::Identity => lambda,
        }
    }

    /// `h(θ)`; arguments outside the domain or inside the null set are rejected.
    pub fn apply(&self, theta: f64) -> Result<f64> {
        if self.admissible(theta) {
            Ok(self.eval(theta))
        } else {
            Err(MrpError::NullSet { theta })
        }
    }

    /// `h^{-1}(λ)` on the image of the admissible domain.
    pub fn invert(&self, lambda: f64) -> Result<f64> {
        let theta = self.eval_inverse(lambda);
        if theta.is_finite() && self.admissible(theta) {
            Ok(theta)
        } else {
            Err(MrpError::NullSet { theta })
        }
    }

    /// Strict monotonicity of `h` on the admissible points of a sorted grid.
    pub fn strictly_monotone_on(&self, grid: &[f64]) -> bool {
        let values: Vec<f64> = grid
            .iter()
            .filter(|&&t| self.admissible(t))
            .map(|&t| self.eval(t))
            .collect();
        let inc = values.windows(2).all(|w| w[0] < w[1]);
        let dec = values.windows(2).all(|w| w[0] > w[1]);
        inc || dec
    }

    /// Human-readable `h(var)`.
    pub fn describe(&self, var: &str) -> String {
        match self.form {
            MapForm::Affine { a, b: 0.0 } => format!("{a}·{var}"),
            MapForm::Affine { a, b } => format!("{a}·{var}+{b}"),
            MapForm::Reciprocal => format!("1/{var}"),
            MapForm::Identity => var.to_string(),
        }
    }

    /// Image of the open interval `(lo, hi)`.
    pub(crate) fn image(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = (self.eval(lo), self.eval(hi));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Quantile levels used to truncate the support for quadrature.
pub const QUADRATURE_TAIL: f64 = 1e-8;

/// The law `μ = P_Θ` of the mixing parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MixingLaw {
    /// Shape-rate parameterization: density `β^α θ^{α-1} e^{-βθ} / Γ(α)`.
    Gamma {
        shape: f64,
        rate: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Dirac {
        value: f64,
    },
    /// Law of `h(Θ)` for `Θ ~ base`; sampled by composition.
    Pushforward {
        base: Box<MixingLaw>,
        map: ParameterMap,
    },
}

impl MixingLaw {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite() {
            Ok(Self::Gamma { shape, rate })
        } else {
            Err(MrpError::InvalidInput(format!(
                "gamma law needs positive shape and rate, got {shape}, {rate}"
            )))
        }
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if low.is_finite() && high.is_finite() && low < high {
            Ok(Self::Uniform { low, high })
        } else {
            Err(MrpError::InvalidInput(format!(
                "uniform law needs low < high, got {low}, {high}"
            )))
        }
    }

    pub fn dirac(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self::Dirac { value })
        } else {
            Err(MrpError::InvalidInput(format!(
                "dirac law needs a finite value, got {value}"
            )))
        }
    }

    pub fn pushforward(base: MixingLaw, map: ParameterMap) -> Self {
        Self::Pushforward {
            base: Box::new(base),
            map,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Dirac { .. } => true,
            Self::Pushforward { base, .. } => base.is_degenerate(),
            _ => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated")
                .sample(rng),
            Self::Uniform { low, high } => {
                let v: f64 = rng.sample(Open01);
                low + (high - low) * v
            }
            Self::Dirac { value } => *value,
            Self::Pushforward { base, map } => map.eval(base.sample(rng)),
        }
    }

    /// Closure of the support, `(low, high)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gamma { .. } => (0.0, f64::INFINITY),
            Self::Uniform { low, high } => (*low, *high),
            Self::Dirac { value } => (*value, *value),
            Self::Pushforward { base, map } => {
                let (lo, hi) = base.support();
                map.image(lo, hi)
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::Gamma { shape, rate } => Some(shape / rate),
            Self::Uniform { low, high } => Some(0.5 * (low + high)),
            Self::Dirac { value } => Some(*value),
            Self::Pushforward { .. } => None,
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            Self::Gamma { shape, rate } => Some(shape / (rate * rate)),
            Self::Uniform { low, high } => Some((high - low).powi(2) / 12.0),
            Self::Dirac { .. } => Some(0.0),
            Self::Pushforward { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Gamma { shape, rate } => stats::gamma_p(*shape, rate * x),
            Self::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Self::Dirac { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Pushforward { base, map } => {
                let theta = map.eval_inverse(x);
                if map.is_increasing() {
                    base.cdf(theta)
                } else {
                    1.0 - base.cdf(theta)
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            Self::Gamma { shape, rate } => Some(if x <= 0.0 {
                0.0
            } else {
                (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - stats::ln_gamma(*shape))
                    .exp()
            }),
            Self::Uniform { low, high } => Some(if x >= *low && x <= *high {
                1.0 / (high - low)
            } else {
                0.0
            }),
            Self::Dirac { .. } | Self::Pushforward { .. } => None,
        }
    }

    /// Quantile function for `q ∈ (0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            Self::Gamma { shape, rate } => {
                let mut hi = (shape / rate).max(1.0);
                while stats::gamma_p(*shape, rate * hi) < q {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if stats::gamma_p(*shape, rate * mid) < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            Self::Uniform { low, high } => low + (high - low) * q,
            Self::Dirac { value } => *value,
            Self::Pushforward { base, map } => {
                let level = if map.is_increasing() { q } else { 1.0 - q };
                map.eval(base.quantile(level))
            }
        }
    }

    /// `k` interior quantiles at levels `i/(k+1)`; a single point for a degenerate law.
    pub fn quantile_grid(&self, k: usize) -> Vec<f64> {
        if self.is_degenerate() {
            return vec![self.quantile(0.5)];
        }
        let mut grid: Vec<f64> = (1..=k)
            .map(|i| self.quantile(i as f64 / (k + 1) as f64))
            .collect();
        grid.sort_by(f64::total_cmp);
        grid
    }

    /// `E[f(Θ)]` by adaptive quadrature over the support truncated at the
    /// `1e-8` tail quantiles.
    pub fn expectation(&self, f: impl Fn(f64) -> f64, abs_tol: f64) -> Result<f64> {
        self.expectation_dyn(&f, abs_tol)
    }

    fn expectation_dyn(&self, f: &dyn Fn(f64) -> f64, abs_tol: f64) -> Result<f64> {
        match self {
            Self::Dirac { value } => Ok(f(*value)),
            Self::Pushforward { base, map } => {
                base.expectation_dyn(&|theta| f(map.eval(theta)), abs_tol)
            }
            Self::Uniform { low, high } => {
                let width = high - low;
                Ok(numeric::integrate(|x| f(x) / width, *low, *high, abs_tol, 2000)?.value)
            }
            Self::Gamma { .. } => {
                let levels = [
                    QUADRATURE_TAIL,
                    1e-4,
                    0.01,
                    0.1,
                    0.5,
                    0.9,
                    0.99,
                    0.9999,
                    1.0 - QUADRATURE_TAIL,
                ];
                let cuts: Vec<f64> = levels.iter().map(|&q| self.quantile(q)).collect();
                let piece_tol = abs_tol / (cuts.len() - 1) as f64;
                let integrand = |x: f64| f(x) * self.pdf(x).expect("gamma has a density");
                cuts.windows(2)
                    .map(|w| {
                        numeric::integrate(integrand, w[0], w[1], piece_tol, 2000).map(|r| r.value)
                    })
                    .sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn cdf_examples() {
        assert_eq!(InterarrivalKernel::Exponential.cdf(2.0, 0.0).unwrap(), 0.0);
        assert!((InterarrivalKernel::ParetoUnitShape.cdf(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let expected = 1.0 - 2.0 * (-1.0_f64).exp();
        assert!((InterarrivalKernel::GenGammaHalf.cdf(1.0, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.264_241).abs() < 1e-6);
        assert_eq!(
            InterarrivalKernel::DeterministicUnit
                .cdf(1.0, 0.999)
                .unwrap(),
            0.0
        );
        assert_eq!(
            InterarrivalKernel::DeterministicUnit.cdf(1.0, 1.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn cdf_parameter_errors() {
        for k in InterarrivalKernel::ALL {
            assert!(matches!(k.cdf(0.0, 1.0), Err(MrpError::Parameter { .. })));
            assert!(matches!(k.cdf(-1.0, 1.0), Err(MrpError::Parameter { .. })));
            assert!(matches!(
                k.cdf(f64::NAN, 1.0),
                Err(MrpError::Parameter { .. })
            ));
        }
    }

    #[test]
    fn pdf_near_zero() {
        let e = InterarrivalKernel::Exponential.pdf(2.5, 1e-9).unwrap();
        assert!((e - 2.5).abs() < 1e-6);
        let p = InterarrivalKernel::ParetoUnitShape.pdf(1.5, 1e-9).unwrap();
        assert!((p - 1.5).abs() < 1e-6);
        assert!(matches!(
            InterarrivalKernel::DeterministicUnit.pdf(1.0, 0.5),
            Err(MrpError::NoDensity(_))
        ));
    }

    #[test]
    fn pdf_is_central_difference_of_cdf() {
        for k in [
            InterarrivalKernel::Exponential,
            InterarrivalKernel::ParetoUnitShape,
            InterarrivalKernel::GenGammaHalf,
        ] {
            for &lambda in &[0.5, 1.0, 1.7] {
                for i in 0..=100 {
                    let t = 0.01 + (10.0 - 0.01) * i as f64 / 100.0;
                    let h = 1e-5;
                    let fd =
                        (k.cdf(lambda, t + h).unwrap() - k.cdf(lambda, t - h).unwrap()) / (2.0 * h);
                    let pdf = k.pdf(lambda, t).unwrap();
                    assert!(
                        (fd - pdf).abs() < 1e-6,
                        "{k:?} λ={lambda} t={t}: {fd} vs {pdf}"
                    );
                }
            }
        }
    }

    #[test]
    fn sample_examples() {
        let mut rng = substream(1, 99, 0);
        for _ in 0..10 {
            assert_eq!(
                InterarrivalKernel::DeterministicUnit
                    .sample(3.0, &mut rng)
                    .unwrap(),
                1.0
            );
        }
        let q = InterarrivalKernel::Exponential.quantile(2.0, 0.5).unwrap();
        assert!((q - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in [
            InterarrivalKernel::Exponential,
            InterarrivalKernel::ParetoUnitShape,
            InterarrivalKernel::GenGammaHalf,
        ] {
            for &v in &[1e-9, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
                let t = k.quantile(1.3, v).unwrap();
                assert!((k.cdf(1.3, t).unwrap() - v).abs() < 1e-10, "{k:?} v={v}");
            }
        }
    }

    #[test]
    fn hazard_examples() {
        assert_eq!(
            InterarrivalKernel::Exponential.hazard_at_zero(2.5).unwrap(),
            2.5
        );
        assert_eq!(
            InterarrivalKernel::GenGammaHalf
                .hazard_at_zero(2.0)
                .unwrap(),
            0.25
        );
        assert!(matches!(
            InterarrivalKernel::DeterministicUnit.hazard_at_zero(1.0),
            Err(MrpError::RegularityViolation(_))
        ));
        assert!(matches!(
            InterarrivalKernel::DeterministicUnit.hazard_at_zero_numeric(1.0),
            Err(MrpError::RegularityViolation(_))
        ));
    }

    #[test]
    fn numeric_hazard_matches_analytic() {
        for k in [
            InterarrivalKernel::Exponential,
            InterarrivalKernel::ParetoUnitShape,
            InterarrivalKernel::GenGammaHalf,
        ] {
            for &lambda in &[0.1, 0.5, 1.0, 2.0, 7.0, 20.0] {
                let a = k.hazard_at_zero(lambda).unwrap();
                let n = k.hazard_at_zero_numeric(lambda).unwrap();
                assert!(((n - a) / a).abs() < 1e-4, "{k:?} λ={lambda}: {n} vs {a}");
            }
        }
    }

    #[test]
    fn map_examples() {
        let id = ParameterMap::affine(1.0, 0.0).unwrap();
        assert_eq!(id.apply(1.7).unwrap(), 1.7);
        let r = ParameterMap::reciprocal();
        assert_eq!(r.apply(2.0).unwrap(), 0.5);
        assert_eq!(r.invert(0.5).unwrap(), 2.0);
        let a = ParameterMap::affine(2.0, 1.0).unwrap();
        assert_eq!(a.apply(3.0).unwrap(), 7.0);
        assert_eq!(a.invert(7.0).unwrap(), 3.0);
        assert!(ParameterMap::affine(0.0, 1.0).is_err());
        assert!(ParameterMap::affine(1.0, -1.0).is_err());
    }

    #[test]
    fn map_null_set_is_an_error() {
        let m = ParameterMap::identity()
            .with_domain(1.0, Some(2.0))
            .unwrap()
            .with_excluded(vec![
                Excluded::Point { at: 1.5 },
                Excluded::Interval {
                    low: 1.8,
                    high: 1.9,
                },
            ]);
        assert!(matches!(m.apply(1.5), Err(MrpError::NullSet { theta }) if theta == 1.5));
        assert!(m.apply(1.85).is_err());
        assert!(m.apply(0.5).is_err());
        assert!(m.apply(2.0).is_err());
        assert!(m.apply(1.2).is_ok());
        assert!(m.invert(1.85).is_err());
        // affine image below b has no preimage in (0, ∞)
        assert!(ParameterMap::affine(1.0, 1.0).unwrap().invert(0.5).is_err());
    }

    #[test]
    fn mixing_examples() {
        let mut rng = substream(3, 99, 0);
        let d = MixingLaw::dirac(3.0).unwrap();
        assert_eq!(d.sample(&mut rng), 3.0);
        let u = MixingLaw::uniform(1.0, 2.0).unwrap();
        for _ in 0..1000 {
            let x = u.sample(&mut rng);
            assert!(x > 1.0 && x < 2.0);
        }
    }

    #[test]
    fn gamma_quantile_and_expectation() {
        let g = MixingLaw::gamma(2.0, 1.0).unwrap();
        for &q in &[1e-8, 0.05, 0.5, 0.95] {
            let x = g.quantile(q);
            assert!((g.cdf(x) - q).abs() < 1e-12 * q.max(1e-3), "q={q}");
        }
        // median of Gamma(2,1) solves (1+x)e^{-x} = 1/2
        let m = g.quantile(0.5);
        assert!(((1.0 + m) * (-m).exp() - 0.5).abs() < 1e-12);
        let mean = g.expectation(|x| x, 1e-10).unwrap();
        assert!((mean - 2.0).abs() < 1e-6);
        let second = g.expectation(|x| x * x, 1e-10).unwrap();
        assert!((second - 6.0).abs() < 1e-5);
    }

    #[test]
    fn pushforward_support_and_quantiles() {
        let p = MixingLaw::pushforward(
            MixingLaw::uniform(1.0, 2.0).unwrap(),
            ParameterMap::reciprocal(),
        );
        assert_eq!(p.support(), (0.5, 1.0));
        assert!((p.quantile(0.25) - 1.0 / 1.75).abs() < 1e-15);
        assert!((p.cdf(1.0 / 1.75) - 0.25).abs() < 1e-12);
        let e = p.expectation(|x| x, 1e-12).unwrap();
        assert!((e - 2.0_f64.ln()).abs() < 1e-10);
    }
}
