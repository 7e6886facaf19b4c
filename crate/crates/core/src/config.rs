//! Model configuration files and the built-in example presets.
//!
//! The grammar is line oriented, one `key=value` per line (`;` also separates
//! entries, `#` starts a comment):
//!
//! ```text
//! mixing=gamma:<shape>,<rate> | uniform:<low>,<high> | dirac:<value>
//! map=identity | reciprocal | affine:<a>,<b>
//! map_domain=<low>,<high>          # optional, high may be `inf`
//! map_exclude=<x>|<low>..<high>    # optional null set, `|`-separated
//! kernel=exp | pareto | gengamma | deterministic
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::disintegration::MrpModel;
use crate::error::{MrpError, Result};
use crate::kernels::{Excluded, InterarrivalKernel, MapForm, MixingLaw, ParameterMap};

fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        v => v
            .parse()
            .map_err(|_| MrpError::Parse(format!("not a number: {v:?}"))),
    }
}

fn parse_args<const N: usize>(what: &str, args: Option<&str>) -> Result<[f64; N]> {
    let args = args.ok_or_else(|| MrpError::Parse(format!("{what} needs {N} parameter(s)")))?;
    let values: Vec<f64> = args.split(',').map(parse_f64).collect::<Result<_>>()?;
    values.try_into().map_err(|v: Vec<f64>| {
        MrpError::Parse(format!("{what} needs {N} parameter(s), got {}", v.len()))
    })
}

pub fn parse_mixing(spec: &str) -> Result<MixingLaw> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (spec.trim(), None),
    };
    match name {
        "gamma" => {
            let [shape, rate] = parse_args("gamma", args)?;
            MixingLaw::gamma(shape, rate)
        }
        "uniform" => {
            let [low, high] = parse_args("uniform", args)?;
            MixingLaw::uniform(low, high)
        }
        "dirac" => {
            let [value] = parse_args("dirac", args)?;
            MixingLaw::dirac(value)
        }
        other => Err(MrpError::Parse(format!("unknown mixing law {other:?}"))),
    }
}

pub fn parse_map_form(spec: &str) -> Result<ParameterMap> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (spec.trim(), None),
    };
    match (name, args) {
        ("identity", None) => Ok(ParameterMap::identity()),
        ("reciprocal", None) => Ok(ParameterMap::reciprocal()),
        ("affine", args) => {
            let [a, b] = parse_args("affine", args)?;
            ParameterMap::affine(a, b)
        }
        (other, _) => Err(MrpError::Parse(format!(
            "unknown parameter map {spec:?} ({other})"
        ))),
    }
}

impl FromStr for InterarrivalKernel {
    type Err = MrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exp" | "exponential" => Ok(Self::Exponential),
            "pareto" | "pareto_unit_shape" => Ok(Self::ParetoUnitShape),
            "gengamma" | "gen_gamma_half" => Ok(Self::GenGammaHalf),
            "deterministic" | "deterministic_unit" => Ok(Self::DeterministicUnit),
            other => Err(MrpError::Parse(format!("unknown kernel {other:?}"))),
        }
    }
}

fn parse_excluded(spec: &str) -> Result<Vec<Excluded>> {
    spec.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match item.split_once("..") {
            Some((lo, hi)) => Ok(Excluded::Interval {
                low: parse_f64(lo)?,
                high: parse_f64(hi)?,
            }),
            None => Ok(Excluded::Point {
                at: parse_f64(item)?,
            }),
        })
        .collect()
}

/// Parses a model configuration.
pub fn parse_model(text: &str) -> Result<MrpModel> {
    let mut mixing = None;
    let mut map = None;
    let mut domain = None;
    let mut excluded = Vec::new();
    let mut kernel = None;
    for entry in text
        .lines()
        .flat_map(|l| l.split('#').next().unwrap_or("").split(';'))
    {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| MrpError::Parse(format!("expected key=value, got {entry:?}")))?;
        match key.trim() {
            "mixing" => mixing = Some(parse_mixing(value)?),
            "map" => map = Some(parse_map_form(value)?),
            "map_domain" => {
                let [lo, hi] = parse_args("map_domain", Some(value))?;
                domain = Some((lo, if hi.is_infinite() { None } else { Some(hi) }));
            }
            "map_exclude" => excluded = parse_excluded(value)?,
            "kernel" => kernel = Some(value.parse::<InterarrivalKernel>()?),
            other => return Err(MrpError::Parse(format!("unknown key {other:?}"))),
        }
    }
    let mixing = mixing.ok_or_else(|| MrpError::Parse("missing `mixing`".into()))?;
    let kernel = kernel.ok_or_else(|| MrpError::Parse("missing `kernel`".into()))?;
    let mut map = map.unwrap_or_else(ParameterMap::identity);
    if let Some((lo, hi)) = domain {
        map = map.with_domain(lo, hi)?;
    }
    map = map.with_excluded(excluded);
    MrpModel::new(mixing, map, kernel)
}

fn describe_mixing(m: &MixingLaw) -> String {
    match m {
        MixingLaw::Gamma { shape, rate } => format!("gamma:{shape},{rate}"),
        MixingLaw::Uniform { low, high } => format!("uniform:{low},{high}"),
        MixingLaw::Dirac { value } => format!("dirac:{value}"),
        MixingLaw::Pushforward { base, map } => {
            format!(
                "image of {} under {}",
                describe_mixing(base),
                map.describe("θ")
            )
        }
    }
}

fn kernel_key(k: InterarrivalKernel) -> &'static str {
    match k {
        InterarrivalKernel::Exponential => "exp",
        InterarrivalKernel::ParetoUnitShape => "pareto",
        InterarrivalKernel::GenGammaHalf => "gengamma",
        InterarrivalKernel::DeterministicUnit => "deterministic",
    }
}

pub(crate) fn describe_model(model: &MrpModel) -> String {
    let map = model.map();
    let mut parts = vec![format!("mixing={}", describe_mixing(model.mixing()))];
    parts.push(match map.form() {
        MapForm::Affine { a, b } => format!("map=affine:{a},{b}"),
        MapForm::Reciprocal => "map=reciprocal".into(),
        MapForm::Identity => "map=identity".into(),
    });
    let (lo, hi) = map.domain();
    if lo != 0.0 || hi.is_some() {
        parts.push(format!(
            "map_domain={lo},{}",
            hi.map_or("inf".to_string(), |h| h.to_string())
        ));
    }
    if !map.excluded().is_empty() {
        let items: Vec<String> = map
            .excluded()
            .iter()
            .map(|e| match e {
                Excluded::Point { at } => at.to_string(),
                Excluded::Interval { low, high } => format!("{low}..{high}"),
            })
            .collect();
        parts.push(format!("map_exclude={}", items.join("|")));
    }
    parts.push(format!("kernel={}", kernel_key(model.kernel())));
    parts.join("; ")
}

/// The built-in example models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Gamma(2,1) mixing, `h(θ) = aθ + b` with `a = 1, b = 0`, exponential kernel.
    A,
    /// Gamma(2,1) mixing, `h(θ) = 1/θ`, unit-shape Pareto kernel.
    B,
    /// Uniform(1,2) mixing, identity map, generalized gamma kernel with shape 1/2.
    C,
    /// Unit point mass interarrivals, `N_t = ⌊t⌋`.
    Deterministic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::A, Preset::B, Preset::C, Preset::Deterministic];

    pub fn model(self) -> MrpModel {
        self.model_with_affine(1.0, 0.0)
    }

    /// Preset model; `a` and `b` only affect preset `A`.
    pub fn model_with_affine(self, a: f64, b: f64) -> MrpModel {
        let built = match self {
            Preset::A => MrpModel::new(
                MixingLaw::Gamma {
                    shape: 2.0,
                    rate: 1.0,
                },
                ParameterMap::affine(a, b).expect("preset affine coefficients are valid"),
                InterarrivalKernel::Exponential,
            ),
            Preset::B => MrpModel::new(
                MixingLaw::Gamma {
                    shape: 2.0,
                    rate: 1.0,
                },
                ParameterMap::reciprocal(),
                InterarrivalKernel::ParetoUnitShape,
            ),
            Preset::C => MrpModel::new(
                MixingLaw::Uniform {
                    low: 1.0,
                    high: 2.0,
                },
                ParameterMap::identity(),
                InterarrivalKernel::GenGammaHalf,
            ),
            Preset::Deterministic => MrpModel::new(
                MixingLaw::Dirac { value: 1.0 },
                ParameterMap::identity(),
                InterarrivalKernel::DeterministicUnit,
            ),
        };
        built.expect("preset models are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::A => "a",
            Preset::B => "b",
            Preset::C => "c",
            Preset::Deterministic => "deterministic",
        })
    }
}

impl FromStr for Preset {
    type Err = MrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Preset::A),
            "b" => Ok(Preset::B),
            "c" => Ok(Preset::C),
            "deterministic" => Ok(Preset::Deterministic),
            other => Err(MrpError::Parse(format!("unknown preset {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let m = parse_model(
            "# example\nmixing=gamma:2,1\nmap=affine:2,0.5\nmap_domain=0,inf\nmap_exclude=30|40..50\nkernel=exp\n",
        )
        .unwrap();
        assert_eq!(m.kernel(), InterarrivalKernel::Exponential);
        assert_eq!(m.map().form(), MapForm::Affine { a: 2.0, b: 0.5 });
        assert_eq!(m.map().excluded().len(), 2);
    }

    #[test]
    fn describe_round_trips() {
        for p in Preset::ALL {
            let m = p.model();
            assert_eq!(parse_model(&m.describe()).unwrap(), m, "{p}");
        }
        let m = parse_model("mixing=uniform:1,2; map=identity; map_domain=0.5,3; map_exclude=1.2345; kernel=gengamma").unwrap();
        assert_eq!(parse_model(&m.describe()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_model("mixing=gamma:2\nkernel=exp").is_err());
        assert!(parse_model("mixing=beta:2,1\nkernel=exp").is_err());
        assert!(parse_model("mixing=gamma:2,1\nkernel=weibull").is_err());
        assert!(parse_model("kernel=exp").is_err());
        assert!(parse_model("mixing=gamma:2,1\nkernel=exp\ncolour=blue").is_err());
        assert!(parse_model("mixing=gamma:2,1\nmap=affine:-1,0\nkernel=exp").is_err());
        assert!("e".parse::<Preset>().is_err());
    }
}
