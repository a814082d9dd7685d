//! Experiment configuration file. Every field is optional in the file; flags
//! given on the command line replace file values.

use std::fmt;
use std::path::{Path, PathBuf};

use pauliest::{
    ChannelSpec, Error, ErrorRateDistribution, EtaConstants, KindPolicy, Precision, SpamParams,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Ground truth given inline or as a path to a JSON distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PiSource {
    Inline(ErrorRateDistribution),
    File(PathBuf),
}

impl PiSource {
    pub fn load(&self) -> pauliest::Result<ErrorRateDistribution> {
        match self {
            PiSource::Inline(pi) => Ok(pi.clone()),
            PiSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                ErrorRateDistribution::from_json(&text)
            }
        }
    }
}

/// A probe count, or `"auto"` to plan one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleCount {
    Auto,
    Fixed(u64),
}

impl std::str::FromStr for SampleCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(SampleCount::Auto);
        }
        s.parse()
            .map(SampleCount::Fixed)
            .map_err(|_| format!("expected a count or \"auto\", got {s:?}"))
    }
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleCount::Auto => f.write_str("auto"),
            SampleCount::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for SampleCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SampleCount::Auto => s.serialize_str("auto"),
            SampleCount::Fixed(m) => s.serialize_u64(*m),
        }
    }
}

impl<'de> Deserialize<'de> for SampleCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(SampleCount::Fixed(m)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpamConfig {
    pub r_prep: f64,
    pub r_meas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Exact,
    Lp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Channel for the `amatrix` subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<PiSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spam: Option<SpamConfig>,
    /// SPAM parameters assumed by the estimators, when they differ from the
    /// ones used to simulate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumed_spam: Option<SpamConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fail_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<SampleCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<KindPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<EstimatorChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<EtaConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a config file, or the `config` section of a run manifest.
    /// Relative paths inside are taken relative to the file and made absolute.
    pub fn load(path: &Path) -> pauliest::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if value.get("tool").and_then(|t| t.as_str()) == Some("pauliest") {
            if let Some(inner) = value.get_mut("config").map(serde_json::Value::take) {
                value = inner;
            }
        }
        let mut cfg: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        // Absolute, so a manifest written elsewhere still points at the same files.
        let base = std::path::absolute(path)?;
        let base = base.parent().unwrap_or(Path::new("/"));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(PiSource::File(p)) = cfg.pi.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.batch.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(&mut self, other: ExperimentConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            n,
            channel,
            pi,
            spam,
            assumed_spam,
            epsilon,
            fail_prob,
            m,
            seed,
            policy,
            batch,
            target,
            kind,
            eps_bias,
            precision,
            nu1,
            nu2,
            constants,
            grid,
            n_grid,
            eps_grid,
            delta_grid,
            out_dir
        );
    }

    pub fn spam_params(&self) -> pauliest::Result<Option<SpamParams>> {
        self.spam
            .map(|s| SpamParams::new(s.r_prep, s.r_meas))
            .transpose()
    }

    pub fn assumed_spam_params(&self) -> pauliest::Result<Option<SpamParams>> {
        self.assumed_spam
            .map(|s| SpamParams::new(s.r_prep, s.r_meas))
            .transpose()
    }
}

pub fn require<T>(value: Option<T>, name: &str) -> pauliest::Result<T> {
    value.ok_or_else(|| Error::InvalidParameter(format!("missing required setting `{name}`")))
}
