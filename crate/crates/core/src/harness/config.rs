use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::baselines::BaselineKind;
use crate::counters::CounterKind;
use crate::error::{Error, Result};
use crate::eval::QueryClass;
use crate::hierarchy::PartitionTree;
use crate::stream::Domain;
use crate::synth::EngineConfig;

use super::generate::GeneratorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    PhdStream,
    Baseline(BaselineKind),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::PhdStream => f.write_str("phdstream"),
            Method::Baseline(b) => b.fmt(f),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "phdstream" {
            return Ok(Method::PhdStream);
        }
        s.parse().map(Method::Baseline).map_err(|_| {
            Error::Config(format!(
                "unknown method {s:?} (phdstream|baseline1|baseline2|baseline3)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    /// Event CSV; relative paths are taken from the config file's directory.
    Path(PathBuf),
    Generator(GeneratorSpec),
}

/// One experiment: every (seed, method) pair is run over the same stream.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: Option<InputSource>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub methods: Vec<Method>,
    #[serde_as(as = "DisplayFromStr")]
    pub counter: CounterKind,
    pub epsilon: f64,
    pub theta: f64,
    pub fanout: u32,
    pub max_depth: u32,
    /// Initialization time. Takes precedence over `t0_fraction`.
    pub t0: Option<u64>,
    /// Initialization time as a fraction of the horizon, rounded up.
    pub t0_fraction: Option<f64>,
    pub sensitivity: u32,
    pub seeds: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub query_classes: Vec<QueryClass>,
    pub eval_interval: u64,
    pub out_dir: PathBuf,
    /// Dump the synthetic points of every step under `out_dir/synthetic`.
    pub write_synthetic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            input: None,
            methods: vec![Method::PhdStream],
            counter: CounterKind::Simple,
            epsilon: 0.5,
            theta: 0.0,
            fanout: PartitionTree::DEFAULT_FANOUT,
            max_depth: PartitionTree::DEFAULT_MAX_DEPTH,
            t0: None,
            t0_fraction: None,
            sensitivity: 1,
            seeds: vec![0],
            query_classes: QueryClass::ALL.to_vec(),
            eval_interval: 10,
            out_dir: PathBuf::from("out"),
            write_synthetic: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))?;
        if let Some(InputSource::Path(p)) = &mut config.input {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input.is_none() {
            return bad("no input (path or generator) given".into());
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.query_classes.is_empty() {
            return bad("query_classes must not be empty".into());
        }
        if self.eval_interval == 0 {
            return bad("eval_interval must be >= 1".into());
        }
        if self.sensitivity == 0 {
            return bad("sensitivity must be >= 1".into());
        }
        if let Some(f) = self.t0_fraction {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("t0_fraction must lie in [0, 1], got {f}"));
            }
        }
        if self.methods.contains(&Method::Baseline(BaselineKind::InitThenCount)) && self.t0 == Some(0) {
            return bad("baseline3 needs an initialization time t0 > 0".into());
        }
        self.counter.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.engine_config(1, 0).map(|_| ())
    }

    /// Initialization time for a stream with the given horizon. 0 means no
    /// initialization and is only produced by an explicit `t0 = 0`.
    pub fn resolve_t0(&self, horizon: u64) -> u64 {
        match (self.t0, self.t0_fraction) {
            (Some(t0), _) => t0,
            (None, Some(f)) => ((f * horizon as f64).ceil() as u64).max(1),
            (None, None) => 1,
        }
    }

    pub fn engine_config(&self, t0: u64, seed: u64) -> Result<EngineConfig> {
        let tree = PartitionTree::new(Domain::unit(2), self.fanout, self.max_depth)
            .map_err(|e| Error::Config(e.to_string()))?;
        let config = EngineConfig {
            epsilon: self.epsilon,
            theta: self.theta,
            tree,
            counter_kind: self.counter,
            sensitivity: self.sensitivity,
            seed,
            init_time: t0.max(1),
        };
        config.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let c = ExperimentConfig::from_json(
            r#"{
                "input": {"generator": {"kind": "uniform_box", "n_points": 100, "batch_size": 10}},
                "methods": ["phdstream", "baseline3"],
                "counter": "block:8",
                "epsilon": 1.0,
                "t0_fraction": 0.1,
                "seeds": [1, 2],
                "query_classes": ["small"]
            }"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.methods, [Method::PhdStream, Method::Baseline(BaselineKind::InitThenCount)]);
        assert_eq!(c.counter, CounterKind::Block(8));
        assert_eq!(c.query_classes, [QueryClass::Small]);
        assert_eq!(c.resolve_t0(101), 11);
        assert_eq!(c.eval_interval, 10);
    }

    #[test]
    fn rejects_bad_values() {
        let base = r#""input": {"path": "x.csv"}"#;
        for extra in [
            r#""epsilon": 0"#,
            r#""seeds": []"#,
            r#""eval_interval": 0"#,
            r#""methods": ["baseline3"], "t0": 0"#,
            r#""counter": "block:0""#,
        ] {
            let c = ExperimentConfig::from_json(&format!("{{{base}, {extra}}}"));
            assert!(c.and_then(|c| c.validate()).is_err(), "{extra}");
        }
        assert!(ExperimentConfig::from_json(r#"{"methods": ["nope"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"epsilonn": 1}"#).is_err());
    }
}
