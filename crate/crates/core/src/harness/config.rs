use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physical::RoundingMode;
use crate::policy::DEFAULT_MATCHING_EXACT_LIMIT;
use crate::routing::DEFAULT_STEINER_EXACT_LIMIT;
use crate::topology::{validate_topology, LinkStateProcess, RawLinkProcess, RawTopology, Topology};
use crate::traffic::{validate_classes, RawClass, TrafficClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Simulate,
    Dual,
    Correspondence,
    Sweep,
}

/// One V or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VSetting {
    One(f64),
    Many(Vec<f64>),
}

impl Default for VSetting {
    fn default() -> Self {
        VSetting::One(10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default)]
    pub v: VSetting,
    #[serde(default = "default_matching_limit")]
    pub matching_exact_limit: usize,
    #[serde(default = "default_steiner_limit")]
    pub steiner_exact_limit: usize,
}

fn default_matching_limit() -> usize {
    DEFAULT_MATCHING_EXACT_LIMIT
}

fn default_steiner_limit() -> usize {
    DEFAULT_STEINER_EXACT_LIMIT
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            v: VSetting::default(),
            matching_exact_limit: DEFAULT_MATCHING_EXACT_LIMIT,
            steiner_exact_limit: DEFAULT_STEINER_EXACT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub rounding: RoundingMode,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_slots() -> u64 {
    10_000
}

fn default_theta() -> f64 {
    1.0
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            slots: default_slots(),
            seed: 0,
            theta: default_theta(),
            rounding: RoundingMode::default(),
            mode: Mode::default(),
            out: None,
        }
    }
}

/// The configuration document as written in TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub topology: RawTopology,
    #[serde(default)]
    pub links: RawLinkProcess,
    pub classes: Vec<RawClass>,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Toml,
    Json,
}

impl DocumentFormat {
    /// JSON for `.json` files, TOML otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DocumentFormat::Json,
            _ => DocumentFormat::Toml,
        }
    }
}

pub fn parse_document(text: &str, format: DocumentFormat, origin: &str) -> Result<ConfigDocument> {
    let parsed = match format {
        DocumentFormat::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        DocumentFormat::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|message| Error::Parse {
        path: origin.to_string(),
        message,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc = parse_document(&text, DocumentFormat::from_path(path), &path.display().to_string())?;
    ExperimentConfig::from_document(&doc)
}

/// A validated, ready-to-run experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: Topology,
    raw_links: RawLinkProcess,
    pub links: LinkStateProcess,
    pub classes: Vec<TrafficClass>,
    /// First entry drives single runs; all of them drive sweeps.
    pub v_values: Vec<f64>,
    pub slots: u64,
    pub seed: u64,
    pub theta: f64,
    pub rounding: RoundingMode,
    pub matching_exact_limit: usize,
    pub steiner_exact_limit: usize,
    pub mode: Mode,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_document(doc: &ConfigDocument) -> Result<Self> {
        let topology = validate_topology(&doc.topology)?;
        let classes = validate_classes(&doc.classes, &topology)?;
        let v_values = match &doc.policy.v {
            VSetting::One(v) => vec![*v],
            VSetting::Many(vs) => vs.clone(),
        };
        if v_values.is_empty() {
            return Err(Error::Config("policy.v lists no values".into()));
        }
        if let Some(v) = v_values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("V must be positive, got {v}")));
        }
        let run = &doc.run;
        if run.slots == 0 {
            return Err(Error::Config("run.slots must be at least 1".into()));
        }
        if !(run.theta > 0.0 && run.theta.is_finite()) {
            return Err(Error::Config(format!("theta must be positive, got {}", run.theta)));
        }
        let links = link_process(&doc.links, topology.edge_count(), run.seed)?;
        Ok(ExperimentConfig {
            name: doc.name.clone().unwrap_or_else(|| "unnamed".into()),
            topology,
            raw_links: doc.links.clone(),
            links,
            classes,
            v_values,
            slots: run.slots,
            seed: run.seed,
            theta: run.theta,
            rounding: run.rounding,
            matching_exact_limit: doc.policy.matching_exact_limit,
            steiner_exact_limit: doc.policy.steiner_exact_limit,
            mode: run.mode,
            out: run.out.clone(),
        })
    }

    pub fn v(&self) -> f64 {
        self.v_values[0]
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v_values = vec![v];
        self
    }

    pub fn with_v_values(mut self, vs: Vec<f64>) -> Self {
        self.v_values = vs;
        self
    }

    pub fn with_slots(mut self, slots: u64) -> Self {
        self.slots = slots;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Reseeds the link process and the packet rounding stream.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.links =
            link_process(&self.raw_links, self.topology.edge_count(), seed).expect("link process already validated");
        self
    }

    /// Checks the run-time invariants that builder methods can break.
    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        if self.v_values.is_empty() || self.v_values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("V values must be positive: {:?}", self.v_values)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Config(format!("theta must be positive, got {}", self.theta)));
        }
        Ok(())
    }
}

/// The link process seed mixes the run seed with the one in `[links]`.
fn link_process(raw: &RawLinkProcess, edge_count: usize, run_seed: u64) -> Result<LinkStateProcess> {
    let mut raw = raw.clone();
    raw.seed ^= run_seed;
    LinkStateProcess::from_raw(&raw, edge_count)
}
