//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "dist": "x^2",
//!   "n_slots": 200,
//!   "epsilon": 0.05,
//!   "k": [1, 2],
//!   "loads": { "start": 0.1, "stop": 1.4, "step": 0.1 },
//!   "modes": ["simulate", "analyze"],
//!   "master_seed": 42
//! }
//! ```
//!
//! Unknown keys are rejected. See the README for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::de::{DeOptions, Perspective, DEFAULT_DE_ITERS};
use crate::dist::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::frame::{ScenarioConfig, DEFAULT_MAX_SIC_ITERS};
use crate::harness::{Mode, SimOptions, SweepSpec};
use crate::power::build_power_config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistConfig {
    Text(String),
    Terms(Vec<DistTerm>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistTerm {
    pub degree: u32,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadsConfig {
    List(Vec<f64>),
    Range(LoadRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeConfig {
    #[serde(default = "default_de_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub perspective: Perspective,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_DE_ITERS,
            tol: 0.0,
            perspective: Perspective::Node,
        }
    }
}

fn default_de_iters() -> usize {
    DEFAULT_DE_ITERS
}
fn default_unit() -> f64 {
    1.0
}
fn default_sic_iters() -> usize {
    DEFAULT_MAX_SIC_ITERS
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Simulate, Mode::Analyze]
}

/// The on-disk config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dist: DistConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_id: Option<String>,
    pub n_slots: usize,
    pub epsilon: f64,
    pub k: Vec<usize>,
    pub loads: LoadsConfig,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default = "default_unit")]
    pub peak_power: f64,
    #[serde(default = "default_unit")]
    pub slot_duration: f64,
    #[serde(default = "default_sic_iters")]
    pub max_sic_iters: usize,
    #[serde(default)]
    pub de: DeConfig,
}

/// A validated config, ready to run.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub spec: SweepSpec,
    pub options: SimOptions,
    pub master_seed: Option<u64>,
}

impl LoadedConfig {
    /// Overrides the master seed (the `--seed` flag).
    pub fn set_seed(&mut self, seed: u64) {
        self.master_seed = Some(seed);
        self.spec.base.master_seed = seed;
    }

    /// SHA-256 over the canonical JSON form: polynomial text for the
    /// distribution, an explicit load list, every default filled in, and the
    /// effective seed.
    pub fn config_hash(&self) -> String {
        let mut canon = self.file.clone();
        canon.dist = DistConfig::Text(self.spec.base.dist.to_string());
        canon.loads = LoadsConfig::List(self.spec.loads.clone());
        canon.master_seed = self.master_seed;
        let mut modes = canon.modes.clone();
        modes.sort();
        modes.dedup();
        canon.modes = modes;
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn expand_range(r: &LoadRange) -> Result<Vec<f64>> {
    if !(r.step.is_finite() && r.step > 0.0) {
        return Err(invalid("loads.step", "must be > 0"));
    }
    if !(r.start.is_finite() && r.stop.is_finite()) || r.stop < r.start {
        return Err(invalid("loads", "stop must not be below start"));
    }
    let count = ((r.stop - r.start) / r.step + 1e-9).floor() as usize + 1;
    // snap to 12 decimals so 0.1 + 2*0.1 prints as 0.3
    Ok((0..count)
        .map(|i| ((r.start + i as f64 * r.step) * 1e12).round() / 1e12)
        .collect())
}

fn build_dist(cfg: &DistConfig) -> Result<DegreeDistribution> {
    match cfg {
        DistConfig::Text(text) => DegreeDistribution::parse(text),
        DistConfig::Terms(terms) => {
            DegreeDistribution::from_terms(terms.iter().map(|t| (t.degree, t.prob)))
        }
    }
}

impl ConfigFile {
    pub fn into_loaded(self) -> Result<LoadedConfig> {
        let dist = build_dist(&self.dist)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(
                "epsilon",
                format!("epsilon out of [0,1]: {}", self.epsilon),
            ));
        }
        if self.n_slots == 0 {
            return Err(invalid("n_slots", "must be positive"));
        }
        if !(self.slot_duration.is_finite() && self.slot_duration > 0.0) {
            return Err(invalid("slot_duration", "must be > 0"));
        }
        if self.de.max_iters == 0 {
            return Err(invalid("de.max_iters", "must be at least 1"));
        }
        if self.de.tol.is_nan() || self.de.tol < 0.0 {
            return Err(invalid("de.tol", "must be >= 0"));
        }
        let power = build_power_config(self.peak_power)?;
        let loads = match &self.loads {
            LoadsConfig::List(l) => l.clone(),
            LoadsConfig::Range(r) => expand_range(r)?,
        };
        let seed = self.master_seed;
        let base = ScenarioConfig {
            n_slots: self.n_slots,
            load: loads.first().copied().unwrap_or(1.0),
            epsilon: self.epsilon,
            n_satellites: self.k.iter().copied().max().unwrap_or(1),
            dist,
            power,
            max_sic_iters: self.max_sic_iters,
            n_frames: self.n_frames.unwrap_or(1),
            master_seed: seed.unwrap_or(0),
        };
        let spec = SweepSpec {
            base,
            loads,
            modes: self.modes.clone(),
            k_values: self.k.clone(),
            n_frames: self.n_frames,
        };
        spec.validate()?;
        let options = SimOptions {
            de: DeOptions {
                max_iters: self.de.max_iters,
                tol: self.de.tol,
                perspective: self.de.perspective,
            },
            slot_duration: self.slot_duration,
            dist_label: self.dist_id.clone(),
            ..SimOptions::default()
        };
        Ok(LoadedConfig {
            file: self,
            spec,
            options,
            master_seed: seed,
        })
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_loaded()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
