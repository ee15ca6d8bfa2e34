//! Experiment configuration: one JSON document, schema versioned.

use crate::error::{Result, SimError};
use crate::local_fn::LocalFunction;
use crate::model::ModelSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// The experiments the harness knows how to run.
pub const EXPERIMENTS: &[&str] = &[
    "verify-model",
    "stationarity",
    "whitenoise",
    "bg1",
    "bg2",
    "qv",
    "energy",
    "holder",
    "eoe",
    "gap",
    "she-compare",
    "ou-compare",
    "fm",
    "height",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub rate: LocalFunction,
    pub asymmetry: f64,
    pub scale: u32,
    pub density: f64,
    /// Ring size as a multiple of `scale` (the `--ring-mult` knob).
    #[serde(default = "default_ring_mult")]
    pub ring_mult: usize,
    pub horizon: f64,
}

fn default_ring_mult() -> usize {
    32
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.rate.clone(),
            self.asymmetry,
            self.scale,
            self.density,
            self.ring_mult * self.scale as usize,
            self.horizon,
        )
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Grids {
    #[serde(default)]
    pub ell: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub n: Vec<u32>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub m: Vec<f64>,
    #[serde(default)]
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpdeConfig {
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub l_mac: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub experiment: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub test_functions: Vec<String>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub spde: SpdeConfig,
    pub replicas: u64,
    pub master_seed: u64,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| SimError::Config(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(SimError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(SimError::Config(format!(
                "unknown experiment {:?}; known: {}",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        if self.replicas == 0 {
            return Err(SimError::Config("replicas must be positive".into()));
        }
        self.model.to_spec().map_err(|e| SimError::Config(e.to_string()))?;
        match self.experiment.as_str() {
            "ou-compare" if self.model.asymmetry != 0.0 => Err(SimError::Config(
                "ou-compare requires the symmetric model (asymmetry = 0)".into(),
            )),
            "she-compare" | "bg2" | "qv" | "energy" | "holder" | "fm"
                if self.model.asymmetry < 0.0
                    && (self.model.scale as f64) < self.model.asymmetry.powi(2) =>
            {
                Err(SimError::Config("asymmetry too negative for this scale".into()))
            }
            _ => Ok(()),
        }
    }

    /// Hash binding every number in the outputs to this exact configuration.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(experiment: &str) -> ExperimentConfig {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            experiment: experiment.into(),
            model: ModelConfig {
                rate: LocalFunction::constant(1.0),
                asymmetry: 1.0,
                scale: 4,
                density: 0.5,
                ring_mult: 32,
                horizon: 0.1,
            },
            test_functions: vec!["hermite:0".into()],
            grids: Grids::default(),
            spde: SpdeConfig::default(),
            replicas: 8,
            master_seed: 1,
        }
    }

    #[test]
    fn round_trip_and_hash_stability() {
        let cfg = minimal("whitenoise");
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn unknown_experiment_rejected() {
        let mut cfg = minimal("whitenoise");
        cfg.experiment = "mystery".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ou_compare_requires_symmetric_model() {
        let mut cfg = minimal("ou-compare");
        assert!(cfg.validate().is_err());
        cfg.model.asymmetry = 0.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn bad_ring_is_config_error() {
        let mut cfg = minimal("whitenoise");
        cfg.model.ring_mult = 0;
        assert!(cfg.validate().is_err());
    }
}
