//! Experiment configuration: JSON schema, per-kind defaults, validation,
//! and the canonical hash that ties every artifact to its config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::transformer::TrainOrder;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Reversal3,
    Cot3,
    FourToken,
    Bilinear,
    LemmaSuite,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Reversal3 => "reversal3",
            ExperimentKind::Cot3 => "cot3",
            ExperimentKind::FourToken => "four_token",
            ExperimentKind::Bilinear => "bilinear",
            ExperimentKind::LemmaSuite => "lemma_suite",
        }
    }
}

/// On-disk config: only `kind` and `seed` are mandatory; everything else
/// falls back to the kind's defaults. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub schema: Option<u32>,
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<TrainOrder>,
    /// Number of bilinear pairs `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    /// Embedding dimension `d` for the bilinear model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Stop the bilinear flow once the training loss falls to this fraction
    /// of its initial value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_loss_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Fully resolved config: every field concrete. This is what gets hashed,
/// snapshotted into the run directory, and replayed for reproduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub m: usize,
    pub n_train: usize,
    pub n_test1: usize,
    pub n_test2: usize,
    pub n_test: usize,
    pub eta_y: f64,
    pub eta_z: f64,
    pub steps: usize,
    pub record_every: usize,
    pub order: TrainOrder,
    pub n_pairs: usize,
    pub dim: usize,
    pub sigma: f64,
    pub dt: f64,
    pub target_loss_frac: f64,
}

impl ExperimentConfig {
    pub fn minimal(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            schema: Some(CONFIG_SCHEMA),
            ..Default::default()
        }
    }

    /// Fill defaults and validate ranges and capacity constraints.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if let Some(s) = self.schema {
            if s != CONFIG_SCHEMA {
                return Err(Error::Config(format!(
                    "unsupported config schema {s} (expected {CONFIG_SCHEMA})"
                )));
            }
        }
        let kind = self.kind;
        // defaults per kind; the reversal/chain defaults mirror the
        // reference desk scale (vocabulary 800, 140 both-direction pairs,
        // 60 held-out items split evenly where applicable)
        let m = self.m.unwrap_or(match kind {
            ExperimentKind::Reversal3 | ExperimentKind::Cot3 => 800,
            ExperimentKind::FourToken => 100,
            ExperimentKind::Bilinear => 64,
            ExperimentKind::LemmaSuite => 0,
        });
        let n_train = self.n_train.unwrap_or(match kind {
            ExperimentKind::Reversal3 | ExperimentKind::Cot3 => 140,
            ExperimentKind::FourToken => 10,
            _ => 0,
        });
        let (n_test1, n_test2) = match kind {
            ExperimentKind::Reversal3 => {
                let t1 = self.n_test1.unwrap_or(30);
                let t2 = self.n_test2.unwrap_or(30);
                (t1, t2)
            }
            _ => (self.n_test1.unwrap_or(0), self.n_test2.unwrap_or(0)),
        };
        let n_test = self.n_test.unwrap_or(match kind {
            ExperimentKind::Cot3 => 60,
            ExperimentKind::FourToken => 5,
            _ => 0,
        });
        let eta_y = self.eta_y.unwrap_or(0.5);
        let eta_z = self.eta_z.unwrap_or(match kind {
            // attention rate is zero where its gradient vanishes anyway;
            // two-orders smaller than eta_y in the four-token regime
            ExperimentKind::FourToken => eta_y / 100.0,
            _ => 0.0,
        });
        let train_size = match kind {
            ExperimentKind::Reversal3 => 2 * n_train + n_test1 + n_test2,
            ExperimentKind::Cot3 => 3 * n_train + 2 * n_test,
            ExperimentKind::FourToken => 2 * n_train + n_test,
            _ => 0,
        };
        let steps = self.steps.unwrap_or_else(|| match kind {
            ExperimentKind::Bilinear => 40_000,
            ExperimentKind::LemmaSuite => 0,
            _ => 50 * train_size * ((m as f64).ln().ceil() as usize),
        });
        let record_every = self.record_every.unwrap_or(match kind {
            ExperimentKind::Bilinear => 50,
            ExperimentKind::LemmaSuite => 1,
            _ => train_size.max(1),
        });
        let resolved = ResolvedConfig {
            schema: CONFIG_SCHEMA,
            kind,
            seed: self.seed,
            m,
            n_train,
            n_test1,
            n_test2,
            n_test,
            eta_y,
            eta_z,
            steps,
            record_every: record_every.max(1),
            order: self.order.unwrap_or(TrainOrder::Cyclic),
            n_pairs: self.n_pairs.unwrap_or(8),
            dim: self.dim.unwrap_or(512),
            sigma: self.sigma.unwrap_or(1e-3),
            dt: self.dt.unwrap_or(0.1),
            target_loss_frac: self.target_loss_frac.unwrap_or(0.01),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

impl ResolvedConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta_y.is_finite() || self.eta_y < 0.0 {
            return Err(Error::Config(format!(
                "eta_y must be finite and non-negative, got {}",
                self.eta_y
            )));
        }
        if !self.eta_z.is_finite() || self.eta_z < 0.0 {
            return Err(Error::Config(format!(
                "eta_z must be finite and non-negative, got {}",
                self.eta_z
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::Config(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        if !(self.target_loss_frac > 0.0 && self.target_loss_frac < 1.0) {
            return Err(Error::Config(format!(
                "target_loss_frac must lie in (0, 1), got {}",
                self.target_loss_frac
            )));
        }
        let cap_ok = match self.kind {
            ExperimentKind::Reversal3 => {
                2 * (self.n_train + self.n_test1 + self.n_test2) + 2 <= self.m
            }
            ExperimentKind::Cot3 => 3 * (self.n_train + self.n_test) + 2 <= self.m,
            ExperimentKind::FourToken => 2 * (self.n_train + self.n_test) + 2 <= self.m,
            ExperimentKind::Bilinear => 2 * self.n_pairs <= self.m && self.dim >= 1,
            ExperimentKind::LemmaSuite => true,
        };
        if !cap_ok {
            return Err(Error::Config(format!(
                "dataset sizes exceed the vocabulary capacity for kind {}",
                self.kind.name()
            )));
        }
        if matches!(
            self.kind,
            ExperimentKind::Reversal3 | ExperimentKind::Cot3 | ExperimentKind::FourToken
        ) && self.steps == 0
        {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn short_hash(&self) -> String {
        self.hash()[..8].to_string()
    }
}

/// Parse a JSON config file, rejecting unknown keys; the serde error names
/// the offending key and lists the accepted ones.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)?;
    Ok(cfg)
}
