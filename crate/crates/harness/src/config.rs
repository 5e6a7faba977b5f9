//! Experiment configuration, presets, and strategy construction.

use crate::{HarnessError, Result};
use cwss_core::l2o::{L2OStrategy, MetaConfig};
use cwss_core::strategies::{FixedStep, Hgd, HgdConfig, LineSearch, StepStrategy};
use cwss_core::{L2OModel64, StopCriteria64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

pub const FAMILIES: [&str; 3] = ["least_squares", "logistic_regression", "log_sum_exp"];

/// Meta-training settings (JSON view of [`MetaConfig`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaSettings {
    pub adam_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch: usize,
    pub total_updates: usize,
    pub inner_k: usize,
    pub lambda_reg: f64,
    pub grad_clip: f64,
    pub hd: usize,
    pub hm: usize,
}

impl Default for MetaSettings {
    fn default() -> Self {
        let m = MetaConfig::<f64>::default();
        Self {
            adam_lr: m.adam_lr,
            adam_beta1: m.adam_beta1,
            adam_beta2: m.adam_beta2,
            adam_eps: m.adam_eps,
            batch: m.batch,
            total_updates: m.total_updates,
            inner_k: m.inner_k,
            lambda_reg: m.lambda_reg,
            grad_clip: m.grad_clip,
            hd: m.hd,
            hm: m.hm,
        }
    }
}

impl MetaSettings {
    pub fn to_core(self) -> MetaConfig<f64> {
        MetaConfig {
            adam_lr: self.adam_lr,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            batch: self.batch,
            total_updates: self.total_updates,
            inner_k: self.inner_k,
            lambda_reg: self.lambda_reg,
            grad_clip: self.grad_clip,
            hd: self.hd,
            hm: self.hm,
        }
    }
}

fn default_rho() -> f64 {
    1e-2
}

fn default_hgd_eta() -> f64 {
    1e-2
}

fn default_hgd_inner_steps() -> usize {
    20
}

/// Full experiment description; serialized as the `--config` JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: String,
    /// Rows / terms in the data.
    pub m: usize,
    /// Dimension of the optimization variable.
    pub n: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub strategies: Vec<String>,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub meta: MetaSettings,
    #[serde(default = "default_hgd_eta")]
    pub hgd_eta: f64,
    #[serde(default = "default_hgd_inner_steps")]
    pub hgd_inner_steps: usize,
}

impl ExperimentConfig {
    /// Desk-scale preset: paper shape ratios at sizes that keep a full
    /// generate/train/bench cycle under minutes.
    pub fn desk(family: &str) -> Result<Self> {
        let (m, n) = match family {
            "least_squares" => (60, 120),
            "logistic_regression" => (120, 60),
            "log_sum_exp" => (120, 50),
            other => {
                return Err(HarnessError::Validation(format!(
                    "family: unknown family {other:?} (expected one of {FAMILIES:?})"
                )))
            }
        };
        Ok(Self {
            family: family.to_string(),
            m,
            n,
            rho: default_rho(),
            n_train: 2000,
            n_test: 128,
            strategies: vec!["ls".into(), "hgd".into(), "l2o".into()],
            grad_tol: 1e-10,
            max_iters: 500,
            seed: 42,
            meta: MetaSettings::default(),
            hgd_eta: default_hgd_eta(),
            hgd_inner_steps: default_hgd_inner_steps(),
        })
    }

    /// Full-scale preset; long-running, provided for completeness.
    pub fn paper(family: &str) -> Result<Self> {
        let mut cfg = Self::desk(family)?;
        let (m, n) = match family {
            "least_squares" => (250, 500),
            "logistic_regression" => (500, 250),
            "log_sum_exp" => (500, 100),
            _ => unreachable!("desk() validated the family"),
        };
        cfg.m = m;
        cfg.n = n;
        cfg.n_train = 32_000;
        cfg.n_test = 1024;
        Ok(cfg)
    }

    pub fn preset(name: &str, family: &str) -> Result<Self> {
        match name {
            "desk" => Self::desk(family),
            "paper" => Self::paper(family),
            other => Err(HarnessError::Validation(format!(
                "preset: unknown preset {other:?} (expected desk or paper)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(HarnessError::Validation(msg));
        if !FAMILIES.contains(&self.family.as_str()) {
            return err(format!("family: unknown family {:?}", self.family));
        }
        if self.m == 0 || self.n == 0 {
            return err(format!("m/n: must be >= 1, got {}x{}", self.m, self.n));
        }
        if self.family == "least_squares" && self.m * self.n < 10 {
            return err("m/n: least squares needs m*n >= 10".into());
        }
        if self.n_test == 0 {
            return err("n_test: must be >= 1".into());
        }
        if self.strategies.is_empty() {
            return err("strategies: at least one strategy is required".into());
        }
        for s in &self.strategies {
            parse_strategy_name(s)?;
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return err(format!("grad_tol: must be positive, got {}", self.grad_tol));
        }
        if self.max_iters == 0 {
            return err("max_iters: must be >= 1".into());
        }
        if self.family == "logistic_regression" && (!self.rho.is_finite() || self.rho <= 0.0) {
            return err(format!("rho: must be positive, got {}", self.rho));
        }
        if !self.hgd_eta.is_finite() || self.hgd_eta <= 0.0 || self.hgd_inner_steps == 0 {
            return err("hgd: eta must be positive and inner_steps >= 1".into());
        }
        self.meta
            .to_core()
            .validate()
            .map_err(|e| HarnessError::Validation(format!("meta: {e}")))?;
        Ok(())
    }

    pub fn stop(&self) -> StopCriteria64 {
        StopCriteria64 {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// SHA-256 over the canonical JSON encoding.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("{:x}", hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    LineSearch,
    Hgd,
    L2o,
    Fixed(f64),
}

/// Parse `ls | hgd | l2o | fixed:<alpha>`.
pub fn parse_strategy_name(name: &str) -> Result<StrategyKind> {
    match name {
        "ls" => Ok(StrategyKind::LineSearch),
        "hgd" => Ok(StrategyKind::Hgd),
        "l2o" => Ok(StrategyKind::L2o),
        other => {
            if let Some(alpha) = other.strip_prefix("fixed:") {
                let alpha: f64 = alpha.parse().map_err(|_| {
                    HarnessError::Validation(format!("strategies: bad fixed step in {other:?}"))
                })?;
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(StrategyKind::Fixed(alpha))
                } else {
                    Err(HarnessError::Validation(format!(
                        "strategies: fixed step must be positive and finite, got {alpha}"
                    )))
                }
            } else {
                Err(HarnessError::Validation(format!(
                    "strategies: unknown strategy {other:?}"
                )))
            }
        }
    }
}

/// Instantiate a fresh strategy object for one run.
pub fn build_strategy(
    name: &str,
    cfg: &ExperimentConfig,
    model: Option<&Arc<L2OModel64>>,
) -> Result<Box<dyn StepStrategy<f64>>> {
    Ok(match parse_strategy_name(name)? {
        StrategyKind::LineSearch => Box::new(LineSearch::default()),
        StrategyKind::Hgd => Box::new(Hgd::new(HgdConfig {
            eta: cfg.hgd_eta,
            inner_steps: cfg.hgd_inner_steps,
            clip_min: 1e-8,
        })),
        StrategyKind::L2o => {
            let model = model.ok_or_else(|| {
                HarnessError::Validation(
                    "strategy l2o requires a trained checkpoint (run `cwss train` first)".into(),
                )
            })?;
            Box::new(L2OStrategy::new(Arc::clone(model)))
        }
        StrategyKind::Fixed(alpha) => Box::new(FixedStep::new(alpha)),
    })
}
