//! Dataset lifecycle: deterministic instance generation, JSON files on disk,
//! and the manifest tying them to a config hash.

use crate::config::{config_hash, ExperimentConfig};
use crate::seeds::SeedSplitter;
use crate::{HarnessError, Result};
use cwss_core::problems::{problem_from_json_str, problem_to_json_string};
use cwss_core::Problem64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const DATASET_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub train_files: Vec<String>,
    pub test_files: Vec<String>,
}

/// Per-instance seed: the `data` stream seed plus the instance index.
pub fn instance_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    SeedSplitter::new(cfg.seed)
        .seed("data")
        .wrapping_add(index as u64)
}

/// Generate instance `index` (train indices precede test indices).
pub fn generate_instance(cfg: &ExperimentConfig, index: usize) -> Result<Problem64> {
    let seed = instance_seed(cfg, index);
    let p = match cfg.family.as_str() {
        "least_squares" => Problem64::gen_least_squares(cfg.m, cfg.n, seed),
        "logistic_regression" => Problem64::gen_logistic(cfg.m, cfg.n, cfg.rho, seed),
        "log_sum_exp" => Problem64::gen_logsumexp(cfg.m, cfg.n, seed),
        other => {
            return Err(HarnessError::Validation(format!("unknown family {other:?}")))
        }
    }?;
    Ok(p)
}

/// In-memory train/test split, identical to what `write_dataset` stores.
pub fn generate_split(cfg: &ExperimentConfig) -> Result<(Vec<Problem64>, Vec<Problem64>)> {
    let train = (0..cfg.n_train)
        .map(|i| generate_instance(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let test = (cfg.n_train..cfg.n_train + cfg.n_test)
        .map(|i| generate_instance(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok((train, test))
}

fn instance_file(split: &str, i: usize) -> String {
    format!("{split}/instance_{i:05}.json")
}

/// Write all instance files plus the manifest under `dir`.
pub fn write_dataset(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(dir.join("train"))?;
    fs::create_dir_all(dir.join("test"))?;
    let mut train_files = Vec::with_capacity(cfg.n_train);
    let mut test_files = Vec::with_capacity(cfg.n_test);
    for i in 0..cfg.n_train + cfg.n_test {
        let p = generate_instance(cfg, i)?;
        let rel = if i < cfg.n_train {
            instance_file("train", i)
        } else {
            instance_file("test", i - cfg.n_train)
        };
        let json = problem_to_json_string(&p)?;
        fs::write(dir.join(&rel), json)?;
        if i < cfg.n_train {
            train_files.push(rel);
        } else {
            test_files.push(rel);
        }
    }
    let manifest = Manifest {
        schema: DATASET_SCHEMA,
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        train_files,
        test_files,
    };
    fs::write(
        dir.join(MANIFEST_NAME),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| {
        HarnessError::Validation(format!("cannot read {}: {e}", path.display()))
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Validation(format!("bad manifest: {e}")))?;
    if manifest.schema != DATASET_SCHEMA {
        return Err(HarnessError::Validation(format!(
            "dataset schema {} unsupported",
            manifest.schema
        )));
    }
    if config_hash(&manifest.config) != manifest.config_hash {
        return Err(HarnessError::Validation(
            "manifest config hash does not match its config".into(),
        ));
    }
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Load one split from disk; errors name the offending file.
pub fn load_problems(dir: &Path, manifest: &Manifest, split: Split) -> Result<Vec<Problem64>> {
    let files = match split {
        Split::Train => &manifest.train_files,
        Split::Test => &manifest.test_files,
    };
    if files.is_empty() {
        return Err(HarnessError::Validation("no instances".into()));
    }
    let mut out = Vec::with_capacity(files.len());
    for rel in files {
        let path = dir.join(rel);
        let text = fs::read_to_string(&path)
            .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
        let p = problem_from_json_str::<f64>(&text)
            .map_err(|e| HarnessError::Property(format!("{}: {e}", path.display())))?;
        out.push(p);
    }
    Ok(out)
}
