//! Training orchestration: model init, resumable checkpoints, training log.

use crate::config::ExperimentConfig;
use crate::seeds::SeedSplitter;
use crate::trace;
use crate::{HarnessError, Result};
use cwss_core::l2o::{
    checkpoint_from_json, checkpoint_to_json, train, AdamState, Checkpoint,
};
use cwss_core::{L2OModel64, Problem64};
use std::fs;
use std::path::{Path, PathBuf};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "training_log.csv";

/// Interval (in outer updates) between partial checkpoints.
pub const PARTIAL_EVERY: usize = 25;

pub struct TrainOutput {
    pub model: L2OModel64,
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
    pub updates_run: usize,
}

/// Freshly initialized model from the config's model-init stream.
pub fn init_model(cfg: &ExperimentConfig) -> L2OModel64 {
    let mut rng = SeedSplitter::new(cfg.seed).rng("model_init");
    L2OModel64::init(cfg.meta.hd, cfg.meta.hm, &mut rng)
}

/// Train (or resume) and write the checkpoint plus training-log CSV.
///
/// If `checkpoint_path` already holds a valid checkpoint for this config,
/// training resumes from its update counter; the random schedule is keyed by
/// update index, so a resumed run reproduces the uninterrupted one exactly.
pub fn train_l2o(
    cfg: &ExperimentConfig,
    train_problems: &[Problem64],
    out_dir: &Path,
    checkpoint_path: Option<PathBuf>,
) -> Result<TrainOutput> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let ck_path = checkpoint_path.unwrap_or_else(|| out_dir.join(CHECKPOINT_FILE));
    let log_path = out_dir.join(TRAIN_LOG_FILE);

    let meta = cfg.meta.to_core();
    let (mut model, mut adam, start_update, mut log_rows) = if ck_path.exists() {
        let text = fs::read_to_string(&ck_path)?;
        let ck: Checkpoint<f64> =
            checkpoint_from_json(&text).map_err(|e| HarnessError::Validation(e.to_string()))?;
        if ck.model.hd != cfg.meta.hd || ck.model.hm != cfg.meta.hm {
            return Err(HarnessError::Validation(format!(
                "checkpoint hidden sizes {}x{} do not match config {}x{}",
                ck.model.hd, ck.model.hm, cfg.meta.hd, cfg.meta.hm
            )));
        }
        let rows = if log_path.exists() {
            trace::parse_train_log(&fs::read_to_string(&log_path)?)?
                .into_iter()
                .filter(|(u, _, _)| *u < ck.update_count)
                .collect()
        } else {
            Vec::new()
        };
        (ck.model, ck.adam, ck.update_count, rows)
    } else {
        let model = init_model(cfg);
        let adam = AdamState::zeros(model.param_count());
        (model, adam, 0, Vec::new())
    };

    if start_update > meta.total_updates {
        return Err(HarnessError::Validation(format!(
            "checkpoint is at update {start_update}, beyond total_updates {}",
            meta.total_updates
        )));
    }
    let train_seed = SeedSplitter::new(cfg.seed).seed("train");
    let ck_path_cb = ck_path.clone();
    let report = train(
        &mut model,
        &mut adam,
        &meta,
        train_problems,
        train_seed,
        start_update,
        |update, m, a| {
            let done = update + 1;
            if done % PARTIAL_EVERY == 0 && done < meta.total_updates {
                if let Ok(json) = checkpoint_to_json(m, a, done) {
                    let _ = fs::write(&ck_path_cb, json);
                }
            }
        },
    )?;

    for entry in &report.log {
        log_rows.push((entry.update, entry.mean_meta_loss, entry.diverged));
    }
    fs::write(&log_path, trace::write_train_log(&log_rows))?;
    let json = checkpoint_to_json(&model, &adam, meta.total_updates)?;
    fs::write(&ck_path, json)?;
    Ok(TrainOutput {
        model,
        checkpoint_path: ck_path,
        log_path,
        updates_run: meta.total_updates - start_update,
    })
}

/// Load just the model from a checkpoint file.
pub fn load_model(path: &Path) -> Result<L2OModel64> {
    let text = fs::read_to_string(path).map_err(|e| {
        HarnessError::Validation(format!("cannot read checkpoint {}: {e}", path.display()))
    })?;
    let ck: Checkpoint<f64> =
        checkpoint_from_json(&text).map_err(|e| HarnessError::Validation(e.to_string()))?;
    Ok(ck.model)
}
