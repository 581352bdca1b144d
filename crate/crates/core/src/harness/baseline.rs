use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::net::{
    evaluate_with, train_few_epochs, DropoutSpec, LayerSpec, Network, Shape, TrainConfig,
};
use crate::StreamRng;

/// Columns of `summary.csv` written by `train`.
pub const BASELINE_COLUMNS: &str =
    "schema_version,seed,variant,retain,epochs,final_loss,train_accuracy,\
validation_accuracy,test_accuracy,param_count,param_steps,diverged,wall_ms";
pub const BASELINE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub variant: &'static str,
    pub retain: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub param_count: usize,
    pub param_steps: u64,
    pub diverged: bool,
    pub wall_ms: u64,
}

fn baseline_net(cfg: &ExperimentConfig, input: Shape, classes: usize) -> Result<Network> {
    let mut specs = Vec::new();
    let mut width = input.len();
    if matches!(input, Shape::Image { .. }) {
        specs.push(LayerSpec::Flatten);
    }
    for &h in &cfg.baseline.hidden {
        specs.push(LayerSpec::dense(width, h, cfg.baseline.activation));
        width = h;
    }
    specs.push(LayerSpec::dense(
        width,
        classes,
        crate::net::Activation::Linear,
    ));
    Network::new(
        input,
        &specs,
        &mut StreamRng::seed_from_u64(cfg.evolution.seed),
    )
}

/// Trains one fixed network twice from the same initial weights: without
/// dropout and with `baseline.retain`. Writes `summary.csv` into `out`.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<BaselineRow>> {
    cfg.validate()?;
    let splits = cfg.splits()?;
    let net = baseline_net(cfg, splits.train.input_shape(), splits.train.classes())?;
    let batches = splits.train.len().div_ceil(cfg.evolution.train.batch_size) as u64;
    let variants = [
        ("no_dropout", DropoutSpec::none()),
        ("dropout", DropoutSpec::uniform(cfg.baseline.retain)?),
    ];
    let mut rows = Vec::new();
    for (variant, dropout) in variants {
        let started = Instant::now();
        let train = TrainConfig {
            epochs: cfg.baseline.epochs,
            dropout: dropout.clone(),
            seed: cfg.evolution.seed,
            ..cfg.evolution.train.clone()
        };
        let outcome = train_few_epochs(&net, &splits.train, &train)?;
        let score = |d: &crate::data::Dataset| -> Result<f64> {
            if d.is_empty() {
                Ok(f64::NAN)
            } else {
                evaluate_with(&outcome.net, d, &dropout)
            }
        };
        rows.push(BaselineRow {
            variant,
            retain: dropout.retain,
            final_loss: outcome.history.last().map_or(f64::NAN, |h| h.loss),
            train_accuracy: score(&splits.train)?,
            validation_accuracy: score(&splits.validation)?,
            test_accuracy: score(&splits.test)?,
            param_count: outcome.net.param_count(),
            param_steps: net.param_count() as u64 * batches * outcome.history.len() as u64,
            diverged: outcome.diverged,
            wall_ms: started.elapsed().as_millis() as u64,
        });
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut text = String::from(BASELINE_COLUMNS);
    text.push('\n');
    for r in &rows {
        writeln!(
            text,
            "{BASELINE_SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.evolution.seed,
            r.variant,
            r.retain,
            cfg.baseline.epochs,
            r.final_loss,
            r.train_accuracy,
            r.validation_accuracy,
            r.test_accuracy,
            r.param_count,
            r.param_steps,
            r.diverged,
            r.wall_ms
        )
        .expect("string write");
    }
    let path = out.join("summary.csv");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TaskConfig;

    #[test]
    fn xor_baseline_learns() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            task: TaskConfig::Xor,
            ..ExperimentConfig::default()
        };
        cfg.baseline.hidden = vec![8];
        cfg.baseline.epochs = 400;
        cfg.evolution.train.batch_size = 4;
        cfg.evolution.train.learning_rate = 0.5;
        let rows = run_train(&cfg, dir.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].train_accuracy, 1.0);
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
