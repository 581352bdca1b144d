use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    gen_synthetic, gen_xor, load_idx, split_dataset, Dataset, SplitSpec, Splits, SyntheticKind,
};
use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::net::{Activation, DropoutSpec};

/// Which dataset to build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskConfig {
    /// The four XOR points; every split is the whole set.
    Xor,
    Moons {
        n: usize,
        noise: f64,
        /// Defaults to the master seed.
        seed: Option<u64>,
    },
    Spirals {
        n: usize,
        noise: f64,
        classes: usize,
        seed: Option<u64>,
    },
    Blobs {
        n: usize,
        noise: f64,
        classes: usize,
        seed: Option<u64>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// 0 keeps every sample.
        #[serde(default)]
        limit: usize,
    },
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig::Moons {
            n: 400,
            noise: 0.15,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    /// Defaults to the master seed.
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let d = SplitSpec::default();
        SplitConfig {
            train: d.train,
            validation: d.validation,
            test: d.test,
            seed: None,
        }
    }
}

/// Fixed-architecture network used by `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    /// Retain probability of the dropout variant.
    pub retain: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            hidden: vec![16, 16],
            activation: Activation::Tanh,
            epochs: 40,
            retain: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub seeds: Vec<u64>,
    /// Retain probability used by the dropout arms.
    pub retain: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            seeds: vec![0, 1, 2, 3, 4],
            retain: 0.8,
        }
    }
}

/// Everything one experiment needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskConfig,
    pub split: SplitConfig,
    pub evolution: EvolutionConfig,
    pub baseline: BaselineConfig,
    pub compare: CompareConfig,
    pub out: PathBuf,
    /// Default log filter when `NEURODARWIN_LOG` is unset.
    pub verbosity: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskConfig::default(),
            split: SplitConfig::default(),
            evolution: EvolutionConfig::default(),
            baseline: BaselineConfig::default(),
            compare: CompareConfig::default(),
            out: PathBuf::from("runs/latest"),
            verbosity: "info".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.split.train,
            validation: self.split.validation,
            test: self.split.test,
            seed: self.split.seed.unwrap_or(self.evolution.seed),
        }
    }

    /// Checks everything that can be checked without touching data files.
    pub fn validate(&self) -> Result<()> {
        self.evolution.validate()?;
        self.split_spec()
            .validate()
            .map_err(|e| Error::Config(format!("split: {e}")))?;
        match &self.task {
            TaskConfig::Xor | TaskConfig::Idx { .. } => {}
            TaskConfig::Moons { n, noise, .. } => check_synthetic(*n, *noise, 2)?,
            TaskConfig::Spirals {
                n, noise, classes, ..
            }
            | TaskConfig::Blobs {
                n, noise, classes, ..
            } => check_synthetic(*n, *noise, *classes)?,
        }
        if self.baseline.hidden.contains(&0) {
            return Err(Error::Config("baseline.hidden widths must be >= 1".into()));
        }
        DropoutSpec::uniform(self.baseline.retain)
            .map_err(|e| Error::Config(format!("baseline.retain: {e}")))?;
        DropoutSpec::uniform(self.compare.retain)
            .map_err(|e| Error::Config(format!("compare.retain: {e}")))?;
        Ok(())
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let master = self.evolution.seed;
        match &self.task {
            TaskConfig::Xor => Ok(gen_xor()),
            TaskConfig::Moons { n, noise, seed } => {
                gen_synthetic(SyntheticKind::Moons, *n, *noise, 2, seed.unwrap_or(master))
            }
            TaskConfig::Spirals {
                n,
                noise,
                classes,
                seed,
            } => gen_synthetic(
                SyntheticKind::Spirals,
                *n,
                *noise,
                *classes,
                seed.unwrap_or(master),
            ),
            TaskConfig::Blobs {
                n,
                noise,
                classes,
                seed,
            } => gen_synthetic(
                SyntheticKind::Blobs,
                *n,
                *noise,
                *classes,
                seed.unwrap_or(master),
            ),
            TaskConfig::Idx {
                images,
                labels,
                limit,
            } => {
                let limit = if *limit == 0 { usize::MAX } else { *limit };
                load_idx(images, labels, limit)
            }
        }
    }

    /// Builds the dataset, splits it and standardizes with train statistics.
    pub fn splits(&self) -> Result<Splits> {
        let data = self.dataset()?;
        let mut splits = match self.task {
            TaskConfig::Xor => Splits::whole(&data),
            _ => split_dataset(&data, &self.split_spec())?,
        };
        if !matches!(self.task, TaskConfig::Xor | TaskConfig::Idx { .. }) {
            splits.standardize();
        }
        Ok(splits)
    }
}

fn check_synthetic(n: usize, noise: f64, classes: usize) -> Result<()> {
    if classes < 2 || n < classes {
        return Err(Error::Config(format!(
            "need n >= classes >= 2, got n={n}, classes={classes}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{EvolutionMode, RemovalPolicy};

    #[test]
    fn sections_parse_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            out = "runs/x"
            [task]
            kind = "blobs"
            n = 90
            noise = 0.5
            classes = 3
            [evolution]
            population = 8
            mode = "1d"
            removal = "worst"
            [evolution.rewire]
            kill = 0.5
            [evolution.train]
            epochs = 2
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.evolution.population, 8);
        assert_eq!(cfg.evolution.mode, EvolutionMode::OneD);
        assert_eq!(cfg.evolution.removal, RemovalPolicy::Worst);
        assert_eq!(cfg.evolution.rewire.kill, 0.5);
        assert_eq!(
            cfg.evolution.rewire.birth,
            crate::rewire::RewireConfig::default().birth
        );
        assert_eq!(cfg.evolution.train.epochs, 2);
        assert_eq!(cfg.splits().unwrap().train.len(), 72);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(
            ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("[evolution]\npopulaton = 3"),
            Err(Error::Config(_))
        ));
        let mut cfg = ExperimentConfig::default();
        cfg.evolution.tournament = 99;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
