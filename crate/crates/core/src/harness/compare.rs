use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::run::{run_evolve, RunSummary};
use crate::error::{Error, Result};
use crate::evolution::EvolutionMode;
use crate::net::DropoutSpec;

pub const COMPARE_SCHEMA_VERSION: u32 = 1;

/// Columns of `compare.csv`.
pub const COMPARE_COLUMNS: &str =
    "schema_version,seed,arm,mode,dropout,status,best_fitness,champion_fitness,\
champion_param_count,test_accuracy,param_steps,wall_ms,split_checksum,delta_vs_1d";

/// Columns of `compare_pairs.csv`.
pub const PAIR_COLUMNS: &str = "schema_version,pair,seeds,positive,negative,zero,mean_delta,deltas";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arm {
    pub name: &'static str,
    pub mode: EvolutionMode,
    pub dropout: bool,
}

pub const ARMS: [Arm; 4] = [
    Arm {
        name: "1d",
        mode: EvolutionMode::OneD,
        dropout: false,
    },
    Arm {
        name: "2d",
        mode: EvolutionMode::TwoD,
        dropout: false,
    },
    Arm {
        name: "1d+dropout",
        mode: EvolutionMode::OneD,
        dropout: true,
    },
    Arm {
        name: "2d+dropout",
        mode: EvolutionMode::TwoD,
        dropout: true,
    },
];

/// `(minuend, subtrahend)` arm pairs whose per-seed best-fitness
/// differences are reported.
pub const PAIRS: [(&str, &str); 4] = [
    ("2d", "1d"),
    ("2d+dropout", "1d+dropout"),
    ("1d+dropout", "1d"),
    ("2d", "1d+dropout"),
];

#[derive(Clone, Debug)]
pub struct ArmResult {
    pub seed: u64,
    pub arm: Arm,
    /// `Err` holds the message of a failed arm.
    pub outcome: std::result::Result<RunSummary, String>,
}

impl ArmResult {
    pub fn best_fitness(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.result.best_fitness)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSummary {
    pub pair: String,
    /// `(seed, delta)` for seeds where both arms finished.
    pub deltas: Vec<(u64, f64)>,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl PairSummary {
    pub fn mean(&self) -> f64 {
        self.deltas.iter().map(|d| d.1).sum::<f64>() / self.deltas.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct CompareTable {
    pub arms: Vec<ArmResult>,
    pub pairs: Vec<PairSummary>,
}

impl CompareTable {
    pub fn get(&self, seed: u64, arm: &str) -> Option<&ArmResult> {
        self.arms
            .iter()
            .find(|a| a.seed == seed && a.arm.name == arm)
    }
}

/// Arm configuration for one seed.
pub fn arm_config(base: &ExperimentConfig, seed: u64, arm: Arm) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    cfg.evolution.seed = seed;
    cfg.evolution.mode = arm.mode;
    cfg.evolution.train.dropout = if arm.dropout {
        DropoutSpec::uniform(base.compare.retain)?
    } else {
        DropoutSpec::none()
    };
    Ok(cfg)
}

/// Runs the four arms for every seed with identical budgets, each into
/// `out/seed-<s>/<arm>/`, then writes `compare.csv` and
/// `compare_pairs.csv`. A failing arm is recorded, not fatal.
pub fn compare_modes(base: &ExperimentConfig, seeds: &[u64], out: &Path) -> Result<CompareTable> {
    if seeds.len() < 2 {
        return Err(Error::Config("compare needs at least two seeds".into()));
    }
    base.validate()?;
    let mut arms = Vec::with_capacity(seeds.len() * ARMS.len());
    for &seed in seeds {
        for arm in ARMS {
            let dir = out.join(format!("seed-{seed}")).join(arm.name);
            let outcome = arm_config(base, seed, arm)
                .and_then(|cfg| run_evolve(&cfg, &dir))
                .map_err(|e| e.to_string());
            match &outcome {
                Ok(s) => log::info!(
                    "seed {seed} {}: best {:.4}",
                    arm.name,
                    s.result.best_fitness
                ),
                Err(e) => log::warn!("seed {seed} {} failed: {e}", arm.name),
            }
            arms.push(ArmResult { seed, arm, outcome });
        }
    }
    let mut table = CompareTable {
        arms,
        pairs: Vec::new(),
    };
    for (a, b) in PAIRS {
        let mut deltas = Vec::new();
        for &seed in seeds {
            let fa = table.get(seed, a).and_then(ArmResult::best_fitness);
            let fb = table.get(seed, b).and_then(ArmResult::best_fitness);
            if let (Some(fa), Some(fb)) = (fa, fb) {
                deltas.push((seed, fa - fb));
            }
        }
        table.pairs.push(PairSummary {
            pair: format!("{a} - {b}"),
            positive: deltas.iter().filter(|d| d.1 > 0.0).count(),
            negative: deltas.iter().filter(|d| d.1 < 0.0).count(),
            zero: deltas.iter().filter(|d| d.1 == 0.0).count(),
            deltas,
        });
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join("compare.csv");
    std::fs::write(&path, compare_csv(&table)).map_err(|e| Error::io(&path, e))?;
    let path = out.join("compare_pairs.csv");
    std::fs::write(&path, pairs_csv(&table)).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn compare_csv(table: &CompareTable) -> String {
    let mut text = String::from(COMPARE_COLUMNS);
    text.push('\n');
    for r in &table.arms {
        let base = table.get(r.seed, "1d").and_then(ArmResult::best_fitness);
        let delta = r.best_fitness().zip(base).map(|(a, b)| a - b);
        let dropout = r.arm.dropout;
        match &r.outcome {
            Ok(s) => writeln!(
                text,
                "{COMPARE_SCHEMA_VERSION},{},{},{},{dropout},ok,{},{},{},{},{},{},{},{}",
                r.seed,
                r.arm.name,
                r.arm.mode,
                s.result.best_fitness,
                s.result.champion_fitness,
                s.result.champion_param_count,
                opt(s.result.test_accuracy),
                s.result.param_steps,
                s.wall_ms,
                s.dataset.split_checksum,
                opt(delta)
            ),
            Err(_) => writeln!(
                text,
                "{COMPARE_SCHEMA_VERSION},{},{},{},{dropout},failed,,,,,,,,",
                r.seed, r.arm.name, r.arm.mode
            ),
        }
        .expect("string write");
    }
    text
}

pub fn pairs_csv(table: &CompareTable) -> String {
    let mut text = String::from(PAIR_COLUMNS);
    text.push('\n');
    for p in &table.pairs {
        let deltas: Vec<String> = p.deltas.iter().map(|(s, d)| format!("{s}:{d}")).collect();
        writeln!(
            text,
            "{COMPARE_SCHEMA_VERSION},{},{},{},{},{},{},{}",
            p.pair,
            p.deltas.len(),
            p.positive,
            p.negative,
            p.zero,
            if p.deltas.is_empty() {
                String::new()
            } else {
                p.mean().to_string()
            },
            deltas.join(";")
        )
        .expect("string write");
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TaskConfig;

    #[test]
    fn two_seeds_four_arms() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            task: TaskConfig::Moons {
                n: 60,
                noise: 0.1,
                seed: None,
            },
            ..ExperimentConfig::default()
        };
        cfg.evolution.population = 3;
        cfg.evolution.tournament = 2;
        cfg.evolution.generations = 0;
        cfg.evolution.train.epochs = 1;
        let table = compare_modes(&cfg, &[5, 6], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
        assert_eq!(text.lines().count(), 9);
        for seed in [5, 6] {
            let sums: Vec<&str> = table
                .arms
                .iter()
                .filter(|a| a.seed == seed)
                .map(|a| a.outcome.as_ref().unwrap().dataset.split_checksum.as_str())
                .collect();
            assert!(sums.windows(2).all(|w| w[0] == w[1]));
        }
        // no generations: the two modes share founders exactly
        assert!(table.pairs[0].deltas.iter().all(|d| d.1 == 0.0));
        assert!(matches!(
            compare_modes(&cfg, &[1], dir.path()),
            Err(Error::Config(_))
        ));
    }
}
