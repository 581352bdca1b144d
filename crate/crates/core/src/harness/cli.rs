use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::baseline::{run_train, BASELINE_COLUMNS};
use super::compare::compare_modes;
use super::config::ExperimentConfig;
use super::genome::read_genome;
use super::run::{replay, resume_evolve, run_evolve, ReplayTarget};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionMode, RemovalPolicy};
use crate::net::LayerSpec;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    #[value(name = "1d")]
    OneD,
    #[value(name = "2d")]
    TwoD,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RemovalArg {
    Worst,
    Oldest,
}

#[derive(Debug, Parser)]
#[command(
    name = "neurodarwin",
    version,
    about = "Two-dimensional neuroevolution of small feedforward networks",
    after_help = "Verbosity: set NEURODARWIN_LOG (e.g. debug, info, warn). Flags override the config file."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    removal: Option<RemovalArg>,
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one evolution experiment.
    #[command(after_help = concat!(
        "Writes events.jsonl, champion.genome.json, config.toml, checkpoints/ and summary.csv with columns:\n  ",
        "schema_version,step,child_id,parents,fitness,diverged,param_count,param_steps,",
        "removed_id,best_fitness,mean_fitness,worst_fitness,best_id,best_param_count"
    ))]
    Evolve {
        /// Override the number of child-creation steps.
        #[arg(long, value_name = "N")]
        generations: Option<usize>,
        /// Continue the run in --out from its last checkpoint.
        #[arg(long)]
        resume: bool,
    },
    /// Train the fixed baseline network with and without dropout.
    #[command(after_help = concat!(
        "Writes summary.csv with columns:\n  ",
        "schema_version,seed,variant,retain,epochs,final_loss,train_accuracy,",
        "validation_accuracy,test_accuracy,param_count,param_steps,diverged,wall_ms"
    ))]
    Train,
    /// Paired 1d / 2d / 1d+dropout / 2d+dropout runs over matched seeds.
    #[command(after_help = concat!(
        "Writes compare.csv with columns:\n  ",
        "schema_version,seed,arm,mode,dropout,status,best_fitness,champion_fitness,",
        "champion_param_count,test_accuracy,param_steps,wall_ms,split_checksum,delta_vs_1d\n",
        "and compare_pairs.csv with columns:\n  ",
        "schema_version,pair,seeds,positive,negative,zero,mean_delta,deltas"
    ))]
    Compare {
        /// Comma-separated seeds (at least two).
        #[arg(long, value_delimiter = ',', value_name = "S,S,..")]
        seeds: Option<Vec<u64>>,
    },
    /// Print a genome's depth, widths and parameter count.
    Inspect {
        #[arg(value_name = "GENOME")]
        genome: PathBuf,
    },
    /// Rebuild individuals of a finished run from its log and check their fitness.
    Replay {
        /// Individual to rebuild (default: the run's champion).
        #[arg(long, value_name = "ID")]
        id: Option<u64>,
        /// Rebuild every individual in the log.
        #[arg(long, conflicts_with = "id")]
        all: bool,
    },
}

fn init_logging(default: &str) {
    let env = env_logger::Env::new().filter_or("NEURODARWIN_LOG", default);
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.evolution.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.evolution.mode = match m {
            ModeArg::OneD => EvolutionMode::OneD,
            ModeArg::TwoD => EvolutionMode::TwoD,
        };
    }
    if let Some(r) = cli.removal {
        cfg.evolution.removal = match r {
            RemovalArg::Worst => RemovalPolicy::Worst,
            RemovalArg::Oldest => RemovalPolicy::Oldest,
        };
    }
    if let Some(w) = cli.workers {
        cfg.evolution.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    match &cli.out {
        Some(o) => Ok(o.clone()),
        None => Ok(load_config(cli)?.out),
    }
}

fn inspect(path: &PathBuf) -> Result<()> {
    let g = read_genome(path)?;
    let net = &g.network;
    println!("id: {}", g.id);
    println!("parents: {:?}", g.parents);
    println!("depth: {}", net.depth());
    println!("widths: {:?}", net.widths());
    println!("param_count: {}", net.param_count());
    println!("alive_synapses: {}", net.alive_synapses());
    println!("learning_rate: {}", g.learning_rate);
    println!("input: {:?}", net.input_shape());
    for (i, l) in net.layers().iter().enumerate() {
        let desc = match l.spec {
            LayerSpec::Dense {
                in_dim,
                out_dim,
                activation,
            } => format!("dense {in_dim}->{out_dim} {activation:?}"),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                activation,
            } => format!("conv2d {in_channels}->{out_channels} k{kernel} {activation:?}"),
            LayerSpec::Flatten => "flatten".into(),
        };
        println!("  layer {i}: {desc}, {} params", l.param_count());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Evolve {
            generations,
            resume,
        } => {
            let summary = if *resume {
                init_logging("info");
                resume_evolve(&out_dir(cli)?)?
            } else {
                let mut cfg = load_config(cli)?;
                if let Some(g) = generations {
                    cfg.evolution.generations = *g;
                }
                init_logging(&cfg.verbosity);
                cfg.validate()?;
                run_evolve(&cfg, &cfg.out)?
            };
            let r = &summary.result;
            println!("out: {}", summary.out.display());
            println!("steps: {}", r.steps);
            println!("best_fitness: {}", r.best_fitness);
            println!(
                "champion: id {} fitness {} params {} widths {:?}",
                r.champion_id, r.champion_fitness, r.champion_param_count, r.champion_widths
            );
            if let Some(t) = r.test_accuracy {
                println!("test_accuracy: {t}");
            }
            println!("param_steps: {}", r.param_steps);
            Ok(())
        }
        Command::Train => {
            let cfg = load_config(cli)?;
            init_logging(&cfg.verbosity);
            let rows = run_train(&cfg, &cfg.out)?;
            println!("{BASELINE_COLUMNS}");
            for r in rows {
                println!(
                    "{}: train {:.4} validation {:.4} test {:.4} params {}{}",
                    r.variant,
                    r.train_accuracy,
                    r.validation_accuracy,
                    r.test_accuracy,
                    r.param_count,
                    if r.diverged { " (diverged)" } else { "" }
                );
            }
            Ok(())
        }
        Command::Compare { seeds } => {
            let cfg = load_config(cli)?;
            init_logging(&cfg.verbosity);
            let seeds = seeds.clone().unwrap_or_else(|| cfg.compare.seeds.clone());
            let table = compare_modes(&cfg, &seeds, &cfg.out)?;
            println!("wrote {}", cfg.out.join("compare.csv").display());
            println!(
                "{:<26} {:>5} {:>5} {:>5} {:>12}",
                "pair", "+", "-", "0", "mean delta"
            );
            for p in &table.pairs {
                let mean = if p.deltas.is_empty() {
                    f64::NAN
                } else {
                    p.mean()
                };
                println!(
                    "{:<26} {:>5} {:>5} {:>5} {:>12.6}",
                    p.pair, p.positive, p.negative, p.zero, mean
                );
            }
            let failed = table.arms.iter().filter(|a| a.outcome.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} arm(s) failed; see compare.csv");
            }
            Ok(())
        }
        Command::Inspect { genome } => inspect(genome),
        Command::Replay { id, all } => {
            init_logging("warn");
            let target = match (id, all) {
                (_, true) => ReplayTarget::All,
                (Some(id), false) => ReplayTarget::Id(*id),
                (None, false) => ReplayTarget::Champion,
            };
            let checks = replay(&out_dir(cli)?, target)?;
            if target != ReplayTarget::All {
                for c in &checks {
                    println!(
                        "id {}: fitness {} ({} params) matches",
                        c.id, c.replayed, c.param_count
                    );
                }
            }
            println!(
                "replayed {} individual(s); every fitness matches the log exactly",
                checks.len()
            );
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Entry point of the `neurodarwin` binary. Returns the process exit code:
/// 0 success, 1 configuration error, 2 runtime error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_cli(["neurodarwin", "frobnicate"]), 1);
        assert_eq!(run_cli(["neurodarwin", "evolve", "--mode", "3d"]), 1);
        assert_eq!(run_cli(["neurodarwin", "--help"]), 0);
    }

    #[test]
    fn missing_genome_is_runtime_error() {
        assert_eq!(
            run_cli(["neurodarwin", "inspect", "/nonexistent/x.genome.json"]),
            2
        );
    }

    #[test]
    fn overrides_win() {
        let cli = Cli::try_parse_from([
            "neurodarwin",
            "evolve",
            "--seed",
            "9",
            "--mode",
            "1d",
            "--removal",
            "worst",
            "--workers",
            "3",
            "--out",
            "somewhere",
        ])
        .unwrap();
        let cfg = load_config(&cli).unwrap();
        assert_eq!(cfg.evolution.seed, 9);
        assert_eq!(cfg.evolution.mode, EvolutionMode::OneD);
        assert_eq!(cfg.evolution.removal, RemovalPolicy::Worst);
        assert_eq!(cfg.evolution.workers, 3);
        assert_eq!(cfg.out, PathBuf::from("somewhere"));
    }
}
