//! The same experiment on 1 and on N worker threads. One worker is
//! bit-reproducible; more workers finish sooner but depend on scheduling.
//!
//! cargo run --release --example worker_pool -- [workers]

use std::time::Instant;

use neurodarwin::data::{gen_synthetic, split_dataset, SplitSpec, SyntheticKind};
use neurodarwin::evolution::{evolve, EvolutionConfig};
use neurodarwin::net::TrainConfig;

fn main() -> neurodarwin::Result<()> {
    let workers = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let data = gen_synthetic(SyntheticKind::Blobs, 1200, 1.2, 4, 0)?;
    let mut splits = split_dataset(&data, &SplitSpec::default())?;
    splits.standardize();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{cores} core(s) available");
    for w in [1, workers] {
        let config = EvolutionConfig {
            workers: w,
            generations: 200,
            train: TrainConfig {
                epochs: 6,
                ..TrainConfig::default()
            },
            ..EvolutionConfig::default()
        };
        let t = Instant::now();
        let h = evolve(&config, &splits)?;
        let by_worker = (0..w)
            .map(|i| h.steps.iter().filter(|s| s.worker == i).count())
            .collect::<Vec<_>>();
        println!(
            "{w} worker(s): {:.2}s  best {:.4}  steps per worker {by_worker:?}",
            t.elapsed().as_secs_f64(),
            h.best_fitness()
        );
    }
    Ok(())
}
