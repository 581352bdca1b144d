//! IDX files end to end: writes a small synthetic digit set in MNIST's
//! IDX format, loads it back, and evolves classifiers on it. Pass real
//! MNIST files to use them instead.
//!
//! cargo run --release --example mnist_idx -- [images.idx labels.idx limit]

use std::path::PathBuf;

use neurodarwin::data::{load_idx, write_idx, Dataset};
use neurodarwin::harness::{run_evolve, ExperimentConfig, SplitConfig, TaskConfig};
use neurodarwin::net::{Matrix, Shape};
use rand::{Rng, SeedableRng};

/// 8×8 bars: class c lights row c (classes 0..4) or column c-4 (4..8), plus noise.
fn bars(n: usize, seed: u64) -> neurodarwin::Result<Dataset> {
    let mut rng = neurodarwin::StreamRng::seed_from_u64(seed);
    let mut px = Vec::with_capacity(n * 64);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 8;
        for y in 0..8 {
            for x in 0..8 {
                let on = if c < 4 { y == 2 * c } else { x == 2 * (c - 4) };
                let v: f64 = if on { 0.9 } else { 0.0 } + rng.gen_range(0.0..0.3);
                px.push((v.min(1.0) * 255.0).round() / 255.0);
            }
        }
        labels.push(c);
    }
    let shape = Shape::Image {
        channels: 1,
        height: 8,
        width: 8,
    };
    Dataset::classification(shape, Matrix::from_vec(n, 64, px)?, labels, 8)
}

fn main() -> neurodarwin::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::env::temp_dir().join("neurodarwin-idx");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let (images, labels, limit) = if args.len() >= 2 {
        let limit = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
        (PathBuf::from(&args[0]), PathBuf::from(&args[1]), limit)
    } else {
        let (i, l) = (dir.join("bars-images.idx"), dir.join("bars-labels.idx"));
        write_idx(&bars(640, 0)?, &i, &l)?;
        (i, l, 0)
    };
    let data = load_idx(
        &images,
        &labels,
        if limit == 0 { usize::MAX } else { limit },
    )?;
    println!(
        "loaded {} images of shape {:?}, {} classes",
        data.len(),
        data.input_shape(),
        data.classes()
    );

    let mut cfg = ExperimentConfig {
        task: TaskConfig::Idx {
            images,
            labels,
            limit,
        },
        split: SplitConfig::default(),
        ..ExperimentConfig::default()
    };
    cfg.evolution.population = 8;
    cfg.evolution.generations = 40;
    cfg.evolution.train.epochs = 2;
    let summary = run_evolve(&cfg, &dir.join("run"))?;
    let r = &summary.result;
    println!(
        "best validation {:.3}  champion depth {} widths {:?} params {}  test {:?}",
        r.best_fitness,
        r.champion_depth,
        r.champion_widths,
        r.champion_param_count,
        r.test_accuracy
    );
    println!("run written to {}", summary.out.display());
    Ok(())
}
