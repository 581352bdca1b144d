//! Dropout as a contract and as a regularizer: keep probability 1 matches
//! test mode exactly, keep probability 0.5 matches it in expectation, and a
//! fixed net is trained on noisy moons with and without dropout.
//!
//! cargo run --release --example dropout_baseline

use neurodarwin::harness::{run_train, ExperimentConfig, TaskConfig};
use neurodarwin::net::{forward, Activation, DropoutSpec, Matrix, Mode, Network};
use neurodarwin::StreamRng;
use rand::SeedableRng;

fn main() -> neurodarwin::Result<()> {
    let mut rng = StreamRng::seed_from_u64(1);
    let net = Network::mlp(3, &[6], 2, Activation::Relu, &mut rng)?;
    let x = Matrix::from_rows(&[vec![0.3, -1.0, 0.8]])?;

    let keep = DropoutSpec::uniform(1.0)?;
    let same =
        forward(&net, &x, &keep, Mode::Train(&mut rng))? == forward(&net, &x, &keep, Mode::Test)?;
    println!("p = 1: train == test: {same}");

    let half = DropoutSpec::uniform(0.5)?;
    let draws = 100_000;
    let many = Matrix::from_vec(draws, 3, x.row(0).repeat(draws))?;
    let samples = forward(&net, &many, &half, Mode::Train(&mut rng))?;
    let test = forward(&net, &x, &half, Mode::Test)?;
    for j in 0..2 {
        let mean = (0..draws).map(|i| samples.row(i)[j]).sum::<f64>() / draws as f64;
        println!(
            "p = 0.5, output {j}: Monte Carlo mean {mean:.5}  test-mode {:.5}",
            test.row(0)[j]
        );
    }

    let dir = std::env::temp_dir().join("neurodarwin-dropout-baseline");
    let mut cfg = ExperimentConfig {
        task: TaskConfig::Moons {
            n: 300,
            noise: 0.3,
            seed: None,
        },
        ..ExperimentConfig::default()
    };
    cfg.baseline.hidden = vec![32, 32];
    cfg.baseline.epochs = 150;
    cfg.baseline.retain = 0.8;
    for row in run_train(&cfg, &dir)? {
        println!(
            "{:<10} train {:.3}  validation {:.3}  test {:.3}",
            row.variant, row.train_accuracy, row.validation_accuracy, row.test_accuracy
        );
    }
    println!("summary.csv in {}", dir.display());
    Ok(())
}
