//! Backprop on XOR with a finite-difference check of one gradient.
//!
//! cargo run --release --example xor_backprop

use neurodarwin::data::gen_xor;
use neurodarwin::net::{
    batch_loss, evaluate, forward, loss_and_gradients, train_few_epochs, Activation, DropoutSpec,
    Mode, Network, TrainConfig,
};
use neurodarwin::StreamRng;
use rand::SeedableRng;

fn main() -> neurodarwin::Result<()> {
    let xor = gen_xor();
    let net = Network::mlp(
        2,
        &[4],
        2,
        Activation::Tanh,
        &mut StreamRng::seed_from_u64(7),
    )?;
    let cfg = TrainConfig {
        epochs: 500,
        batch_size: 4,
        learning_rate: 0.5,
        ..TrainConfig::default()
    };

    // d loss / d w for the first weight, analytic vs central difference
    let (_, grads) = loss_and_gradients(
        &net,
        xor.features(),
        xor.targets(),
        &cfg,
        &mut StreamRng::seed_from_u64(0),
    )?;
    let h = 1e-5;
    let shifted = |d: f64| -> neurodarwin::Result<f64> {
        let mut layers = net.layers().to_vec();
        layers[0].weights[0] += d;
        let n = Network::from_layers(net.input_shape(), layers)?;
        batch_loss(
            &n,
            xor.features(),
            xor.targets(),
            cfg.loss,
            &DropoutSpec::none(),
            Mode::Test,
        )
    };
    let numeric = (shifted(h)? - shifted(-h)?) / (2.0 * h);
    println!(
        "dL/dw[0][0]: analytic {:.10}  numeric {:.10}",
        grads.weights[0][0], numeric
    );

    let outcome = train_few_epochs(&net, &xor, &cfg)?;
    for (i, e) in outcome
        .history
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 100 == 0)
    {
        println!(
            "epoch {i:>3}  loss {:.5}  accuracy {:.2}",
            e.loss, e.accuracy
        );
    }
    let logits = forward(
        &outcome.net,
        xor.features(),
        &DropoutSpec::none(),
        Mode::Test,
    )?;
    for i in 0..4 {
        println!("{:?} -> {:?}", xor.features().row(i), logits.row(i));
    }
    println!("training accuracy {}", evaluate(&outcome.net, &xor)?);
    Ok(())
}
