//! Every within-individual operator applied to one small network, with the
//! function-preservation checks that hold exactly.
//!
//! cargo run --release --example rewiring_tour

use neurodarwin::data::{gen_synthetic, SyntheticKind};
use neurodarwin::net::{
    forward, Activation, DropoutSpec, LayerSpec, LossKind, Mode, Network, Shape,
};
use neurodarwin::rewire::{
    birth_unit, contribution_scores, kill_unit, layer_mutation, migrate_filter, migrate_unit,
    permute_filters, permute_units, prune_synapses, stochastic_kill, BirthPolicy, LayerOp, Probe,
    PruneCriterion, RewireEvent,
};
use neurodarwin::StreamRng;
use rand::SeedableRng;

fn show(label: &str, net: &Network, ev: Option<&RewireEvent>) {
    let delta = ev.map_or(String::new(), |e| format!("  delta {:+}", e.param_delta()));
    println!(
        "{label:<28} widths {:?}  params {}{delta}",
        net.widths(),
        net.param_count()
    );
}

fn main() -> neurodarwin::Result<()> {
    let mut rng = StreamRng::seed_from_u64(3);
    let data = gen_synthetic(SyntheticKind::Blobs, 64, 0.8, 3, 3)?;
    let probe = Probe::from_dataset(&data, 32, LossKind::CrossEntropy, DropoutSpec::none())?;
    let out = |n: &Network| forward(n, &probe.batch, &DropoutSpec::none(), Mode::Test).unwrap();

    let net = Network::mlp(2, &[5, 4], 3, Activation::Tanh, &mut rng)?;
    show("start", &net, None);

    let (silent, ev) = birth_unit(&net, 0, BirthPolicy::Silent, &mut rng)?;
    show("silent birth in layer 0", &silent, Some(&ev));
    println!("  outputs unchanged: {}", out(&net) == out(&silent));

    let perm = [4, 2, 0, 1, 3];
    let permuted = permute_units(&net, 0, &perm)?;
    println!(
        "unit permutation: outputs unchanged: {}",
        out(&net) == out(&permuted)
    );

    let report = contribution_scores(&net, &probe)?;
    for s in &report.scores {
        println!(
            "  ablation score layer {} unit {}: {:+.5}",
            s.layer, s.unit, s.score
        );
    }
    let (greedy, ev) = stochastic_kill(&net, &report, 1e-12, &mut rng)?;
    show(
        &format!("greedy kill of ({}, {})", ev.layers[0], ev.units[0]),
        &greedy,
        Some(&ev),
    );
    let (_, ev) = stochastic_kill(&net, &report, 0.05, &mut rng)?;
    println!(
        "stochastic kill (T = 0.05) picked ({}, {})",
        ev.layers[0], ev.units[0]
    );

    let (killed, ev) = kill_unit(&net, 1, 0)?;
    show("kill (1, 0)", &killed, Some(&ev));

    let (pruned, ev) = prune_synapses(&net, 0.3, PruneCriterion::Magnitude, &mut rng)?;
    show(&format!("prune {} synapses", ev.count), &pruned, Some(&ev));

    let (moved, ev) = migrate_unit(&net, 0, 1, 2, &mut rng)?;
    show("migrate unit 2: layer 0 -> 1", &moved, Some(&ev));

    let op = LayerOp::AddDense {
        position: 1,
        width: 5,
        activation: Activation::Tanh,
        noise: 0.0,
    };
    let (deeper, ev) = layer_mutation(&net, op, &mut rng)?;
    show("add identity layer", &deeper, Some(&ev));
    let (shallower, ev) = layer_mutation(&deeper, LayerOp::RemoveLayer { position: 1 }, &mut rng)?;
    show("remove it again", &shallower, Some(&ev));

    let conv = Network::new(
        Shape::Image {
            channels: 3,
            height: 5,
            width: 5,
        },
        &[
            LayerSpec::conv(3, 3, 3, Activation::Relu),
            LayerSpec::conv(3, 2, 3, Activation::Relu),
            LayerSpec::Flatten,
            LayerSpec::dense(50, 3, Activation::Linear),
        ],
        &mut rng,
    )?;
    show("conv net", &conv, None);
    let (moved, ev) = migrate_filter(&conv, 1, 0, 1, &mut rng)?;
    show("migrate filter 1: conv 1 -> 0", &moved, Some(&ev));
    let x = neurodarwin::net::Matrix::from_vec(
        4,
        75,
        (0..300).map(|i| (i as f64 * 0.37).sin()).collect(),
    )?;
    let p = permute_filters(&conv, 0, &[2, 0, 1])?;
    let none = DropoutSpec::none();
    println!(
        "filter permutation: outputs unchanged: {}",
        forward(&conv, &x, &none, Mode::Test)? == forward(&p, &x, &none, Mode::Test)?
    );
    Ok(())
}
