mod common;

use common::*;
use neurodarwin::net::{
    forward, loss_and_gradients, sgd_step, train_few_epochs, DropoutSpec, Mode, TrainConfig,
};
use neurodarwin::rewire::{prune_synapses, PruneCriterion};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_scalar_oracle(seed in any::<u64>(), rows in 1usize..6) {
        let mut r = rng(seed);
        let net = random_net(&mut r, 1);
        let batch = random_batch(&mut r, rows, net.input_len());
        let out = forward(&net, &batch, &DropoutSpec::none(), Mode::Test).unwrap();
        for i in 0..rows {
            let oracle = oracle_forward(&net, batch.row(i), None);
            for (a, b) in out.row(i).iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn keep_all_dropout_is_test_mode(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_dense(&mut r, 1, 1);
        let batch = random_batch(&mut r, 4, net.input_len());
        let keep = DropoutSpec::uniform(1.0).unwrap();
        let train = forward(&net, &batch, &keep, Mode::Train(&mut r)).unwrap();
        prop_assert_eq!(train, forward(&net, &batch, &keep, Mode::Test).unwrap());
    }

    #[test]
    fn training_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_net(&mut r, 2);
        let data = random_dataset(&mut r, &net, 12);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 5,
            dropout: DropoutSpec::uniform(0.7).unwrap(),
            seed,
            ..TrainConfig::default()
        };
        let a = train_few_epochs(&net, &data, &cfg).unwrap();
        let b = train_few_epochs(&net, &data, &cfg).unwrap();
        prop_assert_eq!(a.net, b.net);
        prop_assert_eq!(a.history, b.history);
    }

    #[test]
    fn masked_weights_stay_zero(seed in any::<u64>(), steps in 1usize..8, fraction in 0.0f64..0.9) {
        let mut r = rng(seed);
        let net = random_net(&mut r, 2);
        let (mut net, _) = prune_synapses(&net, fraction, PruneCriterion::Magnitude, &mut r).unwrap();
        let data = random_dataset(&mut r, &net, 6);
        let cfg = TrainConfig { learning_rate: 0.3, ..TrainConfig::default() };
        for _ in 0..steps {
            let (_, g) = loss_and_gradients(&net, data.features(), data.targets(), &cfg, &mut r).unwrap();
            sgd_step(&mut net, &g, cfg.learning_rate).unwrap();
            for l in net.layers() {
                for (w, &m) in l.weights.iter().zip(&l.mask) {
                    prop_assert!(m || w.to_bits() == 0);
                }
            }
        }
        net.validate().unwrap();
    }
}
