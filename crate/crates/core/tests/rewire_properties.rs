mod common;

use common::*;
use neurodarwin::net::LossKind;
use neurodarwin::net::{forward, DropoutSpec, Mode};
use neurodarwin::rewire::{
    apply_random, birth_unit, contribution_scores, kill_unit, rewiring_phase, stochastic_kill,
    BirthPolicy, Probe, RewireConfig, RewireOp,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn birth_then_kill_restores_param_count(seed in any::<u64>(), silent in any::<bool>()) {
        let mut r = rng(seed);
        let net = random_dense(&mut r, 1, 1);
        let hidden = net.hidden_dense_layers();
        let l = hidden[r.gen_range(0..hidden.len())];
        let policy = if silent { BirthPolicy::Silent } else { BirthPolicy::Random };
        let (grown, ev) = birth_unit(&net, l, policy, &mut r).unwrap();
        prop_assert_eq!(ev.param_delta(), grown.param_count() as i64 - net.param_count() as i64);
        let newborn = ev.units[0];
        let (back, _) = kill_unit(&grown, l, newborn).unwrap();
        prop_assert_eq!(back.param_count(), net.param_count());
        if silent {
            let x = random_batch(&mut r, 8, net.input_len());
            let none = DropoutSpec::none();
            prop_assert_eq!(
                forward(&net, &x, &none, Mode::Test).unwrap(),
                forward(&grown, &x, &none, Mode::Test).unwrap()
            );
        }
    }

    #[test]
    fn every_event_keeps_books(seed in any::<u64>(), ops in prop::collection::vec(0usize..7, 1..20)) {
        let mut r = rng(seed);
        let mut net = random_net(&mut r, 2);
        let cfg = RewireConfig::default();
        for o in ops {
            let op = RewireOp::ALL[o];
            if let Ok((next, ev)) = apply_random(op, &net, &cfg, None, &mut r) {
                prop_assert!(next.validate().is_ok());
                prop_assert_eq!(ev.op, op);
                prop_assert_eq!(ev.params_before, net.param_count());
                prop_assert_eq!(ev.params_after, next.param_count());
                net = next;
            }
        }
    }

    #[test]
    fn phase_output_is_valid_and_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_net(&mut r, 2);
        let data = random_dataset(&mut r, &net, 10);
        let probe = Probe::from_dataset(&data, 10, LossKind::CrossEntropy, DropoutSpec::none()).unwrap();
        let cfg = RewireConfig { birth: 0.6, kill: 0.6, prune: 0.5, migrate_unit: 0.5, ..RewireConfig::default() };
        let (a, ea) = rewiring_phase(&net, &cfg, Some(&probe), &mut rng(seed ^ 1)).unwrap();
        let (b, eb) = rewiring_phase(&net, &cfg, Some(&probe), &mut rng(seed ^ 1)).unwrap();
        prop_assert!(a.validate().is_ok());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn greedy_kill_takes_the_lowest_score(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_dense(&mut r, 1, 2);
        let data = random_dataset(&mut r, &net, 12);
        let probe = Probe::from_dataset(&data, 12, LossKind::CrossEntropy, DropoutSpec::none()).unwrap();
        let report = contribution_scores(&net, &probe).unwrap();
        let killable: Vec<_> = report
            .scores
            .iter()
            .filter(|s| net.layers()[s.layer].spec.width() >= 2)
            .collect();
        let result = stochastic_kill(&net, &report, 1e-12, &mut r);
        if killable.is_empty() {
            prop_assert!(result.is_err());
        } else {
            let min = killable.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
            let first = killable.iter().find(|s| s.score == min).unwrap();
            let (_, ev) = result.unwrap();
            prop_assert_eq!((ev.layers[0], ev.units[0]), (first.layer, first.unit));
        }
    }
}
