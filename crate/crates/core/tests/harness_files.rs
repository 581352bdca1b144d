mod common;

use common::*;
use neurodarwin::evolution::Genome;
use neurodarwin::harness::{
    deserialize_genome, read_events, resume_evolve, run_evolve, serialize_genome, strip_wall_clock,
    EventKind, ExperimentConfig, TaskConfig,
};
use neurodarwin::rewire::{apply_random, RewireConfig, RewireOp};
use neurodarwin::Error;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn genomes_round_trip_losslessly(seed in any::<u64>(), ops in 0usize..30, lr in 1e-4f64..1.0) {
        let mut r = rng(seed);
        let mut net = random_net(&mut r, 2);
        if r.gen_bool(0.5) {
            net = mask_some(&net, 0.3, &mut r);
        }
        let cfg = RewireConfig::default();
        for _ in 0..ops {
            let op = RewireOp::ALL[r.gen_range(0..RewireOp::ALL.len())];
            if let Ok((next, _)) = apply_random(op, &net, &cfg, None, &mut r) {
                net = next;
            }
        }
        let g = Genome { id: seed, parents: vec![seed / 2, seed / 3], network: net, learning_rate: lr };
        let text = serialize_genome(&g);
        let back = deserialize_genome(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(serialize_genome(&back), text);
    }
}

#[test]
fn corrupt_genomes_are_rejected() {
    let mut r = rng(3);
    let g = Genome {
        id: 1,
        parents: vec![],
        network: random_dense(&mut r, 1, 2),
        learning_rate: 0.1,
    };
    let text = serialize_genome(&g);
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["layers"][0]["weights"].as_array_mut().unwrap().pop();
    assert!(matches!(
        deserialize_genome(&doc.to_string()),
        Err(Error::SchemaViolation(_))
    ));
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["version"] = 99.into();
    assert!(matches!(
        deserialize_genome(&doc.to_string()),
        Err(Error::VersionMismatch { .. })
    ));
    assert!(matches!(
        deserialize_genome("not json"),
        Err(Error::SchemaViolation(_))
    ));
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        task: TaskConfig::Moons {
            n: 120,
            noise: 0.15,
            seed: None,
        },
        ..ExperimentConfig::default()
    };
    cfg.evolution.population = 5;
    cfg.evolution.tournament = 3;
    cfg.evolution.generations = 30;
    cfg.evolution.checkpoint_every = 7;
    cfg.evolution.seed = 21;
    cfg
}

#[test]
fn killed_run_resumes_to_the_same_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let full = dir.path().join("full");
    let full_summary = run_evolve(&cfg, &full).unwrap();

    // simulate a kill: keep a prefix ending mid-record after the second checkpoint
    let cut = dir.path().join("cut");
    run_evolve(&cfg, &cut).unwrap();
    let text = std::fs::read_to_string(cut.join("events.jsonl")).unwrap();
    let recs = read_events(cut.join("events.jsonl")).unwrap();
    let second_ckpt = recs
        .iter()
        .filter(|r| r.kind == EventKind::Checkpoint)
        .nth(1)
        .unwrap()
        .seq as usize;
    let lines: Vec<&str> = text.lines().collect();
    let mut prefix = lines[..second_ckpt + 4].join("\n");
    prefix.push('\n');
    prefix.push_str(&lines[second_ckpt + 4][..10]);
    std::fs::write(cut.join("events.jsonl"), prefix).unwrap();

    let resumed = resume_evolve(&cut).unwrap();
    let a = strip_wall_clock(&std::fs::read_to_string(full.join("events.jsonl")).unwrap());
    let b = strip_wall_clock(&std::fs::read_to_string(cut.join("events.jsonl")).unwrap());
    assert_eq!(a, b);
    assert_eq!(resumed.result, full_summary.result);
    assert_eq!(
        std::fs::read(full.join("champion.genome.json")).unwrap(),
        std::fs::read(cut.join("champion.genome.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(full.join("summary.csv")).unwrap(),
        std::fs::read(cut.join("summary.csv")).unwrap()
    );
}

#[test]
fn logs_are_complete_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    run_evolve(&cfg, dir.path()).unwrap();
    let recs = read_events(dir.path().join("events.jsonl")).unwrap();
    assert!(recs.windows(2).all(|w| w[0].seq + 1 == w[1].seq));
    assert_eq!(recs[0].kind, EventKind::Seed);
    assert_eq!(recs.last().unwrap().kind, EventKind::Final);
    let steps: Vec<u64> = recs
        .iter()
        .filter(|r| r.kind == EventKind::Step)
        .map(|r| r.payload["step"].as_u64().unwrap())
        .collect();
    assert_eq!(steps, (1..=30).collect::<Vec<_>>());
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
    let loaded = ExperimentConfig::load(dir.path().join("config.toml")).unwrap();
    assert_eq!(loaded, cfg);
}
