//! A logged run, its champion's ancestry, and replay from seeds alone.
//!
//! cargo run --release --example lineage_replay

use std::collections::HashMap;

use neurodarwin::harness::{
    read_events, read_genome, replay, run_evolve, serialize_genome, step_records, ExperimentConfig,
    ReplayTarget,
};

fn main() -> neurodarwin::Result<()> {
    let out = std::env::temp_dir().join("neurodarwin-lineage");
    let mut cfg = ExperimentConfig::default();
    cfg.evolution.population = 8;
    cfg.evolution.generations = 80;
    let summary = run_evolve(&cfg, &out)?;
    println!(
        "champion {} fitness {}",
        summary.result.champion_id, summary.result.champion_fitness
    );

    let steps = step_records(&read_events(out.join("events.jsonl"))?)?;
    let parents: HashMap<u64, Vec<u64>> = steps
        .iter()
        .map(|s| (s.child_id, s.parents.clone()))
        .collect();
    let mut id = summary.result.champion_id;
    let mut chain = vec![id];
    while let Some(p) = parents.get(&id) {
        id = p[0];
        chain.push(id);
    }
    println!("first-parent ancestry: {chain:?}");

    for c in replay(&out, ReplayTarget::Champion)? {
        println!(
            "replayed {}: logged {} replayed {} ({} params)",
            c.id, c.logged, c.replayed, c.param_count
        );
    }
    let all = replay(&out, ReplayTarget::All)?;
    println!("replayed all {} individuals exactly", all.len());

    let champion = read_genome(out.join("champion.genome.json"))?;
    let doc = serialize_genome(&champion);
    println!(
        "champion.genome.json: {} bytes, starts {}",
        doc.len(),
        &doc[..doc.len().min(80)]
    );
    Ok(())
}
