use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::contribution::{contribution_scores, select_victim, Probe};
use super::event::{RewireEvent, RewireOp};
use super::ops::{
    birth_unit, kill_unit, layer_mutation, migrate_filter, migrate_unit, prune_synapses,
    BirthPolicy, LayerOp, PruneCriterion,
};
use crate::error::{Error, Result};
use crate::net::{Activation, LayerSpec, Network};
use crate::StreamRng;

/// Knobs of the within-individual rewiring phase.
///
/// Each operator fires independently with its own probability, in the fixed
/// order of [`RewireOp::ALL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewireConfig {
    pub birth: f64,
    pub kill: f64,
    pub prune: f64,
    pub migrate_unit: f64,
    pub migrate_filter: f64,
    pub add_layer: f64,
    pub remove_layer: f64,
    pub birth_policy: BirthPolicy,
    pub prune_fraction: f64,
    pub prune_criterion: PruneCriterion,
    pub kill_temperature: f64,
    /// Samples of the validation split used to score units.
    pub ablation_batch: usize,
    /// Births and new layers never exceed this width.
    pub max_width: usize,
    pub new_layer_activation: Activation,
    /// Noise half-width for identity-initialized layers.
    pub identity_noise: f64,
}

impl Default for RewireConfig {
    fn default() -> Self {
        RewireConfig {
            birth: 0.3,
            kill: 0.15,
            prune: 0.1,
            migrate_unit: 0.1,
            migrate_filter: 0.1,
            add_layer: 0.05,
            remove_layer: 0.02,
            birth_policy: BirthPolicy::Random,
            prune_fraction: 0.05,
            prune_criterion: PruneCriterion::Magnitude,
            kill_temperature: 0.01,
            ablation_batch: 32,
            max_width: 16,
            new_layer_activation: Activation::Tanh,
            identity_noise: 1e-3,
        }
    }
}

impl RewireConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("birth", self.birth),
            ("kill", self.kill),
            ("prune", self.prune),
            ("migrate_unit", self.migrate_unit),
            ("migrate_filter", self.migrate_filter),
            ("add_layer", self.add_layer),
            ("remove_layer", self.remove_layer),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "rewire.{name} = {p} is not a probability"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(Error::Config(
                "rewire.prune_fraction must be in [0, 1)".into(),
            ));
        }
        if !(self.kill_temperature > 0.0) {
            return Err(Error::Config("rewire.kill_temperature must be > 0".into()));
        }
        if self.ablation_batch == 0 || self.max_width == 0 {
            return Err(Error::Config(
                "rewire.ablation_batch and max_width must be >= 1".into(),
            ));
        }
        if !(self.identity_noise >= 0.0) {
            return Err(Error::Config("rewire.identity_noise must be >= 0".into()));
        }
        Ok(())
    }

    pub fn probability(&self, op: RewireOp) -> f64 {
        match op {
            RewireOp::Birth => self.birth,
            RewireOp::Kill => self.kill,
            RewireOp::Prune => self.prune,
            RewireOp::MigrateUnit => self.migrate_unit,
            RewireOp::MigrateFilter => self.migrate_filter,
            RewireOp::AddLayer => self.add_layer,
            RewireOp::RemoveLayer => self.remove_layer,
        }
    }
}

fn not_applicable(op: RewireOp) -> Error {
    Error::NotApplicable(format!("{op:?}"))
}

/// Applies `op` with randomly drawn targets.
///
/// Kill uses zero-ablation scores on `probe` when given, otherwise a uniform
/// choice among killable units. Returns [`Error::NotApplicable`] when the
/// network offers no valid target.
pub fn apply_random(
    op: RewireOp,
    net: &Network,
    cfg: &RewireConfig,
    probe: Option<&Probe>,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    let hidden = net.hidden_dense_layers();
    match op {
        RewireOp::Birth => {
            let open: Vec<usize> = hidden
                .into_iter()
                .filter(|&l| net.layers()[l].spec.width() < cfg.max_width)
                .collect();
            let &layer = open.choose(rng).ok_or_else(|| not_applicable(op))?;
            birth_unit(net, layer, cfg.birth_policy, rng)
        }
        RewireOp::Kill => {
            let (layer, unit) = match probe {
                Some(p) => {
                    let report = contribution_scores(net, p)?;
                    select_victim(net, &report, cfg.kill_temperature, rng).map_err(|e| match e {
                        Error::NoKillableUnit => not_applicable(op),
                        e => e,
                    })?
                }
                None => {
                    let killable: Vec<(usize, usize)> = hidden
                        .into_iter()
                        .filter(|&l| net.layers()[l].spec.width() >= 2)
                        .flat_map(|l| (0..net.layers()[l].spec.width()).map(move |u| (l, u)))
                        .collect();
                    *killable.choose(rng).ok_or_else(|| not_applicable(op))?
                }
            };
            kill_unit(net, layer, unit)
        }
        RewireOp::Prune => {
            if net.alive_synapses() == 0 || cfg.prune_fraction == 0.0 {
                return Err(not_applicable(op));
            }
            prune_synapses(net, cfg.prune_fraction, cfg.prune_criterion, rng)
        }
        RewireOp::MigrateUnit => {
            let sources: Vec<usize> = hidden
                .iter()
                .copied()
                .filter(|&l| net.layers()[l].spec.width() >= 2)
                .collect();
            let &from = sources.choose(rng).ok_or_else(|| not_applicable(op))?;
            let &to = hidden.choose(rng).expect("source is hidden");
            let unit = rng.gen_range(0..net.layers()[from].spec.width());
            migrate_unit(net, from, to, unit, rng)
        }
        RewireOp::MigrateFilter => {
            let convs = net.conv_layers();
            let sources: Vec<usize> = convs
                .iter()
                .copied()
                .filter(|&l| net.layers()[l].spec.width() >= 2)
                .collect();
            let &from = sources.choose(rng).ok_or_else(|| not_applicable(op))?;
            let key = |l: usize| match net.layers()[l].spec {
                LayerSpec::Conv2d {
                    in_channels,
                    kernel,
                    ..
                } => (in_channels, kernel),
                _ => unreachable!(),
            };
            let targets: Vec<usize> = convs.into_iter().filter(|&l| key(l) == key(from)).collect();
            let &to = targets.choose(rng).expect("source is its own target");
            let filter = rng.gen_range(0..net.layers()[from].spec.width());
            migrate_filter(net, from, to, filter, rng)
        }
        RewireOp::AddLayer => {
            let positions: Vec<usize> = (0..net.layers().len())
                .filter(|&i| net.layers()[i].spec.is_dense())
                .collect();
            let &position = positions.choose(rng).ok_or_else(|| not_applicable(op))?;
            let LayerSpec::Dense { in_dim, .. } = net.layers()[position].spec else {
                unreachable!()
            };
            let width = if in_dim <= cfg.max_width && rng.gen_bool(0.5) {
                in_dim
            } else {
                rng.gen_range(1..=cfg.max_width)
            };
            layer_mutation(
                net,
                LayerOp::AddDense {
                    position,
                    width,
                    activation: cfg.new_layer_activation,
                    noise: cfg.identity_noise,
                },
                rng,
            )
        }
        RewireOp::RemoveLayer => {
            let last = net.layers().len() - 1;
            let positions: Vec<usize> = (0..last)
                .filter(|&i| !matches!(net.layers()[i].spec, LayerSpec::Flatten))
                .collect();
            let &position = positions.choose(rng).ok_or_else(|| not_applicable(op))?;
            layer_mutation(net, LayerOp::RemoveLayer { position }, rng)
        }
    }
}

/// One within-individual rewiring phase: every operator is drawn
/// independently with its configured probability. Operators with no valid
/// target are skipped.
pub fn rewiring_phase(
    net: &Network,
    cfg: &RewireConfig,
    probe: Option<&Probe>,
    rng: &mut StreamRng,
) -> Result<(Network, Vec<RewireEvent>)> {
    let mut current = net.clone();
    let mut events = Vec::new();
    for op in RewireOp::ALL {
        if !rng.gen_bool(cfg.probability(op)) {
            continue;
        }
        match apply_random(op, &current, cfg, probe, rng) {
            Ok((next, ev)) => {
                current = next;
                events.push(ev);
            }
            Err(
                Error::NotApplicable(_)
                | Error::WouldEmptyLayer(_)
                | Error::IncompatibleChannels(_)
                | Error::InvalidPosition(_),
            ) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((current, events))
}
