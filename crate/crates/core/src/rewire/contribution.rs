use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use super::event::RewireEvent;
use super::ops::kill_unit;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::net::{
    batch_loss, forward_ablated, loss_from_output, DropoutSpec, LossKind, Matrix, Mode, Network,
    Targets,
};
use crate::StreamRng;

/// Below this temperature selection is the deterministic argmin.
pub const GREEDY_TEMPERATURE: f64 = 1e-9;

/// Fixed batch used to judge units.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub batch: Matrix,
    pub targets: Targets,
    pub loss: LossKind,
    pub dropout: DropoutSpec,
}

impl Probe {
    /// The first `size` samples of `data`.
    pub fn from_dataset(
        data: &Dataset,
        size: usize,
        loss: LossKind,
        dropout: DropoutSpec,
    ) -> Result<Self> {
        let n = size.min(data.len());
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let idx: Vec<usize> = (0..n).collect();
        Ok(Probe {
            batch: data.features().select_rows(&idx),
            targets: data.targets().select(&idx),
            loss,
            dropout,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub layer: usize,
    pub unit: usize,
    /// Loss with the unit's output forced to zero, minus the intact loss.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub base_loss: f64,
    /// One entry per hidden dense unit, ordered by (layer, unit).
    pub scores: Vec<UnitScore>,
}

/// Zero-ablation score of every hidden dense unit on the probe batch
/// (test-mode forward).
pub fn contribution_scores(net: &Network, probe: &Probe) -> Result<ContributionReport> {
    if probe.batch.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let base_loss = batch_loss(
        net,
        &probe.batch,
        &probe.targets,
        probe.loss,
        &probe.dropout,
        Mode::Test,
    )?;
    let mut scores = Vec::new();
    for layer in net.hidden_dense_layers() {
        for unit in 0..net.layers()[layer].spec.width() {
            let out = forward_ablated(net, &probe.batch, &probe.dropout, (layer, unit))?;
            let (ablated, _) = loss_from_output(&out, &probe.targets, probe.loss)?;
            scores.push(UnitScore {
                layer,
                unit,
                score: ablated - base_loss,
            });
        }
    }
    Ok(ContributionReport { base_loss, scores })
}

/// Picks one killable unit with probability ∝ exp(−score / T) and kills it.
///
/// Units in width-1 layers are never candidates. At `T ≤ GREEDY_TEMPERATURE`
/// the lowest score wins, ties going to the lowest (layer, unit).
pub fn stochastic_kill(
    net: &Network,
    report: &ContributionReport,
    temperature: f64,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    let (layer, unit) = select_victim(net, report, temperature, rng)?;
    kill_unit(net, layer, unit)
}

pub(crate) fn select_victim(
    net: &Network,
    report: &ContributionReport,
    temperature: f64,
    rng: &mut StreamRng,
) -> Result<(usize, usize)> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParams(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let layers = net.layers();
    for s in &report.scores {
        if !net.is_hidden_dense(s.layer) || s.unit >= layers[s.layer].spec.width() {
            return Err(Error::InvalidParams("report does not match network".into()));
        }
    }
    let killable: Vec<&UnitScore> = report
        .scores
        .iter()
        .filter(|s| layers[s.layer].spec.width() >= 2)
        .collect();
    let Some(min) = killable.iter().map(|s| s.score).min_by(f64::total_cmp) else {
        return Err(Error::NoKillableUnit);
    };
    if killable.len() == 1 || temperature <= GREEDY_TEMPERATURE {
        let best = killable
            .iter()
            .find(|s| s.score == min)
            .expect("minimum is attained");
        return Ok((best.layer, best.unit));
    }
    let weights: Vec<f64> = killable
        .iter()
        .map(|s| (-(s.score - min) / temperature).exp())
        .collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let pick = killable[dist.sample(rng)];
    Ok((pick.layer, pick.unit))
}
