use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::backward::{backward, loss_from_output, LossKind, Targets};
use super::forward::{forward, run, DropoutSpec, Mode};
use super::network::Network;
use super::tensor::Matrix;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::StreamRng;

/// Inner-loop training budget for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: LossKind,
    /// Off (retain 1) unless configured.
    pub dropout: DropoutSpec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 4,
            batch_size: 16,
            learning_rate: 0.1,
            loss: LossKind::CrossEntropy,
            dropout: DropoutSpec::none(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParams("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        self.dropout.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Sample-weighted mean of the mini-batch losses.
    pub loss: f64,
    /// Fraction of training samples classified correctly during the epoch
    /// (train-mode outputs); 0 for regression.
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: Network,
    pub history: Vec<EpochStats>,
    /// Set when a batch produced a non-finite loss or non-finite weights;
    /// `net` is then the last finite state.
    pub diverged: bool,
}

/// Shuffled mini-batch SGD for `config.epochs` epochs.
///
/// Deterministic in `(net, data, config)`. A non-finite loss stops training
/// and returns the network as it was before the offending batch.
pub fn train_few_epochs(
    net: &Network,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut net = net.clone();
    let mut history = Vec::with_capacity(config.epochs);
    let mut rng = StreamRng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let xb = data.features().select_rows(chunk);
            let tb = data.targets().select(chunk);
            let trace = run(&net, &xb, &config.dropout, &mut Mode::Train(&mut rng), None)?;
            let (loss, d_out) = match loss_from_output(trace.output(), &tb, config.loss) {
                Ok(v) => v,
                Err(Error::NonFiniteLoss) => return Ok(diverged(net, history)),
                Err(e) => return Err(e),
            };
            if let Targets::Classes(labels) = &tb {
                correct += count_correct(trace.output(), labels);
            }
            let grads = backward(&net, &trace, d_out);
            let mut next = net.clone();
            super::backward::sgd_step(&mut next, &grads, config.learning_rate)?;
            if !all_finite(&next) {
                return Ok(diverged(net, history));
            }
            net = next;
            loss_sum += loss * chunk.len() as f64;
        }
        history.push(EpochStats {
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(TrainOutcome {
        net,
        history,
        diverged: false,
    })
}

fn diverged(net: Network, history: Vec<EpochStats>) -> TrainOutcome {
    TrainOutcome {
        net,
        history,
        diverged: true,
    }
}

fn all_finite(net: &Network) -> bool {
    net.layers()
        .iter()
        .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn count_correct(out: &Matrix, labels: &[usize]) -> usize {
    labels
        .iter()
        .enumerate()
        .filter(|&(r, &y)| argmax(out.row(r)) == y)
        .count()
}

/// Classification accuracy in [0, 1], or negative MSE for regression.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<f64> {
    evaluate_with(net, data, &DropoutSpec::none())
}

/// [`evaluate`] for a network trained with dropout: test-mode scaling by the
/// retain probabilities in `dropout`.
pub fn evaluate_with(net: &Network, data: &Dataset, dropout: &DropoutSpec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let out = forward(net, data.features(), dropout, Mode::Test)?;
    match data.targets() {
        Targets::Classes(labels) => Ok(count_correct(&out, labels) as f64 / labels.len() as f64),
        t @ Targets::Values(_) => {
            let (mse, _) = loss_from_output(&out, t, LossKind::Mse)?;
            Ok(-mse)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_xor;
    use crate::net::{Activation, Layer, LayerSpec, Shape};

    #[test]
    fn zero_epochs_is_identity() {
        let data = gen_xor();
        let net = Network::mlp(
            2,
            &[4],
            2,
            Activation::Tanh,
            &mut StreamRng::seed_from_u64(1),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train_few_epochs(&net, &data, &cfg).unwrap();
        assert_eq!(out.net, net);
        assert!(out.history.is_empty());
        assert!(!out.diverged);
    }

    #[test]
    fn constant_classifier_scores_half_on_balanced_binary() {
        let data = gen_xor();
        let mut layer = Layer::zeros(LayerSpec::dense(2, 2, Activation::Linear));
        layer.bias[1] = 1.0;
        let net = Network::from_layers(Shape::Flat(2), vec![layer]).unwrap();
        assert_eq!(evaluate(&net, &data).unwrap(), 0.5);
    }

    #[test]
    fn diverging_run_is_flagged() {
        let data = gen_xor();
        let net = Network::mlp(
            2,
            &[4],
            2,
            Activation::Relu,
            &mut StreamRng::seed_from_u64(2),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 4,
            learning_rate: 1e200,
            ..TrainConfig::default()
        };
        let out = train_few_epochs(&net, &data, &cfg).unwrap();
        assert!(out.diverged);
        assert!(out.history.len() < 50);
        out.net.validate().unwrap();
    }

    #[test]
    fn invalid_config_rejected() {
        let data = gen_xor();
        let net = Network::mlp(
            2,
            &[],
            2,
            Activation::Relu,
            &mut StreamRng::seed_from_u64(2),
        )
        .unwrap();
        for cfg in [
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..TrainConfig::default()
            },
        ] {
            assert!(matches!(
                train_few_epochs(&net, &data, &cfg),
                Err(Error::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
