use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Layer, LayerSpec, Shape};
use super::network::Network;
use super::tensor::{canonical_sum, Matrix};
use crate::error::{Error, Result};
use crate::StreamRng;

/// Per-layer retain probabilities for hidden dense layers.
///
/// `per_layer[i]` overrides `retain` for layer `i`. Conv and output layers
/// never drop units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutSpec {
    pub retain: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_layer: Vec<f64>,
}

impl Default for DropoutSpec {
    fn default() -> Self {
        DropoutSpec::none()
    }
}

impl DropoutSpec {
    pub fn none() -> Self {
        DropoutSpec {
            retain: 1.0,
            per_layer: Vec::new(),
        }
    }

    pub fn uniform(retain: f64) -> Result<Self> {
        let spec = DropoutSpec {
            retain,
            per_layer: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for &p in std::iter::once(&self.retain).chain(&self.per_layer) {
            check_probability(p)?;
        }
        Ok(())
    }

    /// Retain probability applied to the outputs of `layer` in `net`.
    pub fn retain_for(&self, net: &Network, layer: usize) -> f64 {
        if !net.is_hidden_dense(layer) {
            return 1.0;
        }
        self.per_layer.get(layer).copied().unwrap_or(self.retain)
    }

    pub fn is_active(&self) -> bool {
        self.retain < 1.0 || self.per_layer.iter().any(|&p| p < 1.0)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Forward-pass mode. Training draws dropout masks from the supplied stream;
/// test mode is deterministic.
pub enum Mode<'a> {
    Train(&'a mut StreamRng),
    Test,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Dropout on one vector of unit activations.
///
/// Train: each unit is kept independently with probability `p`, dropped units
/// output 0. Test: every activation is scaled by `p`, which equals scaling the
/// unit's outgoing weights by `p`. Returns the keep mask (all `true` in test
/// mode).
pub fn apply_dropout(activations: &mut [f64], p: f64, mode: &mut Mode<'_>) -> Result<Vec<bool>> {
    check_probability(p)?;
    let mut keep = vec![true; activations.len()];
    match mode {
        Mode::Train(rng) => {
            if p < 1.0 {
                for (a, k) in activations.iter_mut().zip(keep.iter_mut()) {
                    if rng.gen::<f64>() >= p {
                        *a = 0.0;
                        *k = false;
                    }
                }
            }
        }
        Mode::Test => {
            if p < 1.0 {
                for a in activations.iter_mut() {
                    *a *= p;
                }
            }
        }
    }
    Ok(keep)
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// Input to each layer (`layers + 1` entries; the last is the output).
    pub(crate) acts: Vec<Matrix>,
    /// Pre-activations of weighted layers (empty for flatten).
    pub(crate) pre: Vec<Matrix>,
    /// Post-activation values before dropout.
    pub(crate) post: Vec<Matrix>,
    /// Dropout keep masks of hidden dense layers, row-major like `post`.
    pub(crate) keep: Vec<Option<Vec<bool>>>,
    /// Test-mode scaling applied after activation, per layer.
    pub(crate) scale: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("trace has an output")
    }

    pub fn into_output(mut self) -> Matrix {
        self.acts.pop().expect("trace has an output")
    }

    /// Output of layer `i` as seen by layer `i + 1`.
    pub fn layer_output(&self, i: usize) -> &Matrix {
        &self.acts[i + 1]
    }
}

/// Logits (classification) or raw outputs (regression), one row per sample.
pub fn forward(
    net: &Network,
    batch: &Matrix,
    dropout: &DropoutSpec,
    mut mode: Mode<'_>,
) -> Result<Matrix> {
    Ok(run(net, batch, dropout, &mut mode, None)?.into_output())
}

/// Forward pass that keeps every intermediate activation.
pub fn forward_trace(
    net: &Network,
    batch: &Matrix,
    dropout: &DropoutSpec,
    mut mode: Mode<'_>,
) -> Result<Trace> {
    run(net, batch, dropout, &mut mode, None)
}

/// Test-mode forward with the output of `(layer, unit)` forced to zero.
pub(crate) fn forward_ablated(
    net: &Network,
    batch: &Matrix,
    dropout: &DropoutSpec,
    ablate: (usize, usize),
) -> Result<Matrix> {
    Ok(run(net, batch, dropout, &mut Mode::Test, Some(ablate))?.into_output())
}

pub(crate) fn run(
    net: &Network,
    batch: &Matrix,
    dropout: &DropoutSpec,
    mode: &mut Mode<'_>,
    ablate: Option<(usize, usize)>,
) -> Result<Trace> {
    if batch.cols() != net.input_len() {
        return Err(Error::shape(format!(
            "batch has {} features, network expects {}",
            batch.cols(),
            net.input_len()
        )));
    }
    dropout.validate()?;
    let shapes = net.shapes();
    let n_layers = net.layers().len();
    let mut trace = Trace {
        acts: Vec::with_capacity(n_layers + 1),
        pre: Vec::with_capacity(n_layers),
        post: Vec::with_capacity(n_layers),
        keep: Vec::with_capacity(n_layers),
        scale: Vec::with_capacity(n_layers),
    };
    trace.acts.push(batch.clone());
    let mut terms = Vec::new();

    for (li, layer) in net.layers().iter().enumerate() {
        let input = trace.acts.last().expect("input present");
        let out_len = shapes[li + 1].len();
        let mut z = Matrix::zeros(batch.rows(), out_len);
        match layer.spec {
            LayerSpec::Flatten => {
                let out = input.clone();
                trace.pre.push(Matrix::zeros(0, 0));
                trace.post.push(Matrix::zeros(0, 0));
                trace.keep.push(None);
                trace.scale.push(1.0);
                trace.acts.push(out);
                continue;
            }
            LayerSpec::Dense { .. } => {
                for r in 0..batch.rows() {
                    dense_forward(layer, input.row(r), z.row_mut(r), &mut terms);
                }
            }
            LayerSpec::Conv2d { .. } => {
                let Shape::Image { height, width, .. } = shapes[li] else {
                    unreachable!("validated conv input");
                };
                for r in 0..batch.rows() {
                    conv_forward(layer, height, width, input.row(r), z.row_mut(r), &mut terms);
                }
            }
        }
        let act = layer.spec.activation().expect("weighted layer");
        let mut post = z.clone();
        post.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = act.apply(*v));

        let mut out = post.clone();
        let p = dropout.retain_for(net, li);
        let keep = if p < 1.0 {
            let mut all = Vec::with_capacity(out.as_slice().len());
            for r in 0..out.rows() {
                all.extend(apply_dropout(out.row_mut(r), p, mode)?);
            }
            mode.is_train().then_some(all)
        } else {
            None
        };
        if let Some((al, unit)) = ablate {
            if al == li {
                for r in 0..out.rows() {
                    out.row_mut(r)[unit] = 0.0;
                }
            }
        }
        trace.pre.push(z);
        trace.post.push(post);
        trace.keep.push(keep);
        trace.scale.push(if mode.is_train() { 1.0 } else { p });
        trace.acts.push(out);
    }
    Ok(trace)
}

#[inline]
fn dense_forward(layer: &Layer, x: &[f64], z: &mut [f64], terms: &mut Vec<f64>) {
    let n_in = x.len();
    for (o, zo) in z.iter_mut().enumerate() {
        let row = &layer.weights[o * n_in..(o + 1) * n_in];
        terms.clear();
        terms.extend(row.iter().zip(x).map(|(w, v)| w * v));
        *zo = canonical_sum(terms) + layer.bias[o];
    }
}

fn conv_forward(layer: &Layer, h: usize, w: usize, x: &[f64], z: &mut [f64], terms: &mut Vec<f64>) {
    let LayerSpec::Conv2d {
        in_channels,
        out_channels,
        kernel,
        ..
    } = layer.spec
    else {
        unreachable!()
    };
    let pad = kernel / 2;
    for o in 0..out_channels {
        for y in 0..h {
            for xx in 0..w {
                terms.clear();
                for c in 0..in_channels {
                    for ky in 0..kernel {
                        let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                            continue;
                        };
                        for kx in 0..kernel {
                            let Some(ix) = (xx + kx).checked_sub(pad).filter(|&v| v < w) else {
                                continue;
                            };
                            let wi = ((o * in_channels + c) * kernel + ky) * kernel + kx;
                            terms.push(layer.weights[wi] * x[(c * h + iy) * w + ix]);
                        }
                    }
                }
                z[(o * h + y) * w + xx] = canonical_sum(terms) + layer.bias[o];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, LayerSpec};
    use rand::SeedableRng;

    #[test]
    fn identity_dense_layer_passes_input_through() {
        let mut layer = Layer::zeros(LayerSpec::dense(3, 3, Activation::Linear));
        for i in 0..3 {
            let idx = layer.dense_index(i, i);
            layer.weights[idx] = 1.0;
        }
        let net = Network::from_layers(Shape::Flat(3), vec![layer]).unwrap();
        let x = Matrix::from_rows(&[vec![0.5, -2.0, 7.25]]).unwrap();
        let y = forward(&net, &x, &DropoutSpec::none(), Mode::Test).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut rng = StreamRng::seed_from_u64(0);
        let net = Network::mlp(2, &[3], 2, Activation::Relu, &mut rng).unwrap();
        let x = Matrix::zeros(4, 3);
        assert!(matches!(
            forward(&net, &x, &DropoutSpec::none(), Mode::Test),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn dropout_extremes() {
        let mut rng = StreamRng::seed_from_u64(9);
        let base = vec![1.0, -2.0, 3.0];
        let mut a = base.clone();
        apply_dropout(&mut a, 1.0, &mut Mode::Train(&mut rng)).unwrap();
        assert_eq!(a, base);
        let mut b = base.clone();
        let keep = apply_dropout(&mut b, 0.0, &mut Mode::Train(&mut rng)).unwrap();
        assert_eq!(b, vec![0.0; 3]);
        assert!(keep.iter().all(|k| !k));
        let mut c = base.clone();
        apply_dropout(&mut c, 0.5, &mut Mode::Test).unwrap();
        assert_eq!(c, vec![0.5, -1.0, 1.5]);
        assert!(matches!(
            apply_dropout(&mut c, 1.5, &mut Mode::Test),
            Err(Error::InvalidProbability(_))
        ));
        assert!(DropoutSpec::uniform(-0.1).is_err());
    }

    #[test]
    fn retain_applies_only_to_hidden_dense() {
        let mut rng = StreamRng::seed_from_u64(1);
        let net = Network::mlp(2, &[3, 3], 2, Activation::Relu, &mut rng).unwrap();
        let spec = DropoutSpec {
            retain: 0.5,
            per_layer: vec![0.9],
        };
        assert_eq!(spec.retain_for(&net, 0), 0.9);
        assert_eq!(spec.retain_for(&net, 1), 0.5);
        assert_eq!(spec.retain_for(&net, 2), 1.0);
    }
}
