use serde::{Deserialize, Serialize};

use super::forward::{run, DropoutSpec, Mode, Trace};
use super::layer::{LayerSpec, Shape};
use super::network::Network;
use super::tensor::Matrix;
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy over logits; needs class targets.
    CrossEntropy,
    /// Mean squared error over every output; class targets are one-hot.
    Mse,
}

/// Supervision for a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Matrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(indices.iter().map(|&i| c[i]).collect()),
            Targets::Values(m) => Targets::Values(m.select_rows(indices)),
        }
    }
}

/// Gradients shaped exactly like a network's weights and biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            bias: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.bias.len()])
                .collect(),
        }
    }
}

/// Mean loss over the batch and the gradient with respect to the outputs.
pub(crate) fn loss_from_output(
    out: &Matrix,
    targets: &Targets,
    loss: LossKind,
) -> Result<(f64, Matrix)> {
    let b = out.rows();
    if targets.len() != b {
        return Err(Error::shape(format!(
            "{} targets for a batch of {b}",
            targets.len()
        )));
    }
    if b == 0 {
        return Err(Error::EmptyDataset);
    }
    let k = out.cols();
    let mut grad = Matrix::zeros(b, k);
    let mut total = 0.0;
    match (loss, targets) {
        (LossKind::CrossEntropy, Targets::Classes(labels)) => {
            for (r, &y) in labels.iter().enumerate() {
                if y >= k {
                    return Err(Error::shape(format!(
                        "label {y} out of range for {k} outputs"
                    )));
                }
                let row = out.row(r);
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|&o| (o - m).exp()).sum();
                let lse = m + sum.ln();
                total += lse - row[y];
                let g = grad.row_mut(r);
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj = ((row[j] - lse).exp() - if j == y { 1.0 } else { 0.0 }) / b as f64;
                }
            }
        }
        (LossKind::CrossEntropy, Targets::Values(_)) => {
            return Err(Error::InvalidParams(
                "cross-entropy needs class targets".into(),
            ));
        }
        (LossKind::Mse, _) => {
            let scale = (b * k) as f64;
            for r in 0..b {
                let row = out.row(r);
                let g = grad.row_mut(r);
                for j in 0..k {
                    let t = match targets {
                        Targets::Classes(labels) => {
                            if labels[r] == j {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Targets::Values(m) => {
                            if m.cols() != k {
                                return Err(Error::shape("target width differs from output width"));
                            }
                            m.row(r)[j]
                        }
                    };
                    let d = row[j] - t;
                    total += d * d;
                    g[j] = 2.0 * d / scale;
                }
            }
            total /= k as f64;
        }
    }
    let loss_value = total / b as f64;
    if !loss_value.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((loss_value, grad))
}

/// Mean batch loss without gradients.
pub fn batch_loss(
    net: &Network,
    batch: &Matrix,
    targets: &Targets,
    loss: LossKind,
    dropout: &DropoutSpec,
    mut mode: Mode<'_>,
) -> Result<f64> {
    let trace = run(net, batch, dropout, &mut mode, None)?;
    Ok(loss_from_output(trace.output(), targets, loss)?.0)
}

/// Mean batch loss and its gradient with respect to every weight and bias.
///
/// Dropout masks are drawn from `rng` when `config.dropout` is active.
/// Gradients at masked synapses are exactly zero.
pub fn loss_and_gradients(
    net: &Network,
    batch: &Matrix,
    targets: &Targets,
    config: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<(f64, Gradients)> {
    let trace = run(net, batch, &config.dropout, &mut Mode::Train(rng), None)?;
    let (loss, d_out) = loss_from_output(trace.output(), targets, config.loss)?;
    Ok((loss, backward(net, &trace, d_out)))
}

pub(crate) fn backward(net: &Network, trace: &Trace, d_out: Matrix) -> Gradients {
    let shapes = net.shapes();
    let mut grads = Gradients::zeros_like(net);
    let mut delta = d_out;
    let rows = delta.rows();

    for (li, layer) in net.layers().iter().enumerate().rev() {
        let Some(act) = layer.spec.activation() else {
            // flatten: identical memory layout on both sides
            continue;
        };
        if let Some(keep) = &trace.keep[li] {
            for (d, &k) in delta.as_mut_slice().iter_mut().zip(keep) {
                if !k {
                    *d = 0.0;
                }
            }
        }
        let scale = trace.scale[li];
        if scale != 1.0 {
            delta.as_mut_slice().iter_mut().for_each(|d| *d *= scale);
        }
        let pre = &trace.pre[li];
        let post = &trace.post[li];
        for ((d, &z), &a) in delta
            .as_mut_slice()
            .iter_mut()
            .zip(pre.as_slice())
            .zip(post.as_slice())
        {
            *d *= act.derivative(z, a);
        }

        let input = &trace.acts[li];
        let need_dx = li > 0;
        let mut dx = Matrix::zeros(if need_dx { rows } else { 0 }, input.cols());
        let gw = &mut grads.weights[li];
        let gb = &mut grads.bias[li];
        match layer.spec {
            LayerSpec::Dense {
                in_dim, out_dim, ..
            } => {
                for r in 0..rows {
                    let x = input.row(r);
                    let dz = delta.row(r);
                    for o in 0..out_dim {
                        let g = dz[o];
                        if g == 0.0 {
                            continue;
                        }
                        gb[o] += g;
                        let wrow = &layer.weights[o * in_dim..(o + 1) * in_dim];
                        let grow = &mut gw[o * in_dim..(o + 1) * in_dim];
                        for i in 0..in_dim {
                            grow[i] += g * x[i];
                        }
                        if need_dx {
                            let dxr = dx.row_mut(r);
                            for i in 0..in_dim {
                                dxr[i] += wrow[i] * g;
                            }
                        }
                    }
                }
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let Shape::Image {
                    height: h,
                    width: w,
                    ..
                } = shapes[li]
                else {
                    unreachable!("validated conv input");
                };
                let pad = kernel / 2;
                for r in 0..rows {
                    let x = input.row(r);
                    let dz = delta.row(r);
                    for o in 0..out_channels {
                        for y in 0..h {
                            for xx in 0..w {
                                let g = dz[(o * h + y) * w + xx];
                                if g == 0.0 {
                                    continue;
                                }
                                gb[o] += g;
                                for c in 0..in_channels {
                                    for ky in 0..kernel {
                                        let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h)
                                        else {
                                            continue;
                                        };
                                        for kx in 0..kernel {
                                            let Some(ix) =
                                                (xx + kx).checked_sub(pad).filter(|&v| v < w)
                                            else {
                                                continue;
                                            };
                                            let wi =
                                                ((o * in_channels + c) * kernel + ky) * kernel + kx;
                                            let xi = (c * h + iy) * w + ix;
                                            gw[wi] += g * x[xi];
                                            if need_dx {
                                                dx.row_mut(r)[xi] += layer.weights[wi] * g;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            LayerSpec::Flatten => unreachable!(),
        }
        for (g, &alive) in gw.iter_mut().zip(&layer.mask) {
            if !alive {
                *g = 0.0;
            }
        }
        delta = dx;
    }
    grads
}

/// Plain SGD: `w ← w − lr·g`. Masked synapses stay exactly zero.
pub fn sgd_step(net: &mut Network, grads: &Gradients, learning_rate: f64) -> Result<()> {
    let layers = net.layers_mut();
    if grads.weights.len() != layers.len() || grads.bias.len() != layers.len() {
        return Err(Error::shape("gradient layer count differs from network"));
    }
    for ((layer, gw), gb) in layers.iter_mut().zip(&grads.weights).zip(&grads.bias) {
        if gw.len() != layer.weights.len() || gb.len() != layer.bias.len() {
            return Err(Error::shape("gradient tensor shape differs from network"));
        }
        for ((w, g), &alive) in layer.weights.iter_mut().zip(gw).zip(&layer.mask) {
            *w = if alive { *w - learning_rate * g } else { 0.0 };
        }
        for (b, g) in layer.bias.iter_mut().zip(gb) {
            *b -= learning_rate * g;
        }
    }
    Ok(())
}
