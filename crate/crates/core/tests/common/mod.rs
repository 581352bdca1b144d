#![allow(dead_code)]

use neurodarwin::data::Dataset;
use neurodarwin::net::{Activation, Layer, LayerSpec, Matrix, Network, Shape};
use neurodarwin::StreamRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn any_activation(rng: &mut StreamRng) -> Activation {
    Activation::ALL[rng.gen_range(0..Activation::ALL.len())]
}

/// Dense net with 0..=3 hidden layers of width 1..=6.
pub fn random_dense(rng: &mut StreamRng, min_hidden: usize, min_out: usize) -> Network {
    let input = rng.gen_range(1..=5);
    let hidden = rng.gen_range(min_hidden..=3);
    let mut specs = Vec::new();
    let mut prev = input;
    for _ in 0..hidden {
        let w = rng.gen_range(1..=6);
        specs.push(LayerSpec::dense(prev, w, any_activation(rng)));
        prev = w;
    }
    specs.push(LayerSpec::dense(
        prev,
        rng.gen_range(min_out..=4),
        Activation::Linear,
    ));
    with_random_biases(Network::new(Shape::Flat(input), &specs, rng).unwrap(), rng)
}

/// Conv stack (1 or 2 conv layers), flatten, optional hidden dense, output.
pub fn random_conv(rng: &mut StreamRng, min_out: usize) -> Network {
    let (c, h, w) = (
        rng.gen_range(1..=2),
        rng.gen_range(2..=4),
        rng.gen_range(2..=4),
    );
    let convs = rng.gen_range(1..=2);
    let mut specs = Vec::new();
    let mut ch = c;
    for _ in 0..convs {
        let out = rng.gen_range(1..=3);
        let k = if rng.gen_bool(0.5) { 1 } else { 3 };
        specs.push(LayerSpec::conv(ch, out, k, any_activation(rng)));
        ch = out;
    }
    specs.push(LayerSpec::Flatten);
    let mut prev = ch * h * w;
    if convs == 1 && rng.gen_bool(0.5) {
        let hw = rng.gen_range(1..=4);
        specs.push(LayerSpec::dense(prev, hw, any_activation(rng)));
        prev = hw;
    }
    specs.push(LayerSpec::dense(
        prev,
        rng.gen_range(min_out..=3),
        Activation::Linear,
    ));
    let net = Network::new(
        Shape::Image {
            channels: c,
            height: h,
            width: w,
        },
        &specs,
        rng,
    )
    .unwrap();
    with_random_biases(net, rng)
}

/// Zero biases put dead ReLU chains exactly on the kink; spread them out.
pub fn with_random_biases(net: Network, rng: &mut StreamRng) -> Network {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    for l in &mut layers {
        for b in &mut l.bias {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    Network::from_layers(net.input_shape(), layers).unwrap()
}

pub fn random_net(rng: &mut StreamRng, min_out: usize) -> Network {
    if rng.gen_bool(0.35) {
        random_conv(rng, min_out)
    } else {
        random_dense(rng, 0, min_out)
    }
}

/// Masks each weight with probability `p`, zeroing it.
pub fn mask_some(net: &Network, p: f64, rng: &mut StreamRng) -> Network {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    for l in &mut layers {
        for i in 0..l.weights.len() {
            if rng.gen_bool(p) {
                l.mask[i] = false;
                l.weights[i] = 0.0;
            }
        }
    }
    Network::from_layers(net.input_shape(), layers).unwrap()
}

pub fn random_batch(rng: &mut StreamRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.5..1.5)).collect(),
    )
    .unwrap()
}

pub fn random_dataset(rng: &mut StreamRng, net: &Network, n: usize) -> Dataset {
    let classes = net.output_dim();
    let x = random_batch(rng, n, net.input_len());
    let labels = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    Dataset::classification(net.input_shape(), x, labels, classes).unwrap()
}

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Linear => z,
    }
}

/// Scalar-loop forward of one sample, written independently of the library.
/// `ablate` forces the output of `(layer, unit)` to zero.
pub fn oracle_forward(net: &Network, x: &[f64], ablate: Option<(usize, usize)>) -> Vec<f64> {
    let (mut h, mut w) = match net.input_shape() {
        Shape::Image { height, width, .. } => (height, width),
        Shape::Flat(_) => (1, 1),
    };
    let mut cur = x.to_vec();
    for (li, layer) in net.layers().iter().enumerate() {
        let mut next = match layer.spec {
            LayerSpec::Flatten => {
                h = 1;
                w = 1;
                cur.clone()
            }
            LayerSpec::Dense {
                in_dim,
                out_dim,
                activation,
            } => {
                let mut out = vec![0.0; out_dim];
                for (o, v) in out.iter_mut().enumerate() {
                    let mut s = layer.bias[o];
                    for (i, x) in cur.iter().enumerate().take(in_dim) {
                        s += layer.weights[o * in_dim + i] * x;
                    }
                    *v = act(activation, s);
                }
                out
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                activation,
            } => {
                let pad = (kernel / 2) as isize;
                let mut out = vec![0.0; out_channels * h * w];
                for o in 0..out_channels {
                    for y in 0..h {
                        for xx in 0..w {
                            let mut s = layer.bias[o];
                            for c in 0..in_channels {
                                for ky in 0..kernel {
                                    for kx in 0..kernel {
                                        let iy = y as isize + ky as isize - pad;
                                        let ix = xx as isize + kx as isize - pad;
                                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize
                                        {
                                            continue;
                                        }
                                        let wi =
                                            ((o * in_channels + c) * kernel + ky) * kernel + kx;
                                        s += layer.weights[wi]
                                            * cur[(c * h + iy as usize) * w + ix as usize];
                                    }
                                }
                            }
                            out[(o * h + y) * w + xx] = act(activation, s);
                        }
                    }
                }
                out
            }
        };
        if let Some((al, au)) = ablate {
            if al == li {
                next[au] = 0.0;
            }
        }
        cur = next;
    }
    cur
}

/// Mean softmax cross-entropy computed from oracle outputs.
pub fn oracle_cross_entropy(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    ablate: Option<(usize, usize)>,
) -> f64 {
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let z = oracle_forward(net, batch.row(r), ablate);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - z[y];
    }
    total / labels.len() as f64
}

/// `net` with one parameter replaced. `index` addresses weights first,
/// then biases, layer by layer.
pub fn perturbed(net: &Network, layer: usize, bias: bool, index: usize, delta: f64) -> Network {
    let mut layers = net.layers().to_vec();
    if bias {
        layers[layer].bias[index] += delta;
    } else {
        layers[layer].weights[index] += delta;
    }
    Network::from_layers(net.input_shape(), layers).unwrap()
}
