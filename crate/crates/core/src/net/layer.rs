use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Linear,
    ];

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative at pre-activation `z`, given the activation output `a`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// Per-sample activation shape flowing between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Flat(usize),
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Architecture of one layer. Conv layers use stride 1 and same padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        activation: Activation,
    },
    Flatten,
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn conv(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        activation: Activation,
    ) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            activation,
        }
    }

    pub fn activation(&self) -> Option<Activation> {
        match *self {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv2d { activation, .. } => {
                Some(activation)
            }
            LayerSpec::Flatten => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. })
    }

    pub fn is_conv(&self) -> bool {
        matches!(self, LayerSpec::Conv2d { .. })
    }

    /// Number of units (dense) or filters (conv).
    pub fn width(&self) -> usize {
        match *self {
            LayerSpec::Dense { out_dim, .. } => out_dim,
            LayerSpec::Conv2d { out_channels, .. } => out_channels,
            LayerSpec::Flatten => 0,
        }
    }

    pub fn weight_len(&self) -> usize {
        match *self {
            LayerSpec::Dense {
                in_dim, out_dim, ..
            } => in_dim * out_dim,
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => in_channels * out_channels * kernel * kernel,
            LayerSpec::Flatten => 0,
        }
    }

    pub fn bias_len(&self) -> usize {
        self.width()
    }

    /// (fan_in, fan_out) used by the uniform initializer.
    pub fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense {
                in_dim, out_dim, ..
            } => (in_dim, out_dim),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (
                in_channels * kernel * kernel,
                out_channels * kernel * kernel,
            ),
            LayerSpec::Flatten => (0, 0),
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match (*self, input) {
            (
                LayerSpec::Dense {
                    in_dim, out_dim, ..
                },
                Shape::Flat(n),
            ) => {
                if in_dim != n {
                    return Err(Error::shape(format!(
                        "dense expects {in_dim} inputs, got {n}"
                    )));
                }
                if in_dim == 0 || out_dim == 0 {
                    return Err(Error::shape("dense dimensions must be at least 1"));
                }
                Ok(Shape::Flat(out_dim))
            }
            (
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                },
                Shape::Image {
                    channels,
                    height,
                    width,
                },
            ) => {
                if in_channels != channels {
                    return Err(Error::shape(format!(
                        "conv expects {in_channels} channels, got {channels}"
                    )));
                }
                if in_channels == 0 || out_channels == 0 {
                    return Err(Error::shape("conv channel counts must be at least 1"));
                }
                if kernel == 0 || kernel % 2 == 0 {
                    return Err(Error::shape(format!("conv kernel {kernel} must be odd")));
                }
                Ok(Shape::Image {
                    channels: out_channels,
                    height,
                    width,
                })
            }
            (LayerSpec::Flatten, s @ Shape::Image { .. }) => Ok(Shape::Flat(s.len())),
            (spec, shape) => Err(Error::shape(format!("{spec:?} cannot consume {shape:?}"))),
        }
    }

    /// Same layer kind, width, and activation, but reading `input`.
    pub(crate) fn rechained(&self, input: Shape) -> Option<LayerSpec> {
        match (*self, input) {
            (
                LayerSpec::Dense {
                    out_dim,
                    activation,
                    ..
                },
                Shape::Flat(n),
            ) => Some(LayerSpec::dense(n, out_dim, activation)),
            (
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    activation,
                    ..
                },
                Shape::Image { channels, .. },
            ) => Some(LayerSpec::conv(channels, out_channels, kernel, activation)),
            (LayerSpec::Flatten, Shape::Image { .. }) => Some(LayerSpec::Flatten),
            _ => None,
        }
    }
}

/// Parameters of one layer: weights, biases, and the synapse mask.
///
/// Dense weights are `out × in` row-major; conv weights are
/// `out × in × k × k`. Biases are never masked.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Layer {
            spec,
            weights: vec![0.0; spec.weight_len()],
            bias: vec![0.0; spec.bias_len()],
            mask: vec![true; spec.weight_len()],
        }
    }

    pub fn alive_weights(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn param_count(&self) -> usize {
        self.alive_weights() + self.bias.len()
    }

    /// Index into the weight tensor of a dense layer.
    #[inline]
    pub fn dense_index(&self, out: usize, inp: usize) -> usize {
        match self.spec {
            LayerSpec::Dense { in_dim, .. } => out * in_dim + inp,
            _ => unreachable!("dense_index on non-dense layer"),
        }
    }
}
