use rand::Rng;

use super::layer::{Activation, Layer, LayerSpec, Shape};
use crate::error::{Error, Result};
use crate::StreamRng;

/// A feedforward network: input shape plus an ordered stack of layers.
///
/// Killed units are structurally removed; pruned synapses are masked and
/// hold exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input: Shape,
    layers: Vec<Layer>,
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn init_bound(spec: &LayerSpec) -> f64 {
    let (fan_in, fan_out) = spec.fans();
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}

pub(crate) fn sample_weight(spec: &LayerSpec, rng: &mut StreamRng) -> f64 {
    let a = init_bound(spec);
    rng.gen_range(-a..a)
}

/// Fresh layer: uniform weights, zero biases, every synapse alive.
pub fn init_layer(spec: LayerSpec, rng: &mut StreamRng) -> Layer {
    let mut layer = Layer::zeros(spec);
    let a = init_bound(&spec);
    for w in &mut layer.weights {
        *w = rng.gen_range(-a..a);
    }
    layer
}

impl Network {
    /// Builds and randomly initializes a network from layer specs.
    pub fn new(input: Shape, specs: &[LayerSpec], rng: &mut StreamRng) -> Result<Self> {
        let layers = specs.iter().map(|&s| init_layer(s, rng)).collect();
        Network::from_layers(input, layers)
    }

    /// Dense MLP `input → hidden… → output`; hidden layers use `hidden_act`,
    /// the output layer is linear.
    pub fn mlp(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_act: Activation,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        let mut specs = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input_dim;
        for &h in hidden {
            specs.push(LayerSpec::dense(prev, h, hidden_act));
            prev = h;
        }
        specs.push(LayerSpec::dense(prev, output_dim, Activation::Linear));
        Network::new(Shape::Flat(input_dim), &specs, rng)
    }

    pub fn from_layers(input: Shape, layers: Vec<Layer>) -> Result<Self> {
        let net = Network { input, layers };
        net.validate()?;
        Ok(net)
    }

    /// Construct without validation. Callers must validate before handing
    /// the network out.
    pub(crate) fn from_layers_unchecked(input: Shape, layers: Vec<Layer>) -> Self {
        Network { input, layers }
    }

    /// Checks every structural invariant: shape chain, tensor sizes, mask
    /// consistency, finite parameters, dense output layer.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::shape("network has no layers"));
        }
        if self.input.is_empty() {
            return Err(Error::shape("input shape is empty"));
        }
        let mut shape = self.input;
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .spec
                .output_shape(shape)
                .map_err(|e| Error::shape(format!("layer {i}: {e}")))?;
            let spec = &layer.spec;
            if layer.weights.len() != spec.weight_len()
                || layer.mask.len() != spec.weight_len()
                || layer.bias.len() != spec.bias_len()
            {
                return Err(Error::shape(format!(
                    "layer {i}: tensor sizes do not match spec"
                )));
            }
            for (w, &alive) in layer.weights.iter().zip(&layer.mask) {
                if !w.is_finite() {
                    return Err(Error::shape(format!("layer {i}: non-finite weight")));
                }
                if !alive && w.to_bits() != 0 {
                    return Err(Error::shape(format!(
                        "layer {i}: masked weight is not zero"
                    )));
                }
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::shape(format!("layer {i}: non-finite bias")));
            }
        }
        if !self.layers.last().is_some_and(|l| l.spec.is_dense()) {
            return Err(Error::shape("final layer must be dense"));
        }
        Ok(())
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn input_len(&self) -> usize {
        self.input.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut Vec<Layer> {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.spec.width())
    }

    /// Input shape of every layer followed by the output shape
    /// (`layers().len() + 1` entries). Assumes a valid network.
    pub fn shapes(&self) -> Vec<Shape> {
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        let mut s = self.input;
        shapes.push(s);
        for l in &self.layers {
            s = l.spec.output_shape(s).expect("validated network");
            shapes.push(s);
        }
        shapes
    }

    /// Number of weighted layers (flatten excluded).
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.spec.bias_len() > 0).count()
    }

    /// Width of each weighted layer.
    pub fn widths(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter(|l| l.spec.bias_len() > 0)
            .map(|l| l.spec.width())
            .collect()
    }

    /// Alive weights plus biases.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Total synapses still alive.
    pub fn alive_synapses(&self) -> usize {
        self.layers.iter().map(Layer::alive_weights).sum()
    }

    /// Dense layers that feed another layer (candidates for unit operators).
    pub fn hidden_dense_layers(&self) -> Vec<usize> {
        let last = self.layers.len() - 1;
        (0..last)
            .filter(|&i| self.layers[i].spec.is_dense())
            .collect()
    }

    pub fn is_hidden_dense(&self, index: usize) -> bool {
        index + 1 < self.layers.len() && self.layers[index].spec.is_dense()
    }

    pub fn conv_layers(&self) -> Vec<usize> {
        (0..self.layers.len())
            .filter(|&i| self.layers[i].spec.is_conv())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> StreamRng {
        StreamRng::seed_from_u64(3)
    }

    #[test]
    fn param_count_arithmetic() {
        let net = Network::mlp(2, &[4], 1, Activation::Tanh, &mut rng()).unwrap();
        assert_eq!(net.param_count(), 17);

        let conv = Network::new(
            Shape::Image {
                channels: 8,
                height: 3,
                width: 3,
            },
            &[
                LayerSpec::conv(8, 16, 3, Activation::Relu),
                LayerSpec::Flatten,
                LayerSpec::dense(16 * 9, 1, Activation::Linear),
            ],
            &mut rng(),
        )
        .unwrap();
        assert_eq!(conv.layers()[0].param_count(), 1168);
    }

    #[test]
    fn init_respects_bound_and_zero_bias() {
        let net = Network::mlp(3, &[5], 2, Activation::Relu, &mut rng()).unwrap();
        for l in net.layers() {
            let a = init_bound(&l.spec);
            assert!(l.weights.iter().all(|w| w.abs() < a));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn validate_rejects_bad_networks() {
        let mut r = rng();
        assert!(Network::new(Shape::Flat(2), &[], &mut r).is_err());
        // chain mismatch
        assert!(Network::new(
            Shape::Flat(2),
            &[
                LayerSpec::dense(2, 3, Activation::Relu),
                LayerSpec::dense(4, 1, Activation::Linear)
            ],
            &mut r
        )
        .is_err());
        // even kernel
        assert!(Network::new(
            Shape::Image {
                channels: 1,
                height: 4,
                width: 4
            },
            &[
                LayerSpec::conv(1, 2, 2, Activation::Relu),
                LayerSpec::Flatten,
                LayerSpec::dense(32, 2, Activation::Linear)
            ],
            &mut r
        )
        .is_err());
        // masked weight holding a value
        let mut net = Network::mlp(2, &[], 2, Activation::Relu, &mut r).unwrap();
        net.layers_mut()[0].mask[0] = false;
        assert!(net.validate().is_err());
        net.layers_mut()[0].weights[0] = 0.0;
        assert!(net.validate().is_ok());
        assert_eq!(net.param_count(), 5);
    }

    #[test]
    fn depth_and_widths_skip_flatten() {
        let net = Network::new(
            Shape::Image {
                channels: 1,
                height: 2,
                width: 2,
            },
            &[
                LayerSpec::conv(1, 3, 1, Activation::Relu),
                LayerSpec::Flatten,
                LayerSpec::dense(12, 2, Activation::Linear),
            ],
            &mut rng(),
        )
        .unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.widths(), vec![3, 2]);
        assert_eq!(net.hidden_dense_layers(), Vec::<usize>::new());
        assert_eq!(net.conv_layers(), vec![0]);
    }
}
