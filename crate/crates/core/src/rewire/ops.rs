use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::event::{RewireEvent, RewireOp};
use crate::error::{Error, Result};
use crate::net::{init_layer, sample_weight, Activation, Layer, LayerSpec, Network, Shape};
use crate::StreamRng;

/// Outgoing weights of a newborn unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthPolicy {
    /// Outgoing weights drawn from the initializer.
    Random,
    /// Outgoing weights exactly zero: the network function is unchanged.
    Silent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneCriterion {
    /// Smallest |w| first; ties by (layer, index).
    Magnitude,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LayerOp {
    /// Insert a hidden dense layer in front of layer `position`.
    AddDense {
        position: usize,
        width: usize,
        activation: Activation,
        /// Half-width of the uniform noise added to a square identity init.
        noise: f64,
    },
    /// Delete hidden layer `position`.
    RemoveLayer { position: usize },
}

// Producer side: one weight row (dense unit or conv filter) per bias entry.

struct Row {
    weights: Vec<f64>,
    mask: Vec<bool>,
    bias: f64,
}

fn row_len(layer: &Layer) -> usize {
    layer.weights.len() / layer.bias.len()
}

fn set_width(spec: &mut LayerSpec, width: usize) {
    match spec {
        LayerSpec::Dense { out_dim, .. } => *out_dim = width,
        LayerSpec::Conv2d { out_channels, .. } => *out_channels = width,
        LayerSpec::Flatten => unreachable!("flatten has no width"),
    }
}

fn remove_row(layer: &mut Layer, r: usize) -> Row {
    let len = row_len(layer);
    let weights = layer.weights.drain(r * len..(r + 1) * len).collect();
    let mask = layer.mask.drain(r * len..(r + 1) * len).collect();
    let bias = layer.bias.remove(r);
    let width = layer.bias.len();
    set_width(&mut layer.spec, width);
    Row {
        weights,
        mask,
        bias,
    }
}

fn insert_row(layer: &mut Layer, at: usize, row: Row) {
    let len = row.weights.len();
    layer.weights.splice(at * len..at * len, row.weights);
    layer.mask.splice(at * len..at * len, row.mask);
    layer.bias.insert(at, row.bias);
    let width = layer.bias.len();
    set_width(&mut layer.spec, width);
}

/// New row `j` is old row `perm[j]`.
fn permute_rows(layer: &mut Layer, perm: &[usize]) {
    let len = row_len(layer);
    let (w, m, b) = (
        layer.weights.clone(),
        layer.mask.clone(),
        layer.bias.clone(),
    );
    for (j, &src) in perm.iter().enumerate() {
        layer.weights[j * len..(j + 1) * len].copy_from_slice(&w[src * len..(src + 1) * len]);
        layer.mask[j * len..(j + 1) * len].copy_from_slice(&m[src * len..(src + 1) * len]);
        layer.bias[j] = b[src];
    }
}

// Consumer side: each row is a sequence of equal blocks, one per input unit
// or channel of the producer.

fn set_consumer_row_len(layer: &mut Layer, len: usize) {
    match &mut layer.spec {
        LayerSpec::Dense { in_dim, .. } => *in_dim = len,
        LayerSpec::Conv2d {
            in_channels,
            kernel,
            ..
        } => *in_channels = len / (*kernel * *kernel),
        LayerSpec::Flatten => unreachable!("flatten consumes nothing"),
    }
}

fn remove_block(layer: &mut Layer, b: usize, block: usize) {
    let rows = layer.bias.len();
    let len = row_len(layer);
    let mut w = Vec::with_capacity(rows * (len - block));
    let mut m = Vec::with_capacity(rows * (len - block));
    for r in 0..rows {
        for c in (0..len).filter(|c| c / block != b) {
            w.push(layer.weights[r * len + c]);
            m.push(layer.mask[r * len + c]);
        }
    }
    layer.weights = w;
    layer.mask = m;
    set_consumer_row_len(layer, len - block);
}

/// Inserts block `at` in every row; `values` holds `rows × block` entries.
fn insert_block(layer: &mut Layer, at: usize, block: usize, values: &[f64]) {
    let rows = layer.bias.len();
    let len = row_len(layer);
    let mut w = Vec::with_capacity(rows * (len + block));
    let mut m = Vec::with_capacity(rows * (len + block));
    for r in 0..rows {
        let row = &layer.weights[r * len..(r + 1) * len];
        let mrow = &layer.mask[r * len..(r + 1) * len];
        w.extend_from_slice(&row[..at * block]);
        m.extend_from_slice(&mrow[..at * block]);
        w.extend_from_slice(&values[r * block..(r + 1) * block]);
        m.extend(std::iter::repeat_n(true, block));
        w.extend_from_slice(&row[at * block..]);
        m.extend_from_slice(&mrow[at * block..]);
    }
    layer.weights = w;
    layer.mask = m;
    set_consumer_row_len(layer, len + block);
}

fn permute_blocks(layer: &mut Layer, perm: &[usize], block: usize) {
    let rows = layer.bias.len();
    let len = row_len(layer);
    let (w, m) = (layer.weights.clone(), layer.mask.clone());
    for r in 0..rows {
        for (j, &src) in perm.iter().enumerate() {
            let dst = r * len + j * block;
            let from = r * len + src * block;
            layer.weights[dst..dst + block].copy_from_slice(&w[from..from + block]);
            layer.mask[dst..dst + block].copy_from_slice(&m[from..from + block]);
        }
    }
}

/// The layer reading the outputs of `producer`, and the number of consumer
/// weights per producer unit/channel in each consumer row.
fn consumer_of(net: &Network, producer: usize) -> Result<(usize, usize)> {
    let layers = net.layers();
    let next = producer + 1;
    match layers.get(next).map(|l| l.spec) {
        Some(LayerSpec::Dense { .. }) => Ok((next, 1)),
        Some(LayerSpec::Conv2d { kernel, .. }) => Ok((next, kernel * kernel)),
        Some(LayerSpec::Flatten) => {
            let Shape::Image { height, width, .. } = net.shapes()[next] else {
                unreachable!("flatten reads an image");
            };
            Ok((next + 1, height * width))
        }
        None => Err(Error::InvalidLayer(producer)),
    }
}

fn finish(layers: Vec<Layer>, input: Shape) -> Result<Network> {
    Network::from_layers(input, layers)
}

fn check_hidden_dense(net: &Network, layer: usize) -> Result<()> {
    if net.is_hidden_dense(layer) {
        Ok(())
    } else {
        Err(Error::InvalidLayer(layer))
    }
}

fn check_unit(net: &Network, layer: usize, unit: usize) -> Result<()> {
    let width = net.layers()[layer].spec.width();
    if unit < width {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "unit {unit} out of range for layer {layer} of width {width}"
        )))
    }
}

/// Appends a unit to hidden dense layer `layer` (bias `bias`) and wires it
/// into the next layer. Returns the new unit's index.
fn grow_unit(
    layers: &mut [Layer],
    layer: usize,
    bias: f64,
    policy: BirthPolicy,
    rng: &mut StreamRng,
) -> usize {
    let at = layers[layer].bias.len();
    let mut grown = layers[layer].spec;
    set_width(&mut grown, at + 1);
    let fan_in = row_len(&layers[layer]);
    let weights = (0..fan_in).map(|_| sample_weight(&grown, rng)).collect();
    insert_row(
        &mut layers[layer],
        at,
        Row {
            weights,
            mask: vec![true; fan_in],
            bias,
        },
    );
    let next = &mut layers[layer + 1];
    let mut widened = next.spec;
    if let LayerSpec::Dense { in_dim, .. } = &mut widened {
        *in_dim += 1;
    }
    let rows = next.bias.len();
    let values: Vec<f64> = match policy {
        BirthPolicy::Silent => vec![0.0; rows],
        BirthPolicy::Random => (0..rows).map(|_| sample_weight(&widened, rng)).collect(),
    };
    insert_block(next, at, 1, &values);
    at
}

/// Adds one unit to a hidden dense layer.
///
/// Incoming weights follow the initializer, the bias is zero, and outgoing
/// weights are random or exactly zero depending on `policy`.
pub fn birth_unit(
    net: &Network,
    layer: usize,
    policy: BirthPolicy,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    check_hidden_dense(net, layer)?;
    let before = net.param_count();
    let mut layers = net.layers().to_vec();
    let unit = grow_unit(&mut layers, layer, 0.0, policy, rng);
    let out = finish(layers, net.input_shape())?;
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(RewireOp::Birth, vec![layer], vec![unit], 1, before, after),
    ))
}

fn shrink_unit(layers: &mut [Layer], layer: usize, unit: usize) -> Row {
    let row = remove_row(&mut layers[layer], unit);
    remove_block(&mut layers[layer + 1], unit, 1);
    row
}

/// Structurally removes one hidden dense unit: its incoming row, its bias,
/// and its column in the next layer.
pub fn kill_unit(net: &Network, layer: usize, unit: usize) -> Result<(Network, RewireEvent)> {
    check_hidden_dense(net, layer)?;
    check_unit(net, layer, unit)?;
    if net.layers()[layer].spec.width() < 2 {
        return Err(Error::WouldEmptyLayer(layer));
    }
    let before = net.param_count();
    let mut layers = net.layers().to_vec();
    shrink_unit(&mut layers, layer, unit);
    let out = finish(layers, net.input_shape())?;
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(RewireOp::Kill, vec![layer], vec![unit], 1, before, after),
    ))
}

fn check_perm(perm: &[usize], width: usize) -> Result<()> {
    let mut seen = vec![false; width];
    if perm.len() != width {
        return Err(Error::InvalidParams(
            "permutation length differs from layer width".into(),
        ));
    }
    for &p in perm {
        if p >= width || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParams("not a permutation".into()));
        }
    }
    Ok(())
}

/// Reorders the units of a hidden dense layer together with the matching
/// columns of the next layer. New unit `j` is old unit `perm[j]`.
pub fn permute_units(net: &Network, layer: usize, perm: &[usize]) -> Result<Network> {
    check_hidden_dense(net, layer)?;
    check_perm(perm, net.layers()[layer].spec.width())?;
    let mut layers = net.layers().to_vec();
    permute_rows(&mut layers[layer], perm);
    permute_blocks(&mut layers[layer + 1], perm, 1);
    finish(layers, net.input_shape())
}

/// Reorders the filters of a conv layer together with the matching input
/// channels of whatever consumes it.
pub fn permute_filters(net: &Network, layer: usize, perm: &[usize]) -> Result<Network> {
    if !net.layers().get(layer).is_some_and(|l| l.spec.is_conv()) {
        return Err(Error::InvalidLayer(layer));
    }
    check_perm(perm, net.layers()[layer].spec.width())?;
    let (consumer, block) = consumer_of(net, layer)?;
    let mut layers = net.layers().to_vec();
    permute_rows(&mut layers[layer], perm);
    permute_blocks(&mut layers[consumer], perm, block);
    finish(layers, net.input_shape())
}

/// Permutation moving index `from` to `to`, shifting the others.
fn move_perm(width: usize, from: usize, to: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..width).filter(|&i| i != from).collect();
    order.insert(to, from);
    order
}

fn other_index(width: usize, current: usize, rng: &mut StreamRng) -> usize {
    let pick = rng.gen_range(0..width - 1);
    if pick >= current {
        pick + 1
    } else {
        pick
    }
}

/// Moves a hidden unit to another position.
///
/// Within a layer the unit is repositioned (a function-preserving
/// permutation). Across layers the unit is killed at the source and reborn
/// at the destination with its bias, fresh incoming weights and silent
/// (zero) outgoing weights.
pub fn migrate_unit(
    net: &Network,
    from_layer: usize,
    to_layer: usize,
    unit: usize,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    check_hidden_dense(net, from_layer)?;
    check_hidden_dense(net, to_layer)?;
    check_unit(net, from_layer, unit)?;
    let width = net.layers()[from_layer].spec.width();
    if width < 2 {
        return Err(Error::WouldEmptyLayer(from_layer));
    }
    let before = net.param_count();
    let (out, landed) = if from_layer == to_layer {
        let target = other_index(width, unit, rng);
        (
            permute_units(net, from_layer, &move_perm(width, unit, target))?,
            target,
        )
    } else {
        let mut layers = net.layers().to_vec();
        let row = shrink_unit(&mut layers, from_layer, unit);
        let landed = grow_unit(&mut layers, to_layer, row.bias, BirthPolicy::Silent, rng);
        (finish(layers, net.input_shape())?, landed)
    };
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(
            RewireOp::MigrateUnit,
            vec![from_layer, to_layer],
            vec![unit, landed],
            1,
            before,
            after,
        ),
    ))
}

/// Moves a conv filter within a layer (reordering) or to another conv layer
/// with the same input channels and kernel size.
///
/// An inter-layer move copies the kernel, mask and bias to a new last filter
/// of the destination; the consumer of the destination gets zero weights for
/// the new channel. The source's consumer loses the matching channel.
pub fn migrate_filter(
    net: &Network,
    from_conv: usize,
    to_conv: usize,
    filter: usize,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    let specs = net.specs();
    let (
        Some(&LayerSpec::Conv2d {
            in_channels: src_in,
            out_channels: src_out,
            kernel: src_k,
            ..
        }),
        Some(&LayerSpec::Conv2d {
            in_channels: dst_in,
            kernel: dst_k,
            ..
        }),
    ) = (specs.get(from_conv), specs.get(to_conv))
    else {
        let bad = if specs.get(from_conv).is_some_and(LayerSpec::is_conv) {
            to_conv
        } else {
            from_conv
        };
        return Err(Error::InvalidLayer(bad));
    };
    if filter >= src_out {
        return Err(Error::InvalidParams(format!(
            "filter {filter} out of range"
        )));
    }
    if src_out < 2 {
        return Err(Error::WouldEmptyLayer(from_conv));
    }
    let before = net.param_count();
    if from_conv == to_conv {
        let target = other_index(src_out, filter, rng);
        let out = permute_filters(net, from_conv, &move_perm(src_out, filter, target))?;
        let after = out.param_count();
        return Ok((
            out,
            RewireEvent::new(
                RewireOp::MigrateFilter,
                vec![from_conv, to_conv],
                vec![filter, target],
                1,
                before,
                after,
            ),
        ));
    }
    if src_in != dst_in || src_k != dst_k {
        return Err(Error::IncompatibleChannels(format!(
            "layer {from_conv} has {src_in} inputs / kernel {src_k}, layer {to_conv} has {dst_in} / {dst_k}"
        )));
    }

    let (src_consumer, src_block) = consumer_of(net, from_conv)?;
    let mut layers = net.layers().to_vec();
    let row = remove_row(&mut layers[from_conv], filter);
    remove_block(&mut layers[src_consumer], filter, src_block);
    let staged = Network::from_layers_unchecked(net.input_shape(), layers);

    let LayerSpec::Conv2d { in_channels, .. } = staged.layers()[to_conv].spec else {
        unreachable!()
    };
    if in_channels != src_in {
        return Err(Error::IncompatibleChannels(format!(
            "removing filter {filter} from layer {from_conv} changes the input channels of layer {to_conv}"
        )));
    }
    staged.validate()?;
    let (dst_consumer, dst_block) = consumer_of(&staged, to_conv)?;
    let mut layers = staged.layers().to_vec();
    let landed = layers[to_conv].bias.len();
    insert_row(&mut layers[to_conv], landed, row);
    let rows = layers[dst_consumer].bias.len();
    insert_block(
        &mut layers[dst_consumer],
        landed,
        dst_block,
        &vec![0.0; rows * dst_block],
    );
    let out = finish(layers, net.input_shape())?;
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(
            RewireOp::MigrateFilter,
            vec![from_conv, to_conv],
            vec![filter, landed],
            1,
            before,
            after,
        ),
    ))
}

/// `⌈fraction · alive⌉`, treating values within 1e-9 of an integer as exact.
fn prune_quota(fraction: f64, alive: usize) -> usize {
    let x = fraction * alive as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Permanently removes `⌈fraction · alive⌉` alive synapses.
pub fn prune_synapses(
    net: &Network,
    fraction: f64,
    criterion: PruneCriterion,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParams(format!(
            "prune fraction {fraction} outside [0, 1)"
        )));
    }
    let alive: Vec<(usize, usize)> = net
        .layers()
        .iter()
        .enumerate()
        .flat_map(|(li, l)| {
            l.mask
                .iter()
                .enumerate()
                .filter(|&(_, &m)| m)
                .map(move |(wi, _)| (li, wi))
        })
        .collect();
    let k = prune_quota(fraction, alive.len());
    let before = net.param_count();
    let chosen: Vec<(usize, usize)> = match criterion {
        PruneCriterion::Magnitude => {
            let mut sorted = alive;
            let layers = net.layers();
            sorted.sort_by(|&(la, wa), &(lb, wb)| {
                layers[la].weights[wa]
                    .abs()
                    .total_cmp(&layers[lb].weights[wb].abs())
                    .then((la, wa).cmp(&(lb, wb)))
            });
            sorted.truncate(k);
            sorted
        }
        PruneCriterion::Random => index::sample(rng, alive.len(), k)
            .into_iter()
            .map(|i| alive[i])
            .collect(),
    };
    let mut layers = net.layers().to_vec();
    let mut touched: Vec<usize> = Vec::new();
    for &(li, wi) in &chosen {
        layers[li].mask[wi] = false;
        layers[li].weights[wi] = 0.0;
        touched.push(li);
    }
    touched.sort_unstable();
    touched.dedup();
    let out = finish(layers, net.input_shape())?;
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(
            RewireOp::Prune,
            touched,
            Vec::new(),
            chosen.len(),
            before,
            after,
        ),
    ))
}

/// Re-chains every layer from `start` onward against the running shape,
/// re-initializing any layer whose input no longer matches.
pub(crate) fn reconcile(
    input: Shape,
    layers: &mut [Layer],
    start: usize,
    rng: &mut StreamRng,
) -> Result<()> {
    let mut shape = input;
    for (i, layer) in layers.iter_mut().enumerate() {
        if i >= start && layer.spec.output_shape(shape).is_err() {
            let spec = layer
                .spec
                .rechained(shape)
                .ok_or(Error::InvalidPosition(i))?;
            *layer = init_layer(spec, rng);
        }
        shape = layer
            .spec
            .output_shape(shape)
            .map_err(|_| Error::InvalidPosition(i))?;
    }
    Ok(())
}

/// Inserts or removes a hidden layer.
///
/// A square dense insertion starts as identity plus uniform noise in
/// `[-noise, noise]`; other widths are randomly initialized and the layer
/// after them is re-initialized to the new width. Removal re-initializes
/// the connection that becomes adjacent.
pub fn layer_mutation(
    net: &Network,
    op: LayerOp,
    rng: &mut StreamRng,
) -> Result<(Network, RewireEvent)> {
    let before = net.param_count();
    let mut layers = net.layers().to_vec();
    let (rop, position, width) = match op {
        LayerOp::AddDense {
            position,
            width,
            activation,
            noise,
        } => {
            let Some(&LayerSpec::Dense { in_dim, .. }) = layers.get(position).map(|l| &l.spec)
            else {
                return Err(Error::InvalidPosition(position));
            };
            if width == 0 {
                return Err(Error::InvalidParams(
                    "new layer width must be at least 1".into(),
                ));
            }
            let spec = LayerSpec::dense(in_dim, width, activation);
            let layer = if width == in_dim {
                let mut l = Layer::zeros(spec);
                for o in 0..width {
                    for i in 0..in_dim {
                        let eye = if o == i { 1.0 } else { 0.0 };
                        let jitter = if noise > 0.0 {
                            rng.gen_range(-noise..=noise)
                        } else {
                            0.0
                        };
                        let idx = l.dense_index(o, i);
                        l.weights[idx] = eye + jitter;
                    }
                }
                l
            } else {
                init_layer(spec, rng)
            };
            layers.insert(position, layer);
            (RewireOp::AddLayer, position, width)
        }
        LayerOp::RemoveLayer { position } => {
            if position + 1 >= layers.len() || matches!(layers[position].spec, LayerSpec::Flatten) {
                return Err(Error::InvalidPosition(position));
            }
            let width = layers.remove(position).spec.width();
            (RewireOp::RemoveLayer, position, width)
        }
    };
    reconcile(net.input_shape(), &mut layers, position, rng)?;
    let out = finish(layers, net.input_shape())?;
    let after = out.param_count();
    Ok((
        out,
        RewireEvent::new(rop, vec![position], Vec::new(), width, before, after),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{forward, DropoutSpec, Matrix, Mode};
    use rand::SeedableRng;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    fn probe(cols: usize, seed: u64) -> Matrix {
        let mut r = rng(seed);
        let data = (0..32 * cols).map(|_| r.gen_range(-2.0..2.0)).collect();
        Matrix::from_vec(32, cols, data).unwrap()
    }

    fn out(net: &Network, x: &Matrix) -> Matrix {
        forward(net, x, &DropoutSpec::none(), Mode::Test).unwrap()
    }

    fn small() -> Network {
        Network::mlp(2, &[4], 1, Activation::Tanh, &mut rng(1)).unwrap()
    }

    fn conv_net(seed: u64) -> Network {
        Network::new(
            Shape::Image {
                channels: 2,
                height: 3,
                width: 3,
            },
            &[
                LayerSpec::conv(2, 3, 3, Activation::Relu),
                LayerSpec::conv(3, 4, 1, Activation::Tanh),
                LayerSpec::Flatten,
                LayerSpec::dense(36, 2, Activation::Linear),
            ],
            &mut rng(seed),
        )
        .unwrap()
    }

    #[test]
    fn birth_arithmetic_and_silence() {
        let net = small();
        let (grown, ev) = birth_unit(&net, 0, BirthPolicy::Silent, &mut rng(2)).unwrap();
        assert_eq!(grown.param_count(), 21);
        assert_eq!((ev.params_before, ev.params_after), (17, 21));
        let x = probe(2, 3);
        assert_eq!(out(&net, &x), out(&grown, &x));
        assert!(matches!(
            birth_unit(&net, 1, BirthPolicy::Random, &mut rng(2)),
            Err(Error::InvalidLayer(1))
        ));
    }

    #[test]
    fn kill_arithmetic_and_errors() {
        let net = small();
        let (k, ev) = kill_unit(&net, 0, 2).unwrap();
        assert_eq!(k.param_count(), 13);
        assert_eq!(ev.param_delta(), -4);
        let thin = Network::mlp(2, &[1], 1, Activation::Tanh, &mut rng(1)).unwrap();
        assert!(matches!(
            kill_unit(&thin, 0, 0),
            Err(Error::WouldEmptyLayer(0))
        ));
        assert!(matches!(kill_unit(&net, 1, 0), Err(Error::InvalidLayer(1))));
    }

    #[test]
    fn kill_of_silent_unit_is_exact() {
        let net = small();
        let (grown, ev) = birth_unit(&net, 0, BirthPolicy::Silent, &mut rng(5)).unwrap();
        let (back, _) = kill_unit(&grown, 0, ev.units[0]).unwrap();
        assert_eq!(back, net);
        let x = probe(2, 4);
        assert_eq!(out(&grown, &x), out(&net, &x));
    }

    #[test]
    fn intra_layer_unit_migration_preserves_outputs() {
        let net = Network::mlp(3, &[5, 4], 2, Activation::Relu, &mut rng(7)).unwrap();
        let (moved, ev) = migrate_unit(&net, 1, 1, 0, &mut rng(8)).unwrap();
        assert_ne!(ev.units[1], 0);
        let x = probe(3, 9);
        assert_eq!(out(&net, &x), out(&moved, &x));
    }

    #[test]
    fn inter_layer_unit_migration_arithmetic() {
        let net = Network::mlp(3, &[5, 4, 6], 2, Activation::Relu, &mut rng(7)).unwrap();
        let (moved, ev) = migrate_unit(&net, 0, 2, 1, &mut rng(8)).unwrap();
        // source unit: fan_in 3 + bias + fan_out 4; destination unit: fan_in 4 + bias + fan_out 2
        assert_eq!(ev.param_delta(), (4 + 1 + 2) - (3 + 1 + 4));
        assert_eq!(moved.widths(), vec![4, 4, 7, 2]);
        let thin = Network::mlp(3, &[1, 4], 2, Activation::Relu, &mut rng(7)).unwrap();
        assert!(matches!(
            migrate_unit(&thin, 0, 1, 0, &mut rng(1)),
            Err(Error::WouldEmptyLayer(0))
        ));
    }

    #[test]
    fn filter_reorder_preserves_outputs() {
        let net = conv_net(3);
        let x = probe(18, 1);
        for layer in [0, 1] {
            let (moved, _) = migrate_filter(&net, layer, layer, 1, &mut rng(2)).unwrap();
            assert_eq!(out(&net, &x), out(&moved, &x));
        }
    }

    #[test]
    fn filter_migration_compatibility() {
        let net = conv_net(3);
        assert!(matches!(
            migrate_filter(&net, 0, 1, 0, &mut rng(0)),
            Err(Error::IncompatibleChannels(_))
        ));
        assert!(matches!(
            migrate_filter(&net, 0, 3, 0, &mut rng(0)),
            Err(Error::InvalidLayer(3))
        ));
    }

    #[test]
    fn inter_layer_filter_migration_lands_silently() {
        // two parallel-compatible conv layers: 2→2 then 2→3
        let net = Network::new(
            Shape::Image {
                channels: 2,
                height: 2,
                width: 2,
            },
            &[
                LayerSpec::conv(2, 2, 1, Activation::Relu),
                LayerSpec::conv(2, 3, 1, Activation::Relu),
                LayerSpec::Flatten,
                LayerSpec::dense(12, 2, Activation::Linear),
            ],
            &mut rng(4),
        )
        .unwrap();
        let (moved, ev) = migrate_filter(&net, 1, 0, 2, &mut rng(0)).unwrap();
        assert_eq!(ev.units, vec![2, 2]);
        assert_eq!(moved.widths(), vec![3, 2, 2]);
        moved.validate().unwrap();
    }

    #[test]
    fn prune_zero_is_noop_and_magnitude_takes_smallest() {
        let net = small();
        let (same, ev) = prune_synapses(&net, 0.0, PruneCriterion::Magnitude, &mut rng(0)).unwrap();
        assert_eq!(same, net);
        assert_eq!(ev.count, 0);
        let (pruned, ev) =
            prune_synapses(&net, 0.3, PruneCriterion::Magnitude, &mut rng(0)).unwrap();
        assert_eq!(ev.count, 4); // ceil(0.3 * 12)
        assert_eq!(pruned.param_count(), 13);
        assert!(prune_synapses(&net, 1.0, PruneCriterion::Random, &mut rng(0)).is_err());
    }

    #[test]
    fn prune_quota_handles_float_noise() {
        assert_eq!(prune_quota(0.3, 10), 3);
        assert_eq!(prune_quota(0.31, 10), 4);
        assert_eq!(prune_quota(0.0, 10), 0);
    }

    #[test]
    fn remove_only_hidden_layer() {
        let net = Network::mlp(3, &[5], 2, Activation::Relu, &mut rng(1)).unwrap();
        let (flat, ev) =
            layer_mutation(&net, LayerOp::RemoveLayer { position: 0 }, &mut rng(2)).unwrap();
        assert_eq!(flat.param_count(), 3 * 2 + 2);
        assert_eq!(ev.params_after, 8);
        assert!(matches!(
            layer_mutation(&net, LayerOp::RemoveLayer { position: 1 }, &mut rng(2)),
            Err(Error::InvalidPosition(1))
        ));
    }

    #[test]
    fn add_layer_square_and_rectangular() {
        let net = Network::mlp(3, &[4], 2, Activation::Relu, &mut rng(1)).unwrap();
        let (sq, _) = layer_mutation(
            &net,
            LayerOp::AddDense {
                position: 1,
                width: 4,
                activation: Activation::Relu,
                noise: 0.0,
            },
            &mut rng(2),
        )
        .unwrap();
        // relu outputs are nonnegative, so an exact identity layer is inert
        let x = probe(3, 5);
        assert_eq!(out(&sq, &x), out(&net, &x));
        let (wide, _) = layer_mutation(
            &net,
            LayerOp::AddDense {
                position: 0,
                width: 7,
                activation: Activation::Tanh,
                noise: 0.01,
            },
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(wide.widths(), vec![7, 4, 2]);
        assert!(layer_mutation(
            &conv_net(1),
            LayerOp::AddDense {
                position: 1,
                width: 2,
                activation: Activation::Relu,
                noise: 0.0
            },
            &mut rng(0)
        )
        .is_err());
    }

    #[test]
    fn remove_conv_layer_reconciles_downstream() {
        let net = conv_net(2);
        let (out_net, _) =
            layer_mutation(&net, LayerOp::RemoveLayer { position: 1 }, &mut rng(3)).unwrap();
        assert_eq!(out_net.widths(), vec![3, 2]);
        assert_eq!(
            out_net.layers()[2].spec,
            LayerSpec::dense(27, 2, Activation::Linear)
        );
    }
}
