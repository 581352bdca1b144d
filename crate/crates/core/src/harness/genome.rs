use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evolution::Genome;
use crate::net::{Layer, LayerSpec, Network, Shape};

pub const GENOME_FORMAT: &str = "neurodarwin-genome";
pub const GENOME_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LayerDoc {
    spec: LayerSpec,
    weights: Vec<f64>,
    bias: Vec<f64>,
    /// Run-length encoded: `[[alive, run], ...]`.
    mask: Vec<(bool, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NetworkDoc {
    input: Shape,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeDoc {
    format: String,
    version: u32,
    id: u64,
    parents: Vec<u64>,
    learning_rate: f64,
    input: Shape,
    layers: Vec<LayerDoc>,
}

fn encode_mask(mask: &[bool]) -> Vec<(bool, usize)> {
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &m in mask {
        match runs.last_mut() {
            Some((v, n)) if *v == m => *n += 1,
            _ => runs.push((m, 1)),
        }
    }
    runs
}

fn decode_mask(runs: &[(bool, usize)], expected: usize) -> Result<Vec<bool>> {
    let total: usize = runs.iter().map(|&(_, n)| n).sum();
    if total != expected {
        return Err(Error::SchemaViolation(format!(
            "mask covers {total} weights, layer has {expected}"
        )));
    }
    Ok(runs
        .iter()
        .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
        .collect())
}

fn layer_doc(layer: &Layer) -> LayerDoc {
    LayerDoc {
        spec: layer.spec,
        weights: layer.weights.clone(),
        bias: layer.bias.clone(),
        mask: encode_mask(&layer.mask),
    }
}

fn build_network(input: Shape, layers: Vec<LayerDoc>) -> Result<Network> {
    let layers = layers
        .into_iter()
        .map(|d| {
            let mask = decode_mask(&d.mask, d.weights.len())?;
            Ok(Layer {
                spec: d.spec,
                weights: d.weights,
                bias: d.bias,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Network::from_layers(input, layers).map_err(|e| Error::SchemaViolation(e.to_string()))
}

pub(crate) fn network_doc(net: &Network) -> NetworkDoc {
    NetworkDoc {
        input: net.input_shape(),
        layers: net.layers().iter().map(layer_doc).collect(),
    }
}

pub(crate) fn network_from_doc(doc: NetworkDoc) -> Result<Network> {
    build_network(doc.input, doc.layers)
}

/// Self-describing JSON document. Weights use shortest round-trip decimal
/// form, so reading it back is bit-exact.
pub fn serialize_genome(genome: &Genome) -> String {
    let doc = GenomeDoc {
        format: GENOME_FORMAT.into(),
        version: GENOME_VERSION,
        id: genome.id,
        parents: genome.parents.clone(),
        learning_rate: genome.learning_rate,
        input: genome.network.input_shape(),
        layers: genome.network.layers().iter().map(layer_doc).collect(),
    };
    serde_json::to_string(&doc).expect("genome documents always serialize")
}

/// Parses and fully validates a genome document.
pub fn deserialize_genome(text: &str) -> Result<Genome> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::SchemaViolation("document is not an object".into()))?;
    match obj.get("format").and_then(Value::as_str) {
        Some(GENOME_FORMAT) => {}
        other => {
            return Err(Error::SchemaViolation(format!(
                "format is {other:?}, expected {GENOME_FORMAT:?}"
            )))
        }
    }
    let version = obj
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::SchemaViolation("missing or non-integer version".into()))?;
    if version != u64::from(GENOME_VERSION) {
        return Err(Error::VersionMismatch {
            expected: GENOME_VERSION,
            found: version,
        });
    }
    let doc: GenomeDoc =
        serde_json::from_value(value).map_err(|e| Error::SchemaViolation(e.to_string()))?;
    if !doc.learning_rate.is_finite() || doc.learning_rate <= 0.0 {
        return Err(Error::SchemaViolation(
            "learning_rate must be positive".into(),
        ));
    }
    Ok(Genome {
        id: doc.id,
        parents: doc.parents,
        network: build_network(doc.input, doc.layers)?,
        learning_rate: doc.learning_rate,
    })
}

pub fn write_genome(path: impl AsRef<Path>, genome: &Genome) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_genome(genome) + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_genome(path: impl AsRef<Path>) -> Result<Genome> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize_genome(&text)
}
