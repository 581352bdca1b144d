//! Desk-scale tasks: XOR, two-moons, spirals, Gaussian blobs, and MNIST
//! subsets from IDX files, with deterministic splits.

mod dataset;
mod idx;
mod split;
mod synthetic;

pub use dataset::{Dataset, Task};
pub use idx::{encode_idx, load_idx, parse_idx, write_idx, IMAGES_MAGIC, LABELS_MAGIC};
pub use split::{split_dataset, SplitSpec, Splits};
pub use synthetic::{gen_synthetic, gen_xor, SyntheticKind};
