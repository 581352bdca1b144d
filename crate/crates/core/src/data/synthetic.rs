use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::net::{Matrix, Shape};
use crate::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Two interleaved half circles; two classes only.
    Moons,
    /// `C` interleaved spiral arms.
    Spirals,
    /// `C` Gaussian clusters (std `noise`) centred on a circle of radius 4.
    Blobs,
}

/// The four XOR points with their labels.
pub fn gen_xor() -> Dataset {
    let x = Matrix::from_rows(&[
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
    ])
    .expect("static rows");
    Dataset::classification(Shape::Flat(2), x, vec![0, 1, 1, 0], 2).expect("static labels")
}

/// Balanced 2D classification task; class sizes differ by at most one.
///
/// Gaussian noise with standard deviation `noise` is added to both
/// coordinates. The result is a pure function of the arguments.
pub fn gen_synthetic(
    kind: SyntheticKind,
    n: usize,
    noise: f64,
    classes: usize,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 || n < classes {
        return Err(Error::InvalidParams(format!(
            "need n >= classes >= 2, got n={n}, classes={classes}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "noise must be >= 0, got {noise}"
        )));
    }
    if kind == SyntheticKind::Moons && classes != 2 {
        return Err(Error::InvalidParams("moons has exactly 2 classes".into()));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).expect("validated noise");

    let mut samples: Vec<([f64; 2], usize)> = Vec::with_capacity(n);
    for class in 0..classes {
        let count = n / classes + usize::from(class < n % classes);
        for _ in 0..count {
            let [x, y] = match kind {
                SyntheticKind::Moons => {
                    let t = rng.gen_range(0.0..PI);
                    if class == 0 {
                        [t.cos(), t.sin()]
                    } else {
                        [1.0 - t.cos(), 0.5 - t.sin()]
                    }
                }
                SyntheticKind::Spirals => {
                    let r = rng.gen_range(0.05..1.0);
                    let theta = 3.0 * PI * r + 2.0 * PI * class as f64 / classes as f64;
                    [r * theta.cos(), r * theta.sin()]
                }
                SyntheticKind::Blobs => {
                    let a = 2.0 * PI * class as f64 / classes as f64;
                    [4.0 * a.cos(), 4.0 * a.sin()]
                }
            };
            let (dx, dy) = if noise > 0.0 {
                (jitter.sample(&mut rng), jitter.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            samples.push(([x + dx, y + dy], class));
        }
    }
    samples.shuffle(&mut rng);
    let (rows, labels): (Vec<Vec<f64>>, Vec<usize>) =
        samples.into_iter().map(|(p, c)| (p.to_vec(), c)).unzip();
    Dataset::classification(Shape::Flat(2), Matrix::from_rows(&rows)?, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_definition() {
        let d = gen_xor();
        assert_eq!((d.len(), d.classes()), (4, 2));
        let want = [
            ((0.0, 0.0), 0),
            ((0.0, 1.0), 1),
            ((1.0, 0.0), 1),
            ((1.0, 1.0), 0),
        ];
        for (i, ((a, b), y)) in want.into_iter().enumerate() {
            assert_eq!(d.features().row(i), &[a, b]);
            assert_eq!(d.labels().unwrap()[i], y);
        }
    }

    #[test]
    fn blobs_are_balanced() {
        let d = gen_synthetic(SyntheticKind::Blobs, 300, 0.5, 3, 1).unwrap();
        assert_eq!(d.class_counts(), vec![100, 100, 100]);
        let d = gen_synthetic(SyntheticKind::Spirals, 301, 0.1, 3, 1).unwrap();
        assert_eq!(d.class_counts(), vec![101, 100, 100]);
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in [
            SyntheticKind::Moons,
            SyntheticKind::Spirals,
            SyntheticKind::Blobs,
        ] {
            let a = gen_synthetic(kind, 50, 0.2, 2, 42).unwrap();
            let b = gen_synthetic(kind, 50, 0.2, 2, 42).unwrap();
            assert_eq!(a, b);
            let c = gen_synthetic(kind, 50, 0.2, 2, 43).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(gen_synthetic(SyntheticKind::Moons, 10, 0.1, 3, 0).is_err());
        assert!(gen_synthetic(SyntheticKind::Blobs, 2, 0.1, 3, 0).is_err());
        assert!(gen_synthetic(SyntheticKind::Blobs, 20, -1.0, 3, 0).is_err());
        assert!(gen_synthetic(SyntheticKind::Blobs, 20, 0.1, 1, 0).is_err());
    }
}
