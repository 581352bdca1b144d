use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Dataset;
use crate::error::{Error, Result};
use crate::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.validation, self.test];
        if f.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams(
                "split fractions must be positive".into(),
            ));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// (train, validation, test) sizes for `n` samples. Validation and test
    /// are rounded; the remainder goes to train.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let val = (self.validation * n as f64).round() as usize;
        let test = (self.test * n as f64).round() as usize;
        let train = n
            .checked_sub(val + test)
            .ok_or_else(|| Error::InvalidParams(format!("cannot split {n} samples")))?;
        Ok((train, val, test))
    }
}

/// Train/validation/test partition plus the original indices of each part.
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub indices: [Vec<usize>; 3],
}

/// Deterministic shuffled partition; disjoint and exhaustive.
pub fn split_dataset(data: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    let (n_train, n_val, _) = spec.sizes(data.len())?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut StreamRng::seed_from_u64(spec.seed));
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    let train = order;
    Ok(Splits {
        train: data.select(&train),
        validation: data.select(&val),
        test: data.select(&test),
        indices: [train, val, test],
    })
}

impl Splits {
    /// Uses the whole dataset for every part (tiny tasks such as XOR).
    pub fn whole(data: &Dataset) -> Splits {
        let all: Vec<usize> = (0..data.len()).collect();
        Splits {
            train: data.clone(),
            validation: data.clone(),
            test: data.clone(),
            indices: [all.clone(), all.clone(), all],
        }
    }

    /// Standardizes every feature to zero mean and unit variance using
    /// train-split statistics only. Constant features are only centred.
    pub fn standardize(&mut self) {
        let n = self.train.len();
        if n == 0 {
            return;
        }
        let d = self.train.features().cols();
        let mut mean = vec![0.0; d];
        let mut var = vec![0.0; d];
        for r in 0..n {
            for (m, &v) in mean.iter_mut().zip(self.train.features().row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        for r in 0..n {
            for ((s, &v), m) in var.iter_mut().zip(self.train.features().row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        for part in [&mut self.train, &mut self.validation, &mut self.test] {
            let m = part.features_mut();
            for r in 0..m.rows() {
                for ((v, mu), sd) in m.row_mut(r).iter_mut().zip(&mean).zip(&std) {
                    *v = (*v - mu) / sd;
                }
            }
        }
    }

    /// Short hex digest of the three index lists; equal digests mean equal
    /// partitions.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for part in &self.indices {
            h.update((part.len() as u64).to_le_bytes());
            for &i in part {
                h.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticKind};
    use proptest::prelude::*;

    fn blobs(n: usize) -> Dataset {
        gen_synthetic(SyntheticKind::Blobs, n, 0.3, 2, 5).unwrap()
    }

    #[test]
    fn canonical_sizes() {
        let s = split_dataset(&blobs(100), &SplitSpec::default()).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (80, 10, 10)
        );
    }

    #[test]
    fn same_seed_same_partition() {
        let d = blobs(60);
        let spec = SplitSpec {
            seed: 11,
            ..SplitSpec::default()
        };
        let a = split_dataset(&d, &spec).unwrap();
        let b = split_dataset(&d, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        let c = split_dataset(&d, &SplitSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn invalid_fractions() {
        let d = blobs(10);
        for (a, b, c) in [(0.5, 0.5, 0.0), (0.5, 0.3, 0.3), (-0.2, 0.6, 0.6)] {
            let spec = SplitSpec {
                train: a,
                validation: b,
                test: c,
                seed: 0,
            };
            assert!(matches!(
                split_dataset(&d, &spec),
                Err(Error::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn standardize_uses_train_statistics() {
        let mut s = split_dataset(&blobs(200), &SplitSpec::default()).unwrap();
        s.standardize();
        let f = s.train.features();
        for c in 0..f.cols() {
            let col: Vec<f64> = (0..f.rows()).map(|r| f.row(r)[c]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn partitions_are_disjoint_exhaustive_and_sized(
            n in 3usize..300,
            v in 0.05f64..0.4,
            t in 0.05f64..0.4,
            seed in any::<u64>(),
        ) {
            let spec = SplitSpec { train: 1.0 - v - t, validation: v, test: t, seed };
            let d = gen_synthetic(SyntheticKind::Blobs, n.max(2), 0.1, 2, 1).unwrap();
            let s = split_dataset(&d, &spec).unwrap();
            let mut all: Vec<usize> = s.indices.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
            prop_assert_eq!(s.validation.len(), (v * d.len() as f64).round() as usize);
            prop_assert_eq!(s.test.len(), (t * d.len() as f64).round() as usize);
            prop_assert_eq!(s.train.len() + s.validation.len() + s.test.len(), d.len());
        }
    }
}
