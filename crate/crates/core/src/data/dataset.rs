use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Matrix, Shape, Targets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Labelled samples: one feature row per sample plus class or value targets.
///
/// Image tasks keep their `C×H×W` layout in `input` and store each image as
/// one flattened row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    input: Shape,
    features: Matrix,
    targets: Targets,
    classes: usize,
}

impl Dataset {
    pub fn classification(
        input: Shape,
        features: Matrix,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidParams(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let ds = Dataset {
            input,
            features,
            targets: Targets::Classes(labels),
            classes,
        };
        ds.check()?;
        Ok(ds)
    }

    pub fn regression(input: Shape, features: Matrix, values: Matrix) -> Result<Self> {
        let classes = values.cols();
        let ds = Dataset {
            input,
            features,
            targets: Targets::Values(values),
            classes,
        };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        if self.features.cols() != self.input.len() {
            return Err(Error::shape(format!(
                "feature width {} does not match input shape {:?}",
                self.features.cols(),
                self.input
            )));
        }
        if self.features.rows() != self.targets.len() {
            return Err(Error::shape("feature and target counts differ"));
        }
        if self.features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("features must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub(crate) fn features_mut(&mut self) -> &mut Matrix {
        &mut self.features
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classes(l) => Some(l),
            Targets::Values(_) => None,
        }
    }

    /// Class count, or output width for regression.
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn task(&self) -> Task {
        match self.targets {
            Targets::Classes(_) => Task::Classification,
            Targets::Values(_) => Task::Regression,
        }
    }

    /// Widens the class count (e.g. 10 for MNIST when a subset misses a digit).
    pub fn with_classes(mut self, classes: usize) -> Result<Self> {
        if let Some(labels) = self.labels() {
            if labels.iter().any(|&l| l >= classes) {
                return Err(Error::InvalidParams(format!(
                    "labels exceed requested class count {classes}"
                )));
            }
        }
        self.classes = classes;
        Ok(self)
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            input: self.input,
            features: self.features.select_rows(indices),
            targets: self.targets.select(indices),
            classes: self.classes,
        }
    }

    /// Per-class sample counts (classification only).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        if let Some(labels) = self.labels() {
            for &l in labels {
                counts[l] += 1;
            }
        }
        counts
    }
}
