//! Dataset containers, file loaders, fold construction and synthetic data.

mod beats;
mod folds;
pub mod npy;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classical::Tensor;
use crate::error::{Error, Result};

pub use beats::{load_beats_csv, BEAT_FEATURES};
pub use folds::{make_folds, Fold, FoldPlan};
pub use npy::{load_npz, write_npz, NpyArray};

/// Labelled samples; `samples` has shape `[n, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Tensor,
    labels: Vec<u8>,
    subject_ids: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(samples: Tensor, labels: Vec<u8>, subject_ids: Option<Vec<i64>>) -> Result<Self> {
        let n = samples.batch();
        if samples.shape().len() < 2 {
            return Err(Error::Shape(format!(
                "samples need shape [n, ...], got {:?}",
                samples.shape()
            )));
        }
        if labels.len() != n {
            return Err(Error::Length {
                what: "labels",
                expected: n,
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Invalid(format!("label {bad} is not binary")));
        }
        if let Some(ids) = &subject_ids {
            if ids.len() != n {
                return Err(Error::Length {
                    what: "subject ids",
                    expected: n,
                    got: ids.len(),
                });
            }
        }
        Ok(Self {
            samples,
            labels,
            subject_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subject_ids(&self) -> Option<&[i64]> {
        self.subject_ids.as_deref()
    }

    /// Shape of one sample, without the batch axis.
    pub fn sample_shape(&self) -> &[usize] {
        &self.samples.shape()[1..]
    }

    /// `[negatives, positives]`
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - pos, pos]
    }

    /// Gathers the given rows into a batch tensor plus their labels.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Vec<u8>) {
        let row = self.samples.row_len();
        let mut data = Vec::with_capacity(indices.len() * row);
        for &i in indices {
            data.extend_from_slice(self.samples.row(i));
        }
        let mut shape = self.samples.shape().to_vec();
        shape[0] = indices.len();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (
            Tensor::new(shape, data).expect("gathered rows match shape"),
            labels,
        )
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let (samples, labels) = self.gather(indices);
        let subject_ids = self
            .subject_ids
            .as_ref()
            .map(|ids| indices.iter().map(|&i| ids[i]).collect());
        Self {
            samples,
            labels,
            subject_ids,
        }
    }

    /// Stacks datasets with identical sample shapes. Subject ids survive only
    /// when every part has them.
    pub fn concat(parts: &[Dataset]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Invalid("nothing to concatenate".into()))?;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut ids = Some(Vec::new());
        for p in parts {
            if p.sample_shape() != first.sample_shape() {
                return Err(Error::Shape(format!(
                    "cannot stack samples {:?} with {:?}",
                    p.sample_shape(),
                    first.sample_shape()
                )));
            }
            data.extend_from_slice(p.samples.data());
            labels.extend_from_slice(&p.labels);
            ids = match (ids, &p.subject_ids) {
                (Some(mut acc), Some(s)) => {
                    acc.extend_from_slice(s);
                    Some(acc)
                }
                _ => None,
            };
        }
        let mut shape = first.samples.shape().to_vec();
        shape[0] = labels.len();
        Self::new(Tensor::new(shape, data)?, labels, ids)
    }
}

/// Two isotropic unit-variance Gaussian classes whose means sit at
/// `∓separation/2` along the normalized all-ones direction. Classes are
/// balanced and rows shuffled.
pub fn synth_blobs(n: usize, dim: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || !n.is_multiple_of(2) || dim == 0 {
        return Err(Error::Invalid(format!(
            "synth_blobs needs even n > 0 and dim ≥ 1, got n={n}, dim={dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| (i >= n / 2) as u8).collect();
    labels.shuffle(&mut rng);
    let offset = separation / 2.0 / (dim as f64).sqrt();
    let mut data = Vec::with_capacity(n * dim);
    for &label in &labels {
        let shift = if label == 1 { offset } else { -offset };
        for _ in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(z + shift);
        }
    }
    Dataset::new(Tensor::new(vec![n, dim], data)?, labels, None)
}
