//! Discrete probability measures and datasets of them.
//!
//! A [`DiscreteMeasure`] is a weighted point cloud `Σ αᵢ δ_{xᵢ}` in ℝⁿ. Weights
//! are normalized at construction and zero-weight atoms are dropped, so every
//! measure handed to the transport solver has strictly positive marginals.

mod image;
pub mod io;
mod synth;

pub use image::{measure_from_grid_image, GridImage};
pub use synth::{
    synth_dilation_family, synth_shear_family, synth_translation_family, SyntheticSpec,
};

use crate::error::{Error, Result};

/// Weighted point cloud representing a probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    // row-major, `len() == weights.len() * dim`
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from support points and nonnegative weights.
    ///
    /// Weights are rescaled to sum to one; atoms with zero weight are removed.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidMeasure(
                "measure needs at least one point of dimension >= 1".into(),
            ));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        let mut kept = Vec::with_capacity(weights.len());
        for (p, &w) in points.iter().zip(&weights) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure("non-finite coordinate".into()));
            }
            if w > 0.0 {
                flat.extend_from_slice(p);
                kept.push(w);
            }
        }
        Self::from_flat(dim, flat, kept)
    }

    /// Uniform weights on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        Self::new(points, vec![1.0; m])
    }

    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    fn from_flat(dim: usize, points: Vec<f64>, mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }
        let total = neumaier_sum(&weights);
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms m.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when all weights coincide up to 1e-12.
    pub fn is_uniform(&self) -> bool {
        let target = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - target).abs() <= 1e-12)
    }

    /// Copy with every support point mapped through `f`; weights unchanged.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let points = self.points().map(&mut f).collect();
        Self::new(points, self.weights.clone())
    }
}

/// Compensated summation, used where weights must total one to 1e-12.
pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A labeled or unlabeled collection of measures sharing one ambient dimension.
#[derive(Debug, Clone)]
pub struct MeasureDataset {
    measures: Vec<DiscreteMeasure>,
    labels: Option<Vec<i64>>,
    name: String,
}

impl MeasureDataset {
    pub fn new(
        name: impl Into<String>,
        measures: Vec<DiscreteMeasure>,
        labels: Option<Vec<i64>>,
    ) -> Result<Self> {
        if measures.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 measures, got {}",
                measures.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != measures.len() {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {} measures",
                    l.len(),
                    measures.len()
                )));
            }
        }
        let dim = measures[0].dim();
        if let Some(bad) = measures.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self {
            measures,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.measures.len() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} measures",
                labels.len(),
                self.measures.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }
}
