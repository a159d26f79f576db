//! Classical multidimensional scaling.
//!
//! `B = −½ H D H` with `H = I − (1/N)𝟙𝟙ᵀ`; coordinates are `v_k √max(λ_k, 0)`
//! for the `d` algebraically largest eigenpairs of `B`. Eigenvector signs are
//! fixed so the first entry above 1e-10 in magnitude is positive, which makes
//! the output deterministic.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fix_column_signs, sorted_symmetric_eigen, SortedEigen};
use crate::matrixio::DistanceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Row `i` is the embedded point `zᵢ`.
    pub coords: DMatrix<f64>,
    pub meta: EmbeddingMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub dimension: usize,
    /// Retained eigenvalues of `B`, nonincreasing; negative ones give zero coordinates.
    pub eigenvalues: Vec<f64>,
    /// Share of the singular values of `B` retained by the first `dimension`.
    pub spectrum_energy: f64,
    /// `Σ|λ_k < 0| / Σ|λ_k|` over the whole spectrum of `B`.
    pub negative_tail_mass: f64,
}

impl Embedding {
    pub fn dimension(&self) -> usize {
        self.meta.dimension
    }

    /// CSV with header `index,z1,…,zd` and an optional trailing `label` column.
    pub fn to_csv(&self, labels: Option<&[i64]>) -> String {
        let d = self.dimension();
        let mut out = String::from("index");
        for k in 1..=d {
            let _ = write!(out, ",z{k}");
        }
        if labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for i in 0..self.coords.nrows() {
            let _ = write!(out, "{i}");
            for k in 0..d {
                let _ = write!(out, ",{}", self.coords[(i, k)]);
            }
            if let Some(l) = labels {
                let _ = write!(out, ",{}", l[i]);
            }
            out.push('\n');
        }
        out
    }
}

/// Reads the output of [`Embedding::to_csv`] back into coordinates and optional labels.
pub fn parse_embedding_csv(text: &str) -> Result<(DMatrix<f64>, Option<Vec<i64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("empty embedding file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    if header.first() != Some(&"index") {
        return Err(Error::Format(
            "embedding header must start with `index`".into(),
        ));
    }
    let has_label = header.last() == Some(&"label");
    let dim = header.len() - 1 - usize::from(has_label);
    if dim == 0 {
        return Err(Error::Format("embedding has no coordinate columns".into()));
    }
    let bad = |l: &str| Error::Format(format!("bad embedding row `{l}`"));
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() || fields[0].parse::<usize>().ok() != Some(row) {
            return Err(bad(line));
        }
        for f in &fields[1..=dim] {
            values.push(f.parse::<f64>().map_err(|_| bad(line))?);
        }
        if has_label {
            labels.push(fields[dim + 1].parse::<i64>().map_err(|_| bad(line))?);
        }
    }
    let n = values.len() / dim;
    Ok((
        DMatrix::from_row_slice(n, dim, &values),
        has_label.then_some(labels),
    ))
}

/// `−½ H D H`, computed from row, column and grand means.
pub fn double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = d.row_iter().map(|r| r.sum() / nf).collect();
    let col_means: Vec<f64> = d.column_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d[(i, j)] - row_means[i] - col_means[j] + grand)
    })
}

/// Eigendecomposition of the double-centered matrix, reusable for several dimensions.
pub struct MdsSpectrum {
    eig: SortedEigen,
    n: usize,
}

impl MdsSpectrum {
    pub fn new(d: &DistanceMatrix) -> Result<Self> {
        if d.mask().iter().any(|&m| !m) {
            return Err(Error::WrongKind(d.kind().name()));
        }
        Ok(Self::of_matrix(d.values()))
    }

    pub fn of_matrix(d: &DMatrix<f64>) -> Self {
        let b = double_center(d);
        Self {
            eig: sorted_symmetric_eigen(&b),
            n: d.nrows(),
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    /// Singular values of `B`, nonincreasing.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.eig.values.iter().map(|v| v.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    fn energy_of(&self, d: usize) -> f64 {
        let s = self.singular_values();
        let total: f64 = s.iter().sum();
        if total == 0.0 {
            1.0
        } else {
            s[..d.min(s.len())].iter().sum::<f64>() / total
        }
    }

    pub fn negative_tail_mass(&self) -> f64 {
        let total: f64 = self.eig.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.eig
            .values
            .iter()
            .filter(|v| **v < 0.0)
            .map(|v| -v)
            .sum::<f64>()
            / total
    }

    /// Smallest `d` whose leading singular values reach `energy` of the total.
    pub fn choose_dimension(&self, energy: f64) -> usize {
        let max_dim = self.n.saturating_sub(1).max(1);
        let s = self.singular_values();
        let total: f64 = s.iter().sum();
        if total == 0.0 {
            return 1;
        }
        let target = energy * total * (1.0 - 1e-12);
        let mut acc = 0.0;
        for (k, v) in s.iter().enumerate() {
            acc += v;
            if acc >= target {
                return (k + 1).clamp(1, max_dim);
            }
        }
        max_dim
    }

    pub fn embed(&self, dim: usize) -> Result<Embedding> {
        let max = self.n.saturating_sub(1);
        if dim == 0 || dim > max {
            return Err(Error::DimensionOutOfRange { dim, max });
        }
        let mut vectors = self.eig.vectors.columns(0, dim).into_owned();
        fix_column_signs(&mut vectors);
        let eigenvalues: Vec<f64> = self.eig.values[..dim].to_vec();
        for (k, mut col) in vectors.column_iter_mut().enumerate() {
            col *= eigenvalues[k].max(0.0).sqrt();
        }
        Ok(Embedding {
            coords: vectors,
            meta: EmbeddingMeta {
                dimension: dim,
                spectrum_energy: self.energy_of(dim),
                negative_tail_mass: self.negative_tail_mass(),
                eigenvalues,
            },
        })
    }
}

pub fn mds(d: &DistanceMatrix, dim: usize) -> Result<Embedding> {
    MdsSpectrum::new(d)?.embed(dim)
}

pub fn choose_dimension(d: &DistanceMatrix, energy: f64) -> Result<usize> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::Config(format!(
            "energy must lie in (0, 1], got {energy}"
        )));
    }
    Ok(MdsSpectrum::new(d)?.choose_dimension(energy))
}
