//! Column-sampled completion: `D_est = C U† Cᵀ`.
//!
//! `C = D(:, I)` holds `c` fully computed columns and `U = D(I, I)` is the
//! core block they share. When `rank(U) = rank(D)` the product reproduces `D`
//! exactly. The pseudoinverse drops eigenvalues of `U` below
//! `pinv_tolerance · max |λ|`, and the product is never rank-truncated.
//!
//! Also home to two diagnostics used when judging column sampling: the
//! incoherence of a matrix and the Procrustes distance between embeddings.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_means, sorted_symmetric_eigen, spectral_norm};
use crate::matrixio::DistanceMatrix;
use crate::mc::sanitize;
use crate::sampling::{PlanVariant, SamplePlan};

/// Sampled columns `C = D(:, I)` and their core `U = D(I, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBlock {
    columns: DMatrix<f64>,
    indices: Vec<usize>,
    core: DMatrix<f64>,
}

impl ColumnBlock {
    pub fn new(columns: DMatrix<f64>, indices: Vec<usize>) -> Result<Self> {
        let (n, c) = columns.shape();
        if c == 0 || c != indices.len() {
            return Err(Error::InvariantViolation(format!(
                "{c} columns for {} indices",
                indices.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::IndexOutOfRange(i, i));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvariantViolation(format!("column {i} repeated")));
            }
        }
        let core = DMatrix::from_fn(c, c, |a, b| columns[(indices[a], b)]);
        let scale = core.amax().max(f64::MIN_POSITIVE);
        for a in 0..c {
            if core[(a, a)] != 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "core diagonal entry {a} is {}",
                    core[(a, a)]
                )));
            }
            for b in a + 1..c {
                if (core[(a, b)] - core[(b, a)]).abs() > 1e-12 * scale {
                    return Err(Error::InvariantViolation(format!(
                        "core asymmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self {
            columns,
            indices,
            core,
        })
    }

    /// Extracts the block from a matrix in which the given columns are observed.
    pub fn from_matrix(d: &DistanceMatrix, indices: &[usize]) -> Result<Self> {
        let n = d.n();
        for &j in indices {
            if j >= n {
                return Err(Error::IndexOutOfRange(j, j));
            }
            if let Some(i) = (0..n).find(|&i| !d.is_observed(i, j)) {
                return Err(Error::InvariantViolation(format!(
                    "column {j} is not observed at row {i}"
                )));
            }
        }
        let columns = DMatrix::from_fn(n, indices.len(), |i, k| d.get(i, indices[k]));
        Self::new(columns, indices.to_vec())
    }

    pub fn from_plan(d: &DistanceMatrix, plan: &SamplePlan) -> Result<Self> {
        match plan.variant() {
            PlanVariant::Columns(cols) => Self::from_matrix(d, cols),
            PlanVariant::Entries(_) => Err(Error::Config(
                "column completion needs a column plan".into(),
            )),
        }
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    pub fn n(&self) -> usize {
        self.columns.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NystromOptions {
    /// Relative cutoff for the core's pseudoinverse.
    pub pinv_tolerance: f64,
    /// Overwrite the sampled rows and columns of the estimate with their observed values.
    pub reimpose_observed: bool,
}

impl Default for NystromOptions {
    fn default() -> Self {
        Self {
            pinv_tolerance: 1e-10,
            reimpose_observed: false,
        }
    }
}

/// `C U† Cᵀ` for any symmetric core `U`, using the eigendecomposition of `U`.
///
/// Returns `None` when `U` is identically zero.
pub fn nystrom_product(
    columns: &DMatrix<f64>,
    core: &DMatrix<f64>,
    pinv_tolerance: f64,
) -> Option<DMatrix<f64>> {
    let eig = sorted_symmetric_eigen(core);
    let top = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k].abs() > pinv_tolerance * top)
        .collect();
    let basis = DMatrix::from_fn(core.nrows(), keep.len(), |r, k| eig.vectors[(r, keep[k])]);
    let projected = columns * basis;
    let mut scaled = projected.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col /= eig.values[keep[k]];
    }
    Some(scaled * projected.transpose())
}

/// Completes the distance matrix from a column block.
///
/// The diagonal is set to zero, the product is symmetrized and negative
/// off-diagonal values are clamped to zero.
pub fn complete_nystrom(block: &ColumnBlock, opts: &NystromOptions) -> Result<DistanceMatrix> {
    let n = block.n();
    let c = block.indices.len();
    let product = if c == n {
        // every column observed: C U† Cᵀ = D D† D = D
        let mut d = DMatrix::zeros(n, n);
        for (k, &j) in block.indices.iter().enumerate() {
            d.set_column(j, &block.columns.column(k));
        }
        d
    } else {
        match nystrom_product(&block.columns, &block.core, opts.pinv_tolerance) {
            Some(p) => p,
            None if block.columns.amax() == 0.0 => DMatrix::zeros(n, n),
            None => return Err(Error::DegenerateCore),
        }
    };
    let mut product = product;
    if opts.reimpose_observed {
        for (k, &j) in block.indices.iter().enumerate() {
            for i in 0..n {
                product[(i, j)] = block.columns[(i, k)];
                product[(j, i)] = block.columns[(i, k)];
            }
        }
    }
    sanitize(product)
}

/// `√(N/r) · maxᵢ ‖V_r(i, :)‖` for the top-`r` singular subspace of a symmetric matrix.
pub fn incoherence_of(d: &DMatrix<f64>, r: usize) -> Result<f64> {
    let n = d.nrows();
    if r == 0 || r > n {
        return Err(Error::RankOutOfRange { rank: r, max: n });
    }
    // singular vectors of a symmetric matrix are its eigenvectors ordered by |λ|
    let eig = sorted_symmetric_eigen(d);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.values[b]
            .abs()
            .total_cmp(&eig.values[a].abs())
            .then(a.cmp(&b))
    });
    let max_row = (0..n)
        .map(|i| {
            order[..r]
                .iter()
                .map(|&k| eig.vectors[(i, k)].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok((n as f64 / r as f64).sqrt() * max_row)
}

pub fn incoherence(d: &DistanceMatrix, r: usize) -> Result<f64> {
    if d.mask().iter().any(|&m| !m) {
        return Err(Error::WrongKind(d.kind().name()));
    }
    incoherence_of(d.values(), r)
}

/// Orthogonal Procrustes alignment of row-vector configurations.
///
/// Finds `R ∈ O(d)` from the SVD of `YᵀZ` and returns the spectral norm of
/// `Z − YR` together with `R`.
pub fn procrustes_align(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    if z.shape() != y.shape() {
        return Err(Error::ShapeMismatch(z.shape(), y.shape()));
    }
    for m in [z, y] {
        let tol = 1e-8 * m.amax().max(1.0);
        let worst = column_means(m).amax();
        if worst > tol {
            return Err(Error::NotCentered(worst));
        }
    }
    let svd = (y.transpose() * z).svd(true, true);
    let rotation = svd.u.unwrap() * svd.v_t.unwrap();
    let residual = z - y * &rotation;
    Ok((spectral_norm(&residual), rotation))
}

pub fn procrustes_distance(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    procrustes_align(z, y).map(|(d, _)| d)
}
