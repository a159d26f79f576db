//! The [`DistanceMatrix`] type, its observation mask, and persistence.
//!
//! Binary layout (all integers and floats little endian):
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 8            | magic `W2DMAT01`                          |
//! | 8            | `N` as `u64`                              |
//! | 8·N²         | values, row-major `f64`                   |
//! | N²           | mask, one byte per entry (0 or 1)         |
//! | 1            | kind: 0 = Full, 1 = Partial, 2 = Estimated |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"W2DMAT01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Full,
    Partial,
    Estimated,
}

impl MatrixKind {
    fn code(self) -> u8 {
        match self {
            MatrixKind::Full => 0,
            MatrixKind::Partial => 1,
            MatrixKind::Estimated => 2,
        }
    }

    fn from_code(b: u8) -> Option<Self> {
        match b {
            0 => Some(MatrixKind::Full),
            1 => Some(MatrixKind::Partial),
            2 => Some(MatrixKind::Estimated),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Full => "full",
            MatrixKind::Partial => "partial",
            MatrixKind::Estimated => "estimated",
        }
    }
}

/// Symmetric matrix of squared distances with zero diagonal.
///
/// Unobserved entries of a `Partial` matrix hold 0, so `values()` is exactly
/// the projection `P_Ω(D)` reflected across the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    // row-major
    mask: Vec<bool>,
    kind: MatrixKind,
}

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>, mask: Vec<bool>, kind: MatrixKind) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::InvariantViolation(format!(
                "matrix is {}x{}, not square",
                n,
                values.ncols()
            )));
        }
        if mask.len() != n * n {
            return Err(Error::InvariantViolation(
                "mask size differs from matrix".into(),
            ));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 || !mask[i * n + i] {
                return Err(Error::InvariantViolation(format!(
                    "diagonal entry {i} is not an observed zero"
                )));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvariantViolation(format!(
                        "entry ({i}, {j}) is {v}"
                    )));
                }
                if j > i && (v != values[(j, i)] || mask[i * n + j] != mask[j * n + i]) {
                    return Err(Error::InvariantViolation(format!(
                        "asymmetric at ({i}, {j})"
                    )));
                }
                let observed = mask[i * n + j];
                if !observed {
                    if kind != MatrixKind::Partial {
                        return Err(Error::InvariantViolation(format!(
                            "{} matrix has unobserved entry ({i}, {j})",
                            kind.name()
                        )));
                    }
                    if v != 0.0 {
                        return Err(Error::InvariantViolation(format!(
                            "unobserved entry ({i}, {j}) holds {v}"
                        )));
                    }
                } else if kind != MatrixKind::Estimated && v < 0.0 {
                    return Err(Error::InvariantViolation(format!(
                        "negative distance {v} at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { values, mask, kind })
    }

    pub fn full(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::new(values, vec![true; n * n], MatrixKind::Full)
    }

    pub fn estimated(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::new(values, vec![true; n * n], MatrixKind::Estimated)
    }

    /// Builds a matrix from observed upper-or-lower entries `(i, j, value)`.
    ///
    /// The result is `Full` when every off-diagonal pair is observed and
    /// `Partial` otherwise.
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut values = DMatrix::zeros(n, n);
        let mut mask = vec![false; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
        }
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange(i, j));
            }
            if i == j {
                continue;
            }
            values[(i, j)] = v;
            values[(j, i)] = v;
            mask[i * n + j] = true;
            mask[j * n + i] = true;
        }
        let kind = if mask.iter().all(|&m| m) {
            MatrixKind::Full
        } else {
            MatrixKind::Partial
        };
        Self::new(values, mask, kind)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, n),
            mask: vec![true; n * n],
            kind: MatrixKind::Full,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n() + j]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Observed strictly-upper-triangular pairs in row-major order.
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_observed(i, j))
            .collect()
    }

    /// Indices of columns whose every entry is observed.
    pub fn observed_columns(&self) -> Vec<usize> {
        let n = self.n();
        (0..n)
            .filter(|&j| (0..n).all(|i| self.is_observed(i, j)))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n();
        let mut out = Vec::with_capacity(17 + 9 * n * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for i in 0..n {
            for j in 0..n {
                out.extend_from_slice(&self.values[(i, j)].to_le_bytes());
            }
        }
        out.extend(self.mask.iter().map(|&m| m as u8));
        out.push(self.kind.code());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let n = usize::try_from(n).map_err(|_| Error::Format("size overflows".into()))?;
        let nn = n
            .checked_mul(n)
            .ok_or_else(|| Error::Format("size overflows".into()))?;
        let expected = nn
            .checked_mul(9)
            .and_then(|x| x.checked_add(17))
            .ok_or_else(|| Error::Format("size overflows".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} bytes for N = {n}, found {}",
                bytes.len()
            )));
        }
        let payload = &bytes[16..16 + 8 * nn];
        let values = DMatrix::from_row_iterator(
            n,
            n,
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
        let mask_bytes = &bytes[16 + 8 * nn..16 + 9 * nn];
        let mask = mask_bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::Format(format!("mask byte {b}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let kind = MatrixKind::from_code(bytes[expected - 1])
            .ok_or_else(|| Error::Format(format!("kind byte {}", bytes[expected - 1])))?;
        Self::new(values, mask, kind).map_err(|e| match e {
            Error::InvariantViolation(msg) => Error::Format(msg),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Lossy text export with header `i,j,value`; unobserved entries are empty.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::from("i,j,value\n");
        for i in 0..n {
            for j in 0..n {
                if self.is_observed(i, j) {
                    let _ = writeln!(out, "{i},{j},{}", self.values[(i, j)]);
                } else {
                    let _ = writeln!(out, "{i},{j},");
                }
            }
        }
        out
    }
}

/// `‖estimate − truth‖_F / ‖truth‖_F`.
pub fn relative_error(estimate: &DistanceMatrix, truth: &DistanceMatrix) -> Result<f64> {
    if estimate.n() != truth.n() {
        return Err(Error::SizeMismatch(estimate.n(), truth.n()));
    }
    if truth.kind() != MatrixKind::Full {
        return Err(Error::WrongKind(truth.kind().name()));
    }
    let denom = truth.values().norm();
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    Ok((estimate.values() - truth.values()).norm() / denom)
}
