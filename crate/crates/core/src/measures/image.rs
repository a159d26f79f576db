use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// A 2-D grid of nonnegative intensities, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GridImage {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Format(format!(
                "image {rows}x{cols} with {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Format(format!(
                "pixel value {v} is not a nonnegative real"
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Format("ragged pixel rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }
}

/// Measure supported on the `(row, col)` coordinates of pixels brighter than
/// `threshold`, with mass proportional to intensity.
pub fn measure_from_grid_image(image: &GridImage, threshold: f64) -> Result<DiscreteMeasure> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for r in 0..image.rows {
        for c in 0..image.cols {
            let v = image.get(r, c);
            if v > threshold {
                points.push(vec![r as f64, c as f64]);
                weights.push(v);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::AllPixelsBelowThreshold(threshold));
    }
    DiscreteMeasure::new(points, weights)
}
