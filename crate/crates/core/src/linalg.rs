//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, eigenvalues in nonincreasing order.
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Columns are unit eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> SortedEigen {
    let n = a.nrows();
    if n == 0 {
        return SortedEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

/// Makes the first entry of each column with magnitude above `1e-10` positive.
pub fn fix_column_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-10) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn column_means(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows().max(1) as f64;
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / n))
}
