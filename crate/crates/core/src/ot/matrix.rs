use rayon::prelude::*;

use super::w2_squared;
use crate::error::{Error, Result};
use crate::matrixio::DistanceMatrix;
use crate::measures::MeasureDataset;
use crate::sampling::{PlanVariant, SamplePlan};

/// Which entries of the distance matrix to compute.
#[derive(Debug, Clone, Copy)]
pub enum MatrixPlan<'a> {
    Full,
    Sampled(&'a SamplePlan),
}

fn pairs_for(n: usize, plan: MatrixPlan<'_>) -> Result<Vec<(usize, usize)>> {
    match plan {
        MatrixPlan::Full => Ok((0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()),
        MatrixPlan::Sampled(p) => {
            if p.n() != n {
                return Err(Error::SizeMismatch(p.n(), n));
            }
            match p.variant() {
                PlanVariant::Entries(pairs) => Ok(pairs.clone()),
                PlanVariant::Columns(cols) => {
                    let mut hit = vec![false; n];
                    for &c in cols {
                        hit[c] = true;
                    }
                    Ok((0..n)
                        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                        .filter(|&(i, j)| hit[i] || hit[j])
                        .collect())
                }
            }
        }
    }
}

/// Computes the planned entries `W2(μᵢ, μⱼ)²` on a pool of `workers` threads.
///
/// Each unordered pair is solved once as `(min, max)` and mirrored, so the
/// output does not depend on the worker count.
pub fn w2_matrix(
    data: &MeasureDataset,
    plan: MatrixPlan<'_>,
    workers: usize,
) -> Result<DistanceMatrix> {
    worker_pool(workers)?.install(|| w2_matrix_in_current_pool(data, plan))
}

pub(crate) fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Same as [`w2_matrix`] but on whatever rayon pool the caller is running in.
pub(crate) fn w2_matrix_in_current_pool(
    data: &MeasureDataset,
    plan: MatrixPlan<'_>,
) -> Result<DistanceMatrix> {
    let n = data.len();
    let pairs = pairs_for(n, plan)?;
    let measures = data.measures();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| w2_squared(&measures[i], &measures[j]))
        .collect::<Result<Vec<f64>>>()?;
    DistanceMatrix::from_entries(n, pairs.iter().zip(values).map(|(&(i, j), v)| (i, j, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixio::MatrixKind;
    use crate::measures::{synth_translation_family, DiscreteMeasure};
    use crate::sampling::{sample_columns, SamplePlan};

    fn three_translations() -> MeasureDataset {
        let base = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        synth_translation_family(&base, &[vec![0.0, 0.0], vec![0.0, 2.0], vec![0.0, 4.0]]).unwrap()
    }

    #[test]
    fn full_translation_matrix() {
        let d = w2_matrix(&three_translations(), MatrixPlan::Full, 2).unwrap();
        let expected = [[0.0, 4.0, 16.0], [4.0, 0.0, 4.0], [16.0, 4.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.get(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
        assert_eq!(d.kind(), MatrixKind::Full);
    }

    #[test]
    fn all_columns_equal_full() {
        let data = three_translations();
        let plan = sample_columns(3, 3, 5).unwrap();
        assert_eq!(
            w2_matrix(&data, MatrixPlan::Sampled(&plan), 1).unwrap(),
            w2_matrix(&data, MatrixPlan::Full, 1).unwrap()
        );
    }

    #[test]
    fn single_entry_plan() {
        let plan = SamplePlan::new(PlanVariant::Entries(vec![(0, 1)]), 0, 3).unwrap();
        let d = w2_matrix(&three_translations(), MatrixPlan::Sampled(&plan), 1).unwrap();
        assert_eq!(d.kind(), MatrixKind::Partial);
        assert_eq!(d.observed_pairs(), vec![(0, 1)]);
        assert!((d.get(1, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn column_plan_observes_rows_too() {
        let plan = SamplePlan::new(PlanVariant::Columns(vec![1]), 0, 3).unwrap();
        let d = w2_matrix(&three_translations(), MatrixPlan::Sampled(&plan), 1).unwrap();
        assert_eq!(d.observed_pairs(), vec![(0, 1), (1, 2)]);
        assert_eq!(d.observed_columns(), vec![1]);
    }

    #[test]
    fn plan_size_must_match() {
        let plan = SamplePlan::new(PlanVariant::Columns(vec![1]), 0, 4).unwrap();
        assert!(w2_matrix(&three_translations(), MatrixPlan::Sampled(&plan), 1).is_err());
    }
}
