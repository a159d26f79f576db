//! Synthetic measure families with known transport geometry.
//!
//! Translating a fixed base measure by vectors `sₖ` gives
//! `W2(μᵢ, μⱼ) = ‖sᵢ − sⱼ‖`, so the squared distance matrix is an exact
//! Euclidean distance matrix of the shifts. Dilations and shears of a base
//! measure are also exposed for building less trivial datasets.

use rand::Rng;

use super::{DiscreteMeasure, MeasureDataset};
use crate::error::{Error, Result};
use crate::seed;

/// Translate `base` by every shift in turn.
pub fn synth_translation_family(
    base: &DiscreteMeasure,
    shifts: &[Vec<f64>],
) -> Result<MeasureDataset> {
    let measures = shifts
        .iter()
        .map(|s| {
            if s.len() != base.dim() {
                return Err(Error::DimensionMismatch {
                    expected: base.dim(),
                    got: s.len(),
                });
            }
            base.map_points(|p| p.iter().zip(s).map(|(x, t)| x + t).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    MeasureDataset::new("translations", measures, None)
}

/// Scale the support of `base` by every factor in turn.
pub fn synth_dilation_family(base: &DiscreteMeasure, scales: &[f64]) -> Result<MeasureDataset> {
    let measures = scales
        .iter()
        .map(|&a| {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::NonpositiveScale(a));
            }
            base.map_points(|p| p.iter().map(|x| a * x).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    MeasureDataset::new("dilations", measures, None)
}

/// Shear a planar `base` by `(x, y) ↦ (x, y + k·x)` for each factor `k`.
pub fn synth_shear_family(base: &DiscreteMeasure, shears: &[f64]) -> Result<MeasureDataset> {
    if base.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: base.dim(),
        });
    }
    let measures = shears
        .iter()
        .map(|&k| base.map_points(|p| vec![p[0], p[1] + k * p[0]]))
        .collect::<Result<Vec<_>>>()?;
    MeasureDataset::new("shears", measures, None)
}

/// Named synthetic datasets reachable from the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticSpec {
    /// Two-atom measure translated over a `k × k` unit grid (`N = k²`).
    TranslationGrid { k: usize },
    /// Two-atom measure translated by `n` random shifts in `[0, 10)²`.
    Translations { n: usize },
    /// Three-atom measure dilated by `n` random factors in `[0.5, 3)`.
    Dilations { n: usize },
    /// Three labeled shape classes, each randomly translated and dilated.
    Classes { n: usize },
}

impl SyntheticSpec {
    /// Parses `name[:arg]`, e.g. `translations:grid3`, `translations:200`,
    /// `classes3`. `default_n` fills in the size when the string carries none.
    pub fn parse(spec: &str, default_n: usize) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (spec, None),
        };
        let count = |arg: Option<&str>| -> Result<usize> {
            match arg {
                None => Ok(default_n),
                Some(a) => a
                    .parse()
                    .map_err(|_| Error::Config(format!("bad synthetic size `{a}`"))),
            }
        };
        match name {
            "translations" => match arg.and_then(|a| a.strip_prefix("grid")) {
                Some(k) => Ok(Self::TranslationGrid {
                    k: k.parse()
                        .map_err(|_| Error::Config(format!("bad grid size `{k}`")))?,
                }),
                None => Ok(Self::Translations { n: count(arg)? }),
            },
            "dilations" => Ok(Self::Dilations { n: count(arg)? }),
            "classes3" | "classes" => Ok(Self::Classes { n: count(arg)? }),
            _ => Err(Error::Config(format!("unknown synthetic dataset `{spec}`"))),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<MeasureDataset> {
        let mut rng = seed::rng(seed::derive_seed(seed, "synth"));
        let two_atoms = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]])?;
        match *self {
            Self::TranslationGrid { k } => {
                let shifts: Vec<Vec<f64>> = (0..k)
                    .flat_map(|a| (0..k).map(move |b| vec![a as f64, b as f64]))
                    .collect();
                synth_translation_family(&two_atoms, &shifts)
            }
            Self::Translations { n } => {
                let shifts: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                    .collect();
                synth_translation_family(&two_atoms, &shifts)
            }
            Self::Dilations { n } => {
                let base = DiscreteMeasure::uniform(vec![
                    vec![-1.0, 0.0],
                    vec![1.0, 0.0],
                    vec![0.0, 2.0],
                ])?;
                let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
                synth_dilation_family(&base, &scales)
            }
            Self::Classes { n } => {
                let shapes = [
                    DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![2.0, 0.0]])?,
                    DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![0.0, 2.0]])?,
                    DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 2.0]])?,
                ];
                let mut measures = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                for i in 0..n {
                    let class = i % shapes.len();
                    let scale: f64 = rng.random_range(0.8..1.2);
                    let shift = [rng.random_range(0.0..6.0), rng.random_range(0.0..6.0)];
                    measures.push(
                        shapes[class].map_points(|p| {
                            vec![scale * p[0] + shift[0], scale * p[1] + shift[1]]
                        })?,
                    );
                    labels.push(class as i64);
                }
                MeasureDataset::new("classes3", measures, Some(labels))
            }
        }
    }
}
