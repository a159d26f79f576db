//! Entry and column sample plans, and the budget match between them.
//!
//! Indices are 0-based throughout. Plans are drawn from a ChaCha8 stream
//! seeded with the plan's `seed` (see [`crate::seed`]) and are stored sorted,
//! so the same seed always yields the same plan.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanVariant {
    /// Pairs `(i, j)` with `i < j`, sorted row-major.
    Entries(Vec<(usize, usize)>),
    /// Sorted distinct column indices.
    Columns(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    variant: PlanVariant,
    seed: u64,
    n: usize,
}

impl SamplePlan {
    /// Validates and canonicalizes (sorts) a plan.
    pub fn new(variant: PlanVariant, seed: u64, n: usize) -> Result<Self> {
        let variant = match variant {
            PlanVariant::Entries(mut pairs) => {
                if pairs.is_empty() {
                    return Err(Error::EmptyPlan);
                }
                for &(i, j) in &pairs {
                    if i >= j || j >= n {
                        return Err(Error::IndexOutOfRange(i, j));
                    }
                }
                pairs.sort_unstable();
                if pairs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Format("duplicate pair in entry plan".into()));
                }
                PlanVariant::Entries(pairs)
            }
            PlanVariant::Columns(mut cols) => {
                if cols.is_empty() || cols.len() > n {
                    return Err(Error::CountOutOfRange {
                        count: cols.len(),
                        max: n,
                    });
                }
                cols.sort_unstable();
                if let Some(&bad) = cols.iter().find(|&&c| c >= n) {
                    return Err(Error::IndexOutOfRange(bad, bad));
                }
                if cols.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Format("duplicate column in column plan".into()));
                }
                PlanVariant::Columns(cols)
            }
        };
        Ok(Self { variant, seed, n })
    }

    pub fn variant(&self) -> &PlanVariant {
        &self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sampled entries (|Ω|) or columns (c).
    pub fn len(&self) -> usize {
        match &self.variant {
            PlanVariant::Entries(p) => p.len(),
            PlanVariant::Columns(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct off-diagonal pairs the plan observes.
    pub fn offdiag_observed(&self) -> usize {
        match &self.variant {
            PlanVariant::Entries(p) => p.len(),
            PlanVariant::Columns(c) => offdiag_count(self.n, c.len()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let indices = match &self.variant {
            PlanVariant::Entries(p) => {
                serde_json::to_value(p.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>())?
            }
            PlanVariant::Columns(c) => serde_json::to_value(c)?,
        };
        let json = PlanJson {
            variant: match self.variant {
                PlanVariant::Entries(_) => "entries".into(),
                PlanVariant::Columns(_) => "columns".into(),
            },
            seed: self.seed,
            n: self.n,
            indices,
        };
        Ok(serde_json::to_string(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: PlanJson = serde_json::from_str(text)?;
        let variant = match json.variant.as_str() {
            "entries" => {
                let pairs: Vec<[usize; 2]> = serde_json::from_value(json.indices)?;
                PlanVariant::Entries(pairs.into_iter().map(|[i, j]| (i, j)).collect())
            }
            "columns" => PlanVariant::Columns(serde_json::from_value(json.indices)?),
            other => return Err(Error::Format(format!("unknown plan variant `{other}`"))),
        };
        Self::new(variant, json.seed, json.n)
    }
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    variant: String,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    indices: serde_json::Value,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Number of entries sampled at `rate`: `round(rate · N(N−1)/2)`.
pub fn entry_budget(n: usize, rate: f64) -> Result<usize> {
    check_rate(rate)?;
    let total = n * n.saturating_sub(1) / 2;
    Ok((rate * total as f64).round() as usize)
}

/// Uniform sample without replacement of strict-upper-triangle pairs.
pub fn sample_entries(n: usize, rate: f64, seed: u64) -> Result<SamplePlan> {
    let m = entry_budget(n, rate)?;
    if m == 0 {
        return Err(Error::EmptyPlan);
    }
    let total = n * (n - 1) / 2;
    let mut rng = seed::rng(seed);
    let mut picks = index::sample(&mut rng, total, m).into_vec();
    picks.sort_unstable();
    let mut pairs = Vec::with_capacity(m);
    // walk the sorted linear indices through the rows of the upper triangle
    let (mut row, mut row_start) = (0usize, 0usize);
    for k in picks {
        while k >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        pairs.push((row, row + 1 + (k - row_start)));
    }
    SamplePlan::new(PlanVariant::Entries(pairs), seed, n)
}

/// Uniform sample of `c` distinct columns.
pub fn sample_columns(n: usize, c: usize, seed: u64) -> Result<SamplePlan> {
    if c == 0 || c > n {
        return Err(Error::CountOutOfRange { count: c, max: n });
    }
    let mut rng = seed::rng(seed);
    let cols = index::sample(&mut rng, n, c).into_vec();
    SamplePlan::new(PlanVariant::Columns(cols), seed, n)
}

/// Off-diagonal entries of the upper triangle covered by `c` full columns:
/// `c(c−1)/2 + c(N−c)`.
pub fn offdiag_count(n: usize, c: usize) -> usize {
    c * c.saturating_sub(1) / 2 + c * (n - c)
}

/// Column count whose off-diagonal coverage matches an entry budget at `rate`.
///
/// Solves `c(c−1)/2 + c(N−c) = rate·N(N−1)/2` for real `c` and rounds to the
/// nearest integer; `rate = 1` maps to all `N` columns.
pub fn budget_to_columns(n: usize, rate: f64) -> Result<usize> {
    check_rate(rate)?;
    if n <= 1 {
        return Ok(n);
    }
    if rate == 1.0 {
        return Ok(n);
    }
    let nf = n as f64;
    let b = 2.0 * nf - 1.0;
    let disc = (b * b - 4.0 * rate * nf * (nf - 1.0)).max(0.0);
    let root = (b - disc.sqrt()) / 2.0;
    Ok((root.round() as usize).clamp(1, n))
}
