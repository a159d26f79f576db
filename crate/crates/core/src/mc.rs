//! Entry-sampled completion of squared distance matrices.
//!
//! Squared distances are parameterized by a centered factor `Q ∈ ℝ^{N×q}`:
//! `Dᵢⱼ = Gᵢᵢ + Gⱼⱼ − 2Gᵢⱼ` with `G = QQᵀ`. Writing `𝒜(X)_α = Xᵢᵢ + Xⱼⱼ − 2Xᵢⱼ`
//! for observed pairs `α = (i, j)` and `b` for the observed values, the solver
//! minimizes the augmented Lagrangian
//!
//! ```text
//! L(Q; Λ) = ½ ‖𝒜(QQᵀ) − b + Λ‖²
//! ```
//!
//! with Barzilai–Borwein gradient steps in `Q`, and between rounds of those
//! steps moves the multipliers by `Λ ← Λ + damping · (𝒜(QQᵀ) − b)`.
//!
//! The gradient is `∇_Q L = 2 𝒜*(r) Q` with `r = 𝒜(QQᵀ) − b + Λ`. The adjoint
//! scatters `r_α` with `+1` onto `(i, i)`, `(j, j)` and `−1` onto `(i, j)`,
//! `(j, i)`, so row `i` of the gradient collects `2 r_α (Qᵢ − Qⱼ)` over the
//! pairs touching `i`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixio::{DistanceMatrix, MatrixKind};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    /// Rank estimate `q`, the number of factor columns.
    pub rank: usize,
    /// Multiplier updates before giving up.
    pub max_outer_iters: usize,
    /// Barzilai–Borwein steps between multiplier updates.
    pub inner_iters: usize,
    /// Stop once `‖𝒜(QQᵀ) − b‖ / ‖b‖` falls to this value.
    pub residual_tolerance: f64,
    pub bb_step_bounds: (f64, f64),
    /// Step for the very first iteration. `None` picks `1 / (4 · max degree · mean b)`.
    pub initial_step: Option<f64>,
    pub multiplier_damping: f64,
    /// Iterations the residual may stay above `divergence_factor` times its best before failing.
    pub divergence_patience: usize,
    pub divergence_factor: f64,
    /// Keep every k-th residual in the report trace.
    pub trace_every: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            rank: 5,
            max_outer_iters: 300,
            inner_iters: 100,
            residual_tolerance: 1e-6,
            bb_step_bounds: (1e-12, 1e12),
            initial_step: None,
            multiplier_damping: 1.0,
            divergence_patience: 2000,
            divergence_factor: 1e6,
            trace_every: 100,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bb_step_bounds;
        if self.rank == 0
            || self.max_outer_iters == 0
            || self.inner_iters == 0
            || !(self.residual_tolerance > 0.0)
            || !(lo > 0.0 && hi >= lo)
            || !(self.multiplier_damping > 0.0)
            || self.initial_step.is_some_and(|s| !(s > 0.0))
        {
            return Err(Error::Config(format!(
                "invalid completion settings {self:?}"
            )));
        }
        Ok(())
    }
}

/// Centered factor `Q` whose Gram matrix encodes the completed distances.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    n: usize,
    rank: usize,
    // row-major N×q
    data: Vec<f64>,
}

impl GramFactor {
    pub fn from_matrix(q: &DMatrix<f64>) -> Self {
        let (n, rank) = q.shape();
        let data = (0..n)
            .flat_map(|i| (0..rank).map(move |k| (i, k)))
            .map(|(i, k)| q[(i, k)])
            .collect();
        Self { n, rank, data }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.rank, &self.data)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.rank..(i + 1) * self.rank]
    }

    /// Subtracts column means so that `Qᵀ𝟙 = 0`.
    pub fn center(&mut self) {
        let mut mean = vec![0.0; self.rank];
        for row in self.data.chunks_exact(self.rank) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= self.n as f64;
        }
        for row in self.data.chunks_exact_mut(self.rank) {
            for (x, m) in row.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
    }

    pub fn max_abs_column_sum(&self) -> f64 {
        let mut sums = vec![0.0f64; self.rank];
        for row in self.data.chunks_exact(self.rank) {
            for (s, x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        sums.iter().fold(0.0, |a, s| a.max(s.abs()))
    }

    fn pair_distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `𝒜(QQᵀ)` over the given pairs, without forming the Gram matrix.
    pub fn apply_a(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        pairs
            .iter()
            .map(|&(i, j)| self.pair_distance(i, j))
            .collect()
    }

    /// All pairwise `Gᵢᵢ + Gⱼⱼ − 2Gᵢⱼ`.
    pub fn distances(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                0.0
            } else {
                self.pair_distance(i, j)
            }
        })
    }
}

/// `𝒜(X)_α = Xᵢᵢ + Xⱼⱼ − 2Xᵢⱼ` for each pair.
pub fn apply_a(x: &DMatrix<f64>, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::ShapeMismatch(x.shape(), (n, n)));
    }
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                Err(Error::IndexOutOfRange(i, j))
            } else {
                Ok(x[(i, i)] + x[(j, j)] - 2.0 * x[(i, j)])
            }
        })
        .collect()
}

/// `L(Q; Λ) = ½‖𝒜(QQᵀ) − b + Λ‖²`.
pub fn objective(q: &GramFactor, pairs: &[(usize, usize)], b: &[f64], lambda: &[f64]) -> f64 {
    q.apply_a(pairs)
        .iter()
        .zip(b)
        .zip(lambda)
        .map(|((a, b), l)| {
            let r = a - b + l;
            r * r
        })
        .sum::<f64>()
        * 0.5
}

/// `∇_Q L = 2𝒜*(r)Q`, accumulated pair by pair.
pub fn gradient(q: &GramFactor, pairs: &[(usize, usize)], b: &[f64], lambda: &[f64]) -> GramFactor {
    let mut out = GramFactor {
        n: q.n,
        rank: q.rank,
        data: vec![0.0; q.data.len()],
    };
    gradient_into(q, pairs, b, lambda, &mut out.data);
    out
}

/// Writes the gradient into `out` and returns the raw residual norm `‖𝒜(QQᵀ) − b‖`.
fn gradient_into(
    q: &GramFactor,
    pairs: &[(usize, usize)],
    b: &[f64],
    lambda: &[f64],
    out: &mut [f64],
) -> f64 {
    out.iter_mut().for_each(|g| *g = 0.0);
    let rank = q.rank;
    let mut residual_sq = 0.0;
    for ((&(i, j), &bv), &l) in pairs.iter().zip(b).zip(lambda) {
        let (qi, qj) = (q.row(i), q.row(j));
        let a: f64 = qi.iter().zip(qj).map(|(x, y)| (x - y) * (x - y)).sum();
        residual_sq += (a - bv) * (a - bv);
        let r2 = 2.0 * (a - bv + l);
        for k in 0..rank {
            let d = r2 * (qi[k] - qj[k]);
            out[i * rank + k] += d;
            out[j * rank + k] -= d;
        }
    }
    residual_sq.sqrt()
}

/// Barzilai–Borwein (long) step `⟨Δx, Δx⟩ / ⟨Δx, Δg⟩`, clamped to `bounds`.
///
/// A nonpositive curvature estimate returns the lower bound.
pub fn bb_step(
    gradient_current: &[f64],
    gradient_previous: &[f64],
    iterate_current: &[f64],
    iterate_previous: &[f64],
    bounds: (f64, f64),
) -> f64 {
    let mut ss = 0.0;
    let mut sy = 0.0;
    for (((gc, gp), xc), xp) in gradient_current
        .iter()
        .zip(gradient_previous)
        .zip(iterate_current)
        .zip(iterate_previous)
    {
        let s = xc - xp;
        ss += s * s;
        sy += s * (gc - gp);
    }
    if !(sy > 0.0) || !ss.is_finite() {
        return bounds.0;
    }
    (ss / sy).clamp(bounds.0, bounds.1)
}

fn curvature(g_cur: &[f64], g_prev: &[f64], x_cur: &[f64], x_prev: &[f64]) -> f64 {
    g_cur
        .iter()
        .zip(g_prev)
        .zip(x_cur.iter().zip(x_prev))
        .map(|((gc, gp), (xc, xp))| (xc - xp) * (gc - gp))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Barzilai–Borwein steps taken.
    pub iterations: usize,
    pub outer_iterations: usize,
    /// `‖𝒜(QQᵀ) − b‖ / ‖b‖` at termination.
    pub final_residual: f64,
    pub stop_reason: StopReason,
    /// `(iteration, relative residual)`, thinned by `trace_every`.
    pub residual_trace: Vec<(usize, f64)>,
}

/// Fits the Gram factor to the observed entries of `observed`.
pub fn fit_gram_factor(
    observed: &DistanceMatrix,
    cfg: &McConfig,
) -> Result<(GramFactor, ConvergenceReport)> {
    cfg.validate()?;
    let n = observed.n();
    if cfg.rank > n {
        return Err(Error::RankOutOfRange {
            rank: cfg.rank,
            max: n,
        });
    }
    let pairs = observed.observed_pairs();
    if pairs.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let b: Vec<f64> = pairs.iter().map(|&(i, j)| observed.get(i, j)).collect();
    let b_norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rank = cfg.rank;

    if b_norm == 0.0 {
        // Q = 0 attains zero residual
        return Ok((
            GramFactor {
                n,
                rank,
                data: vec![0.0; n * rank],
            },
            ConvergenceReport {
                iterations: 0,
                outer_iterations: 0,
                final_residual: 0.0,
                stop_reason: StopReason::Converged,
                residual_trace: vec![(0, 0.0)],
            },
        ));
    }

    let mean_b = b.iter().sum::<f64>() / b.len() as f64;
    let mut rng = seed::rng(seed::derive_seed(cfg.seed, "mc/init"));
    let scale = (mean_b / rank as f64).sqrt();
    let mut q = GramFactor {
        n,
        rank,
        data: (0..n * rank)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    };
    q.center();

    let mut step = cfg.initial_step.unwrap_or_else(|| {
        let mut degree = vec![0usize; n];
        for &(i, j) in &pairs {
            degree[i] += 1;
            degree[j] += 1;
        }
        let max_degree = *degree.iter().max().unwrap() as f64;
        1.0 / (4.0 * max_degree * mean_b)
    });
    step = step.clamp(cfg.bb_step_bounds.0, cfg.bb_step_bounds.1);
    let safe_step = step;

    let mut lambda = vec![0.0; pairs.len()];
    let mut grad = vec![0.0; n * rank];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut above_best = 0usize;
    let mut iterations = 0usize;

    for outer in 0..cfg.max_outer_iters {
        for _ in 0..cfg.inner_iters {
            let residual = gradient_into(&q, &pairs, &b, &lambda, &mut grad) / b_norm;
            if iterations.is_multiple_of(cfg.trace_every.max(1)) {
                trace.push((iterations, residual));
            }
            if !residual.is_finite() {
                return Err(Error::Diverged {
                    iterations,
                    residual,
                });
            }
            if residual <= cfg.residual_tolerance {
                trace.push((iterations, residual));
                return Ok((
                    q,
                    ConvergenceReport {
                        iterations,
                        outer_iterations: outer,
                        final_residual: residual,
                        stop_reason: StopReason::Converged,
                        residual_trace: trace,
                    },
                ));
            }
            if residual < best {
                best = residual;
                above_best = 0;
            } else if residual > cfg.divergence_factor * best {
                above_best += 1;
                if above_best >= cfg.divergence_patience {
                    return Err(Error::Diverged {
                        iterations,
                        residual,
                    });
                }
            }

            if let Some((x_prev, g_prev)) = &prev {
                step = if curvature(&grad, g_prev, &q.data, x_prev) > 0.0 {
                    bb_step(&grad, g_prev, &q.data, x_prev, cfg.bb_step_bounds)
                } else {
                    // the objective is not convex here, so the secant says nothing
                    // about scale; the lower bound would freeze the iteration
                    safe_step
                };
            }
            let x_old = q.data.clone();
            for (x, g) in q.data.iter_mut().zip(&grad) {
                *x -= step * g;
            }
            q.center();
            prev = Some((x_old, grad.clone()));
            iterations += 1;
        }
        // multiplier ascent; the gradient jumps, so the secant pair restarts
        let current = q.apply_a(&pairs);
        for ((l, a), bv) in lambda.iter_mut().zip(&current).zip(&b) {
            *l += cfg.multiplier_damping * (a - bv);
        }
        prev = None;
    }

    let final_residual = q
        .apply_a(&pairs)
        .iter()
        .zip(&b)
        .map(|(a, bv)| (a - bv) * (a - bv))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    trace.push((iterations, final_residual));
    Ok((
        q,
        ConvergenceReport {
            iterations,
            outer_iterations: cfg.max_outer_iters,
            final_residual,
            stop_reason: StopReason::MaxIters,
            residual_trace: trace,
        },
    ))
}

/// Completes a partially observed matrix.
///
/// The estimate is the factor's distance matrix with zero diagonal,
/// symmetrized and with negative off-diagonal values clamped to zero.
pub fn complete_mc(
    observed: &DistanceMatrix,
    cfg: &McConfig,
) -> Result<(DistanceMatrix, ConvergenceReport)> {
    if observed.kind() == MatrixKind::Estimated {
        return Err(Error::WrongKind(observed.kind().name()));
    }
    let (q, report) = fit_gram_factor(observed, cfg)?;
    Ok((sanitize(q.distances())?, report))
}

/// Zero diagonal, `½(D + Dᵀ)`, negatives clamped to zero.
pub(crate) fn sanitize(mut d: DMatrix<f64>) -> Result<DistanceMatrix> {
    let n = d.nrows();
    for i in 0..n {
        d[(i, i)] = 0.0;
        for j in i + 1..n {
            let v = (0.5 * (d[(i, j)] + d[(j, i)])).max(0.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::estimated(d)
}
