//! Exact squared 2-Wasserstein distances between discrete measures.
//!
//! `W2(μ, ν)² = min_{P ∈ Γ(μ, ν)} ⟨C, P⟩` with `Cᵢⱼ = ‖xᵢ − yⱼ‖²`. General
//! instances go through the transportation simplex in [`simplex`];
//! one-dimensional measures take the sorted quantile coupling, which is optimal
//! on the line. [`w2_squared_bruteforce`] enumerates permutation couplings and
//! exists only to check the other two.

mod bruteforce;
mod matrix;
pub mod simplex;

pub use bruteforce::w2_squared_bruteforce;
pub use matrix::{w2_matrix, MatrixPlan};
pub(crate) use matrix::{w2_matrix_in_current_pool, worker_pool};
pub use simplex::{solve_transport, Dense};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// `Cᵢⱼ = ‖xᵢ − yⱼ‖²` between the supports of two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Dense);

impl CostMatrix {
    pub fn between(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        check_dims(mu, nu)?;
        Ok(Self(Dense::from_fn(mu.len(), nu.len(), |i, j| {
            squared_distance(mu.point(i), nu.point(j))
        })))
    }

    pub fn as_dense(&self) -> &Dense {
        &self.0
    }
}

/// A transport plan with marginals `μ` (rows) and `ν` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling(Dense);

impl Coupling {
    pub fn as_dense(&self) -> &Dense {
        &self.0
    }

    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let rows = self.0.row_sums();
        let cols = self.0.col_sums();
        rows.iter()
            .zip(mu.weights())
            .chain(cols.iter().zip(nu.weights()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    Ok(())
}

/// Squared 2-Wasserstein distance.
pub fn w2_squared(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_dims(mu, nu)?;
    if mu.dim() == 1 {
        return Ok(quantile_coupling(mu, nu).0);
    }
    Ok(w2_squared_lp(mu, nu)?.0)
}

/// Squared distance together with an optimal coupling.
pub fn w2_squared_with_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, Coupling)> {
    check_dims(mu, nu)?;
    if mu.dim() == 1 {
        let (value, plan) = quantile_coupling(mu, nu);
        return Ok((value, Coupling(plan)));
    }
    w2_squared_lp(mu, nu)
}

/// Always solves the transportation linear program, whatever the dimension.
pub fn w2_squared_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, Coupling)> {
    let cost = CostMatrix::between(mu, nu)?;
    let (value, plan) = solve_transport(mu.weights(), nu.weights(), cost.as_dense())?;
    Ok((value.max(0.0), Coupling(plan)))
}

/// Monotone rearrangement on the real line: match sorted atoms by cumulative mass.
fn quantile_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (f64, Dense) {
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.point(a)[0].total_cmp(&m.point(b)[0]).then(a.cmp(&b)));
        idx
    };
    let (oa, ob) = (order(mu), order(nu));
    let mut plan = Dense::zeros(mu.len(), nu.len());
    let (mut ia, mut ib) = (0, 0);
    let mut ra = mu.weights()[oa[0]];
    let mut rb = nu.weights()[ob[0]];
    let mut total = 0.0;
    loop {
        let (a, b) = (oa[ia], ob[ib]);
        let x = ra.min(rb);
        let d = mu.point(a)[0] - nu.point(b)[0];
        total += x * d * d;
        plan.set(a, b, plan.get(a, b) + x);
        ra -= x;
        rb -= x;
        let last_a = ia + 1 == oa.len();
        let last_b = ib + 1 == ob.len();
        if last_a && last_b {
            break;
        }
        if last_b || (!last_a && ra <= rb) {
            ia += 1;
            ra = mu.weights()[oa[ia]];
        } else {
            ib += 1;
            rb = nu.weights()[ob[ib]];
        }
    }
    (total, plan)
}
