//! Transportation simplex on the bipartite supply/demand graph.
//!
//! The basis is a spanning tree of `m + n − 1` cells (degenerate zero-flow
//! cells included) started from the north-west corner rule. Each pivot prices
//! all cells with the tree potentials `uᵢ + vⱼ = cᵢⱼ`, brings in the most
//! negative reduced cost, and pushes flow around the unique tree cycle. After
//! a run of degenerate pivots the solver switches permanently to Bland's rule
//! (lowest-index entering cell, lowest-index leaving cell) which cannot cycle.

use crate::error::{Error, Result};

/// Dense row-major `rows × cols` nonnegative matrix, used for costs and plans.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks_exact(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in self.entries.chunks_exact(self.cols) {
            for (acc, v) in s.iter_mut().zip(r) {
                *acc += v;
            }
        }
        s
    }

    pub fn frobenius_dot(&self, other: &Dense) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Pivots allowed without progress in the objective before switching to Bland's rule.
const DEGENERATE_RUN_LIMIT: usize = 32;

struct Tree {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flows: Vec<f64>,
}

impl Tree {
    /// North-west corner start: always exactly `m + n − 1` cells forming a tree.
    fn north_west(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flows = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            cells.push((i, j));
            flows.push(x);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cells, flows }
    }

    /// Adjacency lists over nodes `0..m` (rows) and `m..m+n` (columns).
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (slot, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, slot));
            adj[self.m + j].push((i, slot));
        }
        adj
    }

    /// Breadth-first tree walk from `root`, returning parent `(node, slot)` links.
    fn bfs(
        &self,
        adj: &[Vec<(usize, usize)>],
        root: usize,
        queue: &mut Vec<usize>,
    ) -> Vec<Option<(usize, usize)>> {
        let mut parent = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[root] = true;
        queue.clear();
        queue.push(root);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &(v, slot) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, slot));
                    queue.push(v);
                }
            }
        }
        parent
    }
}

/// Solves the balanced transportation problem `min ⟨C, P⟩` over couplings
/// with row sums `supply` and column sums `demand`.
///
/// Both marginals must be nonempty, nonnegative and sum to the same total
/// (to floating-point accuracy). Returns the optimal value and plan.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &Dense) -> Result<(f64, Dense)> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || cost.rows() != m || cost.cols() != n {
        return Err(Error::SolverFailure(format!(
            "shape mismatch: {m} supplies, {n} demands, cost {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    let scale = cost.entries.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let eps = 1e-12 * scale;

    let mut tree = Tree::north_west(supply, demand);
    let mut in_basis = vec![usize::MAX; m * n];
    for (slot, &(i, j)) in tree.cells.iter().enumerate() {
        in_basis[i * n + j] = slot;
    }

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut queue = Vec::with_capacity(m + n);
    let mut bland = false;
    let mut degenerate_run = 0usize;
    let max_pivots = 50 * m * n + 1000;

    for _ in 0..max_pivots {
        let adj = tree.adjacency();

        // potentials, rooted at row 0 with u₀ = 0
        let parent = tree.bfs(&adj, 0, &mut queue);
        u[0] = 0.0;
        for &node in queue.iter().skip(1) {
            let (p, slot) = parent[node].unwrap();
            let (i, j) = tree.cells[slot];
            let c = cost.get(i, j);
            if node < m {
                u[node] = c - v[p - m];
            } else {
                v[node - m] = c - u[p];
            }
        }
        if queue.len() != m + n {
            return Err(Error::SolverFailure("basis is not a spanning tree".into()));
        }

        // pricing
        let mut entering = None;
        let mut best = -eps;
        'scan: for i in 0..m {
            for j in 0..n {
                if in_basis[i * n + j] != usize::MAX {
                    continue;
                }
                let reduced = cost.get(i, j) - u[i] - v[j];
                if reduced < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = reduced;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let mut plan = Dense::zeros(m, n);
            let mut total = 0.0;
            for (&(i, j), &f) in tree.cells.iter().zip(&tree.flows) {
                plan.set(i, j, f);
                total += f * cost.get(i, j);
            }
            return Ok((total, plan));
        };

        // the cycle: entering cell plus the tree path from column ej back to row ei
        let parent = tree.bfs(&adj, ei, &mut queue);
        let mut path = Vec::new();
        let mut node = m + ej;
        while node != ei {
            let (p, slot) = parent[node]
                .ok_or_else(|| Error::SolverFailure("entering cell leaves the tree".into()))?;
            path.push(slot);
            node = p;
        }
        // path slots alternate −, +, −, … starting next to the entering column
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 1 {
                continue;
            }
            let f = tree.flows[slot];
            let (i, j) = tree.cells[slot];
            let better = f < theta
                || (f == theta && bland && {
                    let (li, lj) = tree.cells[leaving];
                    i * n + j < li * n + lj
                });
            if better {
                theta = f;
                leaving = slot;
            }
        }

        if theta <= 0.0 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_RUN_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 {
                tree.flows[slot] -= theta;
            } else {
                tree.flows[slot] += theta;
            }
        }
        let (li, lj) = tree.cells[leaving];
        in_basis[li * n + lj] = usize::MAX;
        tree.cells[leaving] = (ei, ej);
        tree.flows[leaving] = theta;
        in_basis[ei * n + ej] = leaving;
    }
    Err(Error::SolverFailure(format!(
        "no optimal basis after {max_pivots} pivots"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_textbook_instance() {
        // supplies 20/30/25, demands 10/35/30, known optimum 555
        let cost = Dense::from_fn(3, 3, |i, j| {
            [[8.0, 6.0, 10.0], [9.0, 12.0, 13.0], [14.0, 9.0, 16.0]][i][j]
        });
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 35.0, 30.0];
        let (value, plan) = solve_transport(&supply, &demand, &cost).unwrap();
        // enumerate over integer plans as an oracle
        let mut best = f64::INFINITY;
        for a in 0..=10 {
            for b in 0..=20 - a {
                let c = 20 - a - b;
                for d in 0..=(10 - a).min(30) {
                    let e_max = (35 - b).min(30 - d);
                    for e in 0..=e_max {
                        let f = 30 - d - e;
                        let g = 10 - a - d;
                        let h = 35 - b - e;
                        let k = 30 - c - f;
                        if f < 0 || g < 0 || h < 0 || k < 0 || g + h + k != 25 {
                            continue;
                        }
                        let x = [a, b, c, d, e, f, g, h, k].map(|v| v as f64);
                        let val: f64 = (0..9).map(|t| x[t] * cost.get(t / 3, t % 3)).sum();
                        best = best.min(val);
                    }
                }
            }
        }
        assert!((value - best).abs() < 1e-9, "{value} vs {best}");
        for (s, t) in plan.row_sums().iter().zip(supply) {
            assert!((s - t).abs() < 1e-9);
        }
        for (s, t) in plan.col_sums().iter().zip(demand) {
            assert!((s - t).abs() < 1e-9);
        }
    }

    #[test]
    fn highly_degenerate_assignment() {
        // uniform marginals with ties everywhere exercise degenerate pivots
        let n = 7;
        let cost = Dense::from_fn(n, n, |i, j| ((i * j) % 3) as f64);
        let w = vec![1.0 / n as f64; n];
        let (value, plan) = solve_transport(&w, &w, &cost).unwrap();
        assert!(value >= -1e-12);
        assert!((plan.frobenius_dot(&cost) - value).abs() < 1e-12);
        // uniform square marginals: some permutation is optimal
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &j)| cost.get(i, j))
                .sum::<f64>()
                / n as f64;
            best = best.min(c);
        });
        assert!((value - best).abs() < 1e-12);
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn rectangular_and_single_cell() {
        let cost = Dense::from_fn(1, 1, |_, _| 4.0);
        let (v, _) = solve_transport(&[1.0], &[1.0], &cost).unwrap();
        assert_eq!(v, 4.0);
        let cost = Dense::from_fn(1, 3, |_, j| j as f64);
        let (v, p) = solve_transport(&[1.0], &[0.2, 0.3, 0.5], &cost).unwrap();
        assert!((v - 1.3).abs() < 1e-12);
        assert!((p.get(0, 2) - 0.5).abs() < 1e-15);
    }
}
