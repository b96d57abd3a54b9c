//! Exact solver for the balanced transportation problem.
//!
//! Primal transportation simplex over spanning-tree bases of the bipartite
//! supply/demand graph. The initial basis comes from the northwest-corner
//! rule; pivots use Bland's lowest-index rule for both the entering and the
//! leaving cell, so degenerate instances terminate.

use super::SimilarityError;

/// Reduced costs above `-PRICING_EPS` are treated as nonnegative.
const PRICING_EPS: f64 = 1e-12;
/// Flows below this are snapped to zero after a pivot.
const FLOW_EPS: f64 = 1e-14;

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, SimilarityError> {
        if rows == 0 || cols == 0 {
            return Err(SimilarityError::InvalidInput("cost matrix is empty".into()));
        }
        if data.len() != rows * cols {
            return Err(SimilarityError::InvalidInput(format!(
                "cost matrix has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SimilarityError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SimilarityError::InvalidInput("ragged cost matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Optimal plan and its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    pub value: f64,
    /// Basic cells of the final tree, `rows + cols - 1` of them.
    pub basis: Vec<(usize, usize)>,
    pub pivots: usize,
}

impl TransportPlan {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.plan
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.plan.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }
}

/// Solves `min Σ x_ij c_ij` s.t. row sums = `supply`, column sums = `demand`,
/// `x >= 0`. Totals must agree to within `1e-9`.
pub fn solve_transport(
    supply: &[f64],
    demand: &[f64],
    cost: &CostMatrix,
) -> Result<TransportPlan, SimilarityError> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(SimilarityError::InvalidInput("empty marginal".into()));
    }
    if cost.rows != n || cost.cols != m {
        return Err(SimilarityError::InvalidInput(format!(
            "cost matrix is {}x{}, marginals are {n}x{m}",
            cost.rows, cost.cols
        )));
    }
    if let Some(bad) = cost.data.iter().find(|c| !c.is_finite()) {
        return Err(SimilarityError::InvalidInput(format!(
            "non-finite cost entry {bad}"
        )));
    }
    if cost.data.iter().any(|&c| c < 0.0) {
        return Err(SimilarityError::InvalidInput("negative cost entry".into()));
    }
    if supply
        .iter()
        .chain(demand)
        .any(|&w| !w.is_finite() || w < 0.0)
    {
        return Err(SimilarityError::InvalidInput(
            "marginals must be finite and nonnegative".into(),
        ));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > 1e-9 * ts.max(td).max(1.0) {
        return Err(SimilarityError::InvalidInput(format!(
            "unbalanced marginals: supply {ts} vs demand {td}"
        )));
    }

    let mut tree = Basis::northwest_corner(supply, demand);
    let max_pivots = 50 * (n * m) + 1000;
    let mut pivots = 0;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    loop {
        tree.potentials(cost, &mut u, &mut v);
        let Some((ei, ej)) = entering_cell(cost, &tree, &u, &v) else {
            break;
        };
        tree.pivot(ei, ej);
        pivots += 1;
        if pivots > max_pivots {
            return Err(SimilarityError::Solver(format!(
                "no convergence after {max_pivots} pivots"
            )));
        }
    }

    let flows = tree.exact_flows(supply, demand);
    let mut plan = vec![0.0; n * m];
    let mut basis = Vec::with_capacity(tree.cells.len());
    for (&(i, j), &x) in tree.cells.iter().zip(&flows) {
        plan[i * m + j] = x;
        basis.push((i, j));
    }
    let value = basis
        .iter()
        .map(|&(i, j)| plan[i * m + j] * cost.get(i, j))
        .sum();
    Ok(TransportPlan {
        rows: n,
        cols: m,
        plan,
        value,
        basis,
        pivots,
    })
}

/// First non-basic cell in row-major order with negative reduced cost.
#[allow(clippy::needless_range_loop)]
fn entering_cell(cost: &CostMatrix, tree: &Basis, u: &[f64], v: &[f64]) -> Option<(usize, usize)> {
    for i in 0..cost.rows {
        for j in 0..cost.cols {
            if tree.is_basic(i, j) {
                continue;
            }
            if cost.get(i, j) - u[i] - v[j] < -PRICING_EPS {
                return Some((i, j));
            }
        }
    }
    None
}

/// Spanning-tree basis. Nodes `0..n` are rows, `n..n+m` are columns.
struct Basis {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    // cell index per (i, j), usize::MAX when non-basic
    slot: Vec<usize>,
}

impl Basis {
    fn northwest_corner(supply: &[f64], demand: &[f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut basis = Basis {
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            flow: Vec::with_capacity(n + m - 1),
            slot: vec![usize::MAX; n * m],
        };
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(0.0);
            basis.push(i, j, x);
            s[i] -= x;
            d[j] -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(basis.cells.len(), n + m - 1);
        basis
    }

    fn push(&mut self, i: usize, j: usize, x: f64) {
        self.slot[i * self.m + j] = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(x);
    }

    #[inline]
    fn is_basic(&self, i: usize, j: usize) -> bool {
        self.slot[i * self.m + j] != usize::MAX
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        // (neighbor node, cell index)
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.n + j, k));
            adj[self.n + j].push((i, k));
        }
        adj
    }

    /// Dual values with `u[0] = 0` and `u_i + v_j = c_ij` on every basic cell.
    fn potentials(&self, cost: &CostMatrix, u: &mut [f64], v: &mut [f64]) {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n + self.m];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, k) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = self.cells[k];
                if next >= self.n {
                    v[j] = cost.get(i, j) - u[i];
                } else {
                    u[i] = cost.get(i, j) - v[j];
                }
                stack.push(next);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis is not spanning");
    }

    /// Cell indices on the tree path from row `i` to column `j`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let target = self.n + j;
        let mut parent = vec![(usize::MAX, usize::MAX); self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        let mut queue = std::collections::VecDeque::from([i]);
        seen[i] = true;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = (node, k);
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            let (prev, k) = parent[node];
            cells.push(k);
            node = prev;
        }
        cells.reverse();
        cells
    }

    fn pivot(&mut self, ei: usize, ej: usize) {
        // Path runs row ei -> ... -> column ej. Its first edge touches row
        // ei and must shrink; signs alternate from there.
        let path = self.path(ei, ej);
        debug_assert!(path.len() % 2 == 1);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &k in path.iter().step_by(2) {
            let x = self.flow[k];
            let better = x < theta || (x == theta && self.cell_index(k) < self.cell_index(leaving));
            if better {
                theta = x;
                leaving = k;
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.flow[k] -= theta;
            } else {
                self.flow[k] += theta;
            }
            if self.flow[k].abs() < FLOW_EPS {
                self.flow[k] = 0.0;
            }
        }
        let (li, lj) = self.cells[leaving];
        self.slot[li * self.m + lj] = usize::MAX;
        self.slot[ei * self.m + ej] = leaving;
        self.cells[leaving] = (ei, ej);
        self.flow[leaving] = theta;
    }

    fn cell_index(&self, k: usize) -> usize {
        if k == usize::MAX {
            return usize::MAX;
        }
        let (i, j) = self.cells[k];
        i * self.m + j
    }

    /// Recomputes basic flows from the marginals by peeling leaves of the
    /// tree, which removes drift accumulated over pivots.
    fn exact_flows(&self, supply: &[f64], demand: &[f64]) -> Vec<f64> {
        let total = self.n + self.m;
        let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
        let mut degree = vec![0usize; total];
        let adj = self.adjacency();
        for (node, edges) in adj.iter().enumerate() {
            degree[node] = edges.len();
        }
        let mut done = vec![false; self.cells.len()];
        let mut flows = vec![0.0; self.cells.len()];
        let mut leaves: Vec<usize> = (0..total).filter(|&v| degree[v] == 1).collect();
        let mut assigned = 0;
        while let Some(leaf) = leaves.pop() {
            if degree[leaf] != 1 {
                continue;
            }
            let Some(&(other, k)) = adj[leaf].iter().find(|&&(_, k)| !done[k]) else {
                continue;
            };
            let x = residual[leaf].max(0.0);
            flows[k] = x;
            done[k] = true;
            assigned += 1;
            residual[leaf] -= x;
            residual[other] -= x;
            degree[leaf] -= 1;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
            if assigned == self.cells.len() {
                break;
            }
        }
        debug_assert_eq!(assigned, self.cells.len());
        flows
    }
}
