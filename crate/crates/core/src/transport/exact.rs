//! Transportation simplex on dense cost matrices.
//!
//! The basis is a spanning tree of `m + n − 1` cells in the bipartite
//! row/column graph. Entering cells are priced with Dantzig's rule; after a
//! run of degenerate pivots the solver switches to lowest-index selection for
//! both the entering and the leaving cell, which rules out cycling and makes
//! tie breaking deterministic.

use std::collections::VecDeque;

use super::{CostMatrix, PlanEntry, TransportPlan};
use crate::error::{Error, Result};

const DEGENERATE_STREAK: usize = 50;

/// Optimal coupling of `source` and `target` weights under `costs`.
pub fn solve_exact(costs: &CostMatrix, source: &[f64], target: &[f64]) -> Result<TransportPlan> {
    check_marginals(costs, source, target)?;
    let mut s = Simplex::new(costs, source, target);
    s.initial_basis();
    s.optimize()?;
    Ok(s.into_plan())
}

pub(crate) fn check_marginals(costs: &CostMatrix, source: &[f64], target: &[f64]) -> Result<()> {
    if costs.rows() != source.len() || costs.cols() != target.len() {
        return Err(Error::input(format!(
            "cost matrix is {}×{} but marginals have lengths {} and {}",
            costs.rows(),
            costs.cols(),
            source.len(),
            target.len()
        )));
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::input("empty marginal"));
    }
    if source.iter().chain(target).any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::input("marginal weights must be finite and nonnegative"));
    }
    if costs.data().iter().any(|c| !c.is_finite()) {
        return Err(Error::input("costs must be finite"));
    }
    let (a, b): (f64, f64) = (source.iter().sum(), target.iter().sum());
    if (a - b).abs() > 1e-9 * a.max(b).max(1.0) {
        return Err(Error::input(format!(
            "infeasible marginals: source mass {a} differs from target mass {b}"
        )));
    }
    Ok(())
}

struct Simplex<'a> {
    c: &'a CostMatrix,
    m: usize,
    n: usize,
    supply: &'a [f64],
    demand: &'a [f64],
    /// Basic cells `(i, j)` and their flows.
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Basic cell ids incident to each row and each column.
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Node {
    Row(usize),
    Col(usize),
}

impl<'a> Simplex<'a> {
    fn new(c: &'a CostMatrix, supply: &'a [f64], demand: &'a [f64]) -> Self {
        let (m, n) = (c.rows(), c.cols());
        Self {
            c,
            m,
            n,
            supply,
            demand,
            basis: Vec::with_capacity(m + n - 1),
            flow: Vec::with_capacity(m + n - 1),
            row_adj: vec![Vec::new(); m],
            col_adj: vec![Vec::new(); n],
            u: vec![0.0; m],
            v: vec![0.0; n],
        }
    }

    fn add_basic(&mut self, i: usize, j: usize, x: f64) {
        let id = self.basis.len();
        self.basis.push((i, j));
        self.flow.push(x);
        self.row_adj[i].push(id);
        self.col_adj[j].push(id);
    }

    /// Least-cost start: cells in ascending cost (ties by index); when a row
    /// and column are exhausted together only one is retired, so the basis
    /// always has `m + n − 1` cells forming a tree.
    fn initial_basis(&mut self) {
        let mut order: Vec<usize> = (0..self.m * self.n).collect();
        let data = self.c.data();
        order.sort_by(|&a, &b| data[a].total_cmp(&data[b]).then(a.cmp(&b)));
        let mut s = self.supply.to_vec();
        let mut d = self.demand.to_vec();
        let mut row_live = vec![true; self.m];
        let mut col_live = vec![true; self.n];
        let (mut rows_left, mut cols_left) = (self.m, self.n);
        for idx in order {
            if rows_left + cols_left == 1 {
                break;
            }
            let (i, j) = (idx / self.n, idx % self.n);
            if !row_live[i] || !col_live[j] {
                continue;
            }
            let x = s[i].min(d[j]);
            let row_first = s[i] <= d[j];
            if rows_left == 1 && cols_left == 1 {
                // last cell absorbs rounding in both marginals
                self.add_basic(i, j, 0.5 * (s[i] + d[j]));
                rows_left = 0;
                cols_left = 0;
                row_live[i] = false;
                col_live[j] = false;
                continue;
            }
            self.add_basic(i, j, x);
            if (row_first && rows_left > 1) || cols_left == 1 {
                row_live[i] = false;
                rows_left -= 1;
                d[j] = (d[j] - x).max(0.0);
                s[i] = 0.0;
            } else {
                col_live[j] = false;
                cols_left -= 1;
                s[i] = (s[i] - x).max(0.0);
                d[j] = 0.0;
            }
        }
        debug_assert_eq!(self.basis.len(), self.m + self.n - 1);
    }

    /// Tree traversal solving `u_i + v_j = c_ij` on basic cells with `u_0 = 0`.
    fn update_duals(&mut self) {
        let mut seen_row = vec![false; self.m];
        let mut seen_col = vec![false; self.n];
        let mut queue = VecDeque::new();
        self.u[0] = 0.0;
        seen_row[0] = true;
        queue.push_back(Node::Row(0));
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(i) => {
                    for &id in &self.row_adj[i] {
                        let j = self.basis[id].1;
                        if !seen_col[j] {
                            seen_col[j] = true;
                            self.v[j] = self.c.get(i, j) - self.u[i];
                            queue.push_back(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    for &id in &self.col_adj[j] {
                        let i = self.basis[id].0;
                        if !seen_row[i] {
                            seen_row[i] = true;
                            self.u[i] = self.c.get(i, j) - self.v[j];
                            queue.push_back(Node::Row(i));
                        }
                    }
                }
            }
        }
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.c.get(i, j) - self.u[i] - self.v[j]
    }

    fn pricing_tolerance(&self) -> f64 {
        1e-13 * self.c.scale().max(1e-300)
    }

    fn entering(&self, bland: bool) -> Option<(usize, usize)> {
        let tol = self.pricing_tolerance();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.m {
            let row = self.c.row(i);
            let ui = self.u[i];
            for j in 0..self.n {
                let r = row[j] - ui - self.v[j];
                if r < -tol {
                    if bland {
                        return Some((i, j));
                    }
                    if best.is_none_or(|b| r < b.2) {
                        best = Some((i, j, r));
                    }
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Basic cell ids on the tree path from row `i` to column `j`, in order
    /// starting at column `j`.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let mut parent_row: Vec<Option<usize>> = vec![None; self.m];
        let mut parent_col: Vec<Option<usize>> = vec![None; self.n];
        let mut seen_row = vec![false; self.m];
        let mut seen_col = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen_row[i] = true;
        queue.push_back(Node::Row(i));
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(r) => {
                    for &id in &self.row_adj[r] {
                        let c = self.basis[id].1;
                        if !seen_col[c] {
                            seen_col[c] = true;
                            parent_col[c] = Some(id);
                            if c == j {
                                queue.clear();
                                break;
                            }
                            queue.push_back(Node::Col(c));
                        }
                    }
                }
                Node::Col(c) => {
                    for &id in &self.col_adj[c] {
                        let r = self.basis[id].0;
                        if !seen_row[r] {
                            seen_row[r] = true;
                            parent_row[r] = Some(id);
                            queue.push_back(Node::Row(r));
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        let mut node = Node::Col(j);
        loop {
            match node {
                Node::Col(c) => {
                    let id = parent_col[c].expect("basis is a spanning tree");
                    out.push(id);
                    node = Node::Row(self.basis[id].0);
                }
                Node::Row(r) => {
                    if r == i {
                        break;
                    }
                    let id = parent_row[r].expect("basis is a spanning tree");
                    out.push(id);
                    node = Node::Col(self.basis[id].1);
                }
            }
        }
        out
    }

    fn pivot(&mut self, i: usize, j: usize, bland: bool) -> f64 {
        let path = self.path(i, j);
        // cells at even positions lose flow, odd positions gain
        let mut leave_pos = 0;
        let mut theta = f64::INFINITY;
        for (pos, &id) in path.iter().enumerate().step_by(2) {
            let x = self.flow[id];
            let better = if bland {
                x < theta || (x == theta && self.cell_index(id) < self.cell_index(path[leave_pos]))
            } else {
                x < theta
            };
            if better {
                theta = x;
                leave_pos = pos;
            }
        }
        for (pos, &id) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.flow[id] -= theta;
            } else {
                self.flow[id] += theta;
            }
        }
        let leaving = path[leave_pos];
        let (li, lj) = self.basis[leaving];
        self.row_adj[li].retain(|&x| x != leaving);
        self.col_adj[lj].retain(|&x| x != leaving);
        self.basis[leaving] = (i, j);
        self.flow[leaving] = theta;
        self.row_adj[i].push(leaving);
        self.col_adj[j].push(leaving);
        theta
    }

    fn cell_index(&self, id: usize) -> usize {
        let (i, j) = self.basis[id];
        i * self.n + j
    }

    fn optimize(&mut self) -> Result<()> {
        let max_pivots = 50 * (self.m + self.n) * (self.m + self.n).max(10);
        let mut streak = 0;
        for _ in 0..max_pivots {
            self.update_duals();
            let bland = streak >= DEGENERATE_STREAK;
            let Some((i, j)) = self.entering(bland) else {
                return Ok(());
            };
            let theta = self.pivot(i, j, bland);
            if theta <= 0.0 {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        Err(Error::numeric(
            "transportation simplex exceeded its pivot budget",
            self.min_reduced_cost().abs(),
        ))
    }

    fn min_reduced_cost(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.m {
            for j in 0..self.n {
                best = best.min(self.reduced(i, j));
            }
        }
        best
    }

    fn into_plan(mut self) -> TransportPlan {
        self.update_duals();
        let min_reduced = self.min_reduced_cost();
        let mut entries: Vec<PlanEntry> = self
            .basis
            .iter()
            .zip(&self.flow)
            .filter(|(_, &x)| x > 0.0)
            .map(|(&(i, j), &mass)| PlanEntry { i, j, mass })
            .collect();
        entries.sort_by_key(|e| (e.i, e.j));
        let cost = entries.iter().map(|e| e.mass * self.c.get(e.i, e.j)).sum();
        let dual_objective: f64 = self.u.iter().zip(self.supply).map(|(u, a)| u * a).sum::<f64>()
            + self.v.iter().zip(self.demand).map(|(v, b)| v * b).sum::<f64>();
        TransportPlan {
            rows: self.m,
            cols: self.n,
            entries,
            cost,
            certificate: Some(super::DualCertificate {
                u: self.u,
                v: self.v,
                min_reduced_cost: min_reduced,
                duality_gap: cost - dual_objective,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(c: &CostMatrix) -> f64 {
        let n = c.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        fn rec(k: usize, perm: &mut Vec<usize>, c: &CostMatrix, best: &mut f64) {
            let n = perm.len();
            if k == n {
                let v: f64 = (0..n).map(|i| c.get(i, perm[i])).sum::<f64>() / n as f64;
                *best = best.min(v);
                return;
            }
            for s in k..n {
                perm.swap(k, s);
                rec(k + 1, perm, c, best);
                perm.swap(k, s);
            }
        }
        rec(0, &mut perm, c, &mut best);
        best
    }

    #[test]
    fn trivial_instances() {
        let c = CostMatrix::new(1, 1, vec![2.5]).unwrap();
        let p = solve_exact(&c, &[1.0], &[1.0]).unwrap();
        assert_eq!(p.entries, vec![PlanEntry { i: 0, j: 0, mass: 1.0 }]);
        assert_eq!(p.cost, 2.5);
        let bad = solve_exact(&c, &[1.0], &[0.5]);
        assert!(matches!(bad, Err(Error::Input(_))));
    }

    #[test]
    fn matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for _ in 0..20 {
                let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
                let c = CostMatrix::new(n, n, data).unwrap();
                let w = vec![1.0 / n as f64; n];
                let plan = solve_exact(&c, &w, &w).unwrap();
                assert!((plan.cost - brute_force(&c)).abs() < 1e-12);
                let cert = plan.certificate.as_ref().unwrap();
                assert!(cert.min_reduced_cost > -1e-12 && cert.duality_gap.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_integer_costs_terminate() {
        let n = 12;
        let data: Vec<f64> = (0..n * n).map(|k| ((k * 7) % 3) as f64).collect();
        let c = CostMatrix::new(n, n, data).unwrap();
        let w = vec![1.0 / n as f64; n];
        let plan = solve_exact(&c, &w, &w).unwrap();
        assert!(plan.marginal_error(&w, &w) < 1e-12);
        assert!(plan.certificate.unwrap().min_reduced_cost > -1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn plans_are_feasible_and_dual_certified(
            m in 1usize..9, n in 1usize..9, seed in 0u64..1000
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..m * n).map(|_| rng.gen::<f64>() * 3.0).collect();
            let c = CostMatrix::new(m, n, data).unwrap();
            let mut a: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.1).collect();
            let mut b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.1).collect();
            let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let plan = solve_exact(&c, &a, &b).unwrap();
            prop_assert!(plan.marginal_error(&a, &b) < 1e-9);
            let cert = plan.certificate.as_ref().unwrap();
            prop_assert!(cert.min_reduced_cost > -1e-12);
            prop_assert!(cert.duality_gap.abs() < 1e-9);
            // cyclical monotonicity on the support
            for e in &plan.entries {
                for f in &plan.entries {
                    prop_assert!(
                        c.get(e.i, e.j) + c.get(f.i, f.j) <= c.get(e.i, f.j) + c.get(f.i, e.j) + 1e-9
                    );
                }
            }
        }
    }
}
