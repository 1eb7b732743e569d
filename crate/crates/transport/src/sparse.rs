//! Exact assignment for large geometric instances.
//!
//! Shortest augmenting paths with a binary heap run on a candidate graph of the
//! `k` cheapest columns of every row. The final duals are then checked against
//! the full cost matrix; violating edges join the candidate graph, the rows
//! they touch are released and re-augmented, so the returned assignment is
//! optimal for the full matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    col: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.col.cmp(&self.col))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Matching with duals that are feasible on the candidate graph and tight on matched edges.
struct State {
    row_to_col: Vec<usize>,
    col_to_row: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl State {
    fn new(n: usize, cost: &[f64], edges: &[Vec<usize>]) -> Self {
        let mut v = vec![f64::INFINITY; n];
        for (i, row) in edges.iter().enumerate() {
            for &j in row {
                v[j] = v[j].min(cost[i * n + j]);
            }
        }
        for x in v.iter_mut().filter(|x| !x.is_finite()) {
            *x = 0.0;
        }
        let mut st = Self { row_to_col: vec![NONE; n], col_to_row: vec![NONE; n], u: vec![0.0; n], v };
        st.repair(n, cost, edges, 0.0);
        for (i, row) in edges.iter().enumerate() {
            for &j in row {
                if st.col_to_row[j] == NONE && cost[i * n + j] - st.u[i] - st.v[j] == 0.0 {
                    st.row_to_col[i] = j;
                    st.col_to_row[j] = i;
                    break;
                }
            }
        }
        st
    }

    /// Lowers `u` where a candidate edge has negative reduced cost and frees rows whose
    /// matched edge is no longer tight.
    fn repair(&mut self, n: usize, cost: &[f64], edges: &[Vec<usize>], tol: f64) {
        for (i, row) in edges.iter().enumerate() {
            let m = row.iter().map(|&j| cost[i * n + j] - self.v[j]).fold(f64::INFINITY, f64::min);
            if m < self.u[i] {
                self.u[i] = m;
                let j = self.row_to_col[i];
                if j != NONE && cost[i * n + j] - self.u[i] - self.v[j] > tol {
                    self.row_to_col[i] = NONE;
                    self.col_to_row[j] = NONE;
                }
            }
        }
    }
}

/// Augments every free row along shortest paths; returns `false` when some row has no
/// augmenting path in the candidate graph.
fn augment_all(n: usize, cost: &[f64], edges: &[Vec<usize>], st: &mut State) -> bool {
    let c = |i: usize, j: usize| cost[i * n + j];
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut done = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut finalized: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        if st.row_to_col[s] != NONE {
            continue;
        }
        for &j in &touched {
            dist[j] = f64::INFINITY;
            pred[j] = NONE;
            done[j] = false;
        }
        touched.clear();
        finalized.clear();
        heap.clear();
        let relax = |i: usize,
                     di: f64,
                     dist: &mut [f64],
                     pred: &mut [usize],
                     done: &[bool],
                     touched: &mut Vec<usize>,
                     heap: &mut BinaryHeap<Entry>,
                     st: &State| {
            for &j in &edges[i] {
                if done[j] {
                    continue;
                }
                let nd = di + (c(i, j) - st.u[i] - st.v[j]).max(0.0);
                if nd < dist[j] {
                    if dist[j].is_infinite() {
                        touched.push(j);
                    }
                    dist[j] = nd;
                    pred[j] = i;
                    heap.push(Entry { dist: nd, col: j });
                }
            }
        };
        relax(s, 0.0, &mut dist, &mut pred, &done, &mut touched, &mut heap, st);
        let (end, total) = loop {
            let Some(Entry { dist: d, col: j }) = heap.pop() else {
                return false;
            };
            if done[j] || d > dist[j] {
                continue;
            }
            done[j] = true;
            finalized.push(j);
            let i = st.col_to_row[j];
            if i == NONE {
                break (j, d);
            }
            relax(i, d, &mut dist, &mut pred, &done, &mut touched, &mut heap, st);
        };
        st.u[s] += total;
        for &j in &finalized {
            if j == end {
                continue;
            }
            let shift = total - dist[j];
            st.v[j] -= shift;
            st.u[st.col_to_row[j]] += shift;
        }
        let mut j = end;
        loop {
            let i = pred[j];
            let next = st.row_to_col[i];
            st.row_to_col[i] = j;
            st.col_to_row[j] = i;
            if i == s {
                break;
            }
            j = next;
        }
    }
    true
}

fn nearest(n: usize, cost: &[f64], k: usize) -> Vec<Vec<usize>> {
    let k = k.min(n);
    (0..n)
        .map(|i| {
            let row = &cost[i * n..(i + 1) * n];
            let mut idx: Vec<usize> = (0..n).collect();
            if k < n {
                idx.select_nth_unstable_by(k - 1, |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                idx.truncate(k);
            }
            idx.sort_unstable();
            idx
        })
        .collect()
}

fn merge(edges: &mut [Vec<usize>], extra: Vec<Vec<usize>>) {
    for (row, more) in edges.iter_mut().zip(extra) {
        row.extend(more);
        row.sort_unstable();
        row.dedup();
    }
}

/// Optimal assignment of a dense square cost matrix; row `i` gets column `result[i]`.
pub fn solve(n: usize, cost: &[f64], k: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    let tol = 1e-13 * scale;
    let mut k = k.max(1);
    let mut edges = nearest(n, cost, k);
    let mut st = State::new(n, cost, &edges);
    loop {
        if !augment_all(n, cost, &edges, &mut st) {
            k = (2 * k).min(n);
            merge(&mut edges, nearest(n, cost, k));
            st.repair(n, cost, &edges, 0.0);
            continue;
        }
        let mut added = false;
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            for (j, &cij) in row.iter().enumerate() {
                if cij - st.u[i] - st.v[j] < -tol {
                    if let Err(pos) = edges[i].binary_search(&j) {
                        edges[i].insert(pos, j);
                        added = true;
                    }
                }
            }
        }
        if !added {
            return st.row_to_col;
        }
        st.repair(n, cost, &edges, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_solver() {
        let n = 40;
        let cost: Vec<f64> = (0..n * n).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        let total = |s: &[usize]| -> f64 { s.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum() };
        let dense = crate::lsap::solve(n, &cost);
        for k in [1, 3, 8, 40] {
            let sparse = solve(n, &cost, k);
            assert!((total(&sparse) - total(&dense)).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn repairs_reach_the_dense_optimum() {
        let n = 300;
        let pts: Vec<f64> = (0..4 * n).map(|i| ((i as f64 * 0.618_033_988_7).fract() * 7.3).sin().abs()).collect();
        let cost: Vec<f64> = (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                (pts[2 * i] - pts[2 * n + 2 * j]).powi(2) + (pts[2 * i + 1] - pts[2 * n + 2 * j + 1]).powi(2)
            })
            .collect();
        let total = |s: &[usize]| -> f64 { s.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum() };
        let dense = total(&crate::lsap::solve(n, &cost));
        for k in [1, 2, 5] {
            let sparse = solve(n, &cost, k);
            let mut seen = sparse.clone();
            seen.sort_unstable();
            assert!(seen.iter().enumerate().all(|(a, &b)| a == b));
            assert!((total(&sparse) - dense).abs() < 1e-10, "k = {k}");
        }
    }
}
