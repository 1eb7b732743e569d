//! Transportation problem with arbitrary weights by successive shortest paths.
//!
//! Dijkstra with Johnson potentials on the dense bipartite residual graph;
//! every augmentation saturates a supply, a demand or a reverse edge.

const EPS_MASS: f64 = 1e-15;

/// Optimal cost `min Σ_ij π_ij c_ij` over couplings of `a` (rows) and `b` (columns).
pub fn min_cost(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    assert_eq!(cost.len(), n * m, "cost matrix shape");
    let c = |i: usize, j: usize| cost[i * m + j];
    let mut flow = vec![0.0f64; n * m];
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut pu = vec![0.0f64; n];
    let mut pv = vec![0.0f64; m];
    for (j, p) in pv.iter_mut().enumerate() {
        *p = (0..n).map(|i| c(i, j)).fold(f64::INFINITY, f64::min);
    }
    let mut du = vec![0.0f64; n];
    let mut dv = vec![0.0f64; m];
    let mut pred_v = vec![0usize; m];
    let mut pred_u = vec![usize::MAX; n];
    let mut done_u = vec![false; n];
    let mut done_v = vec![false; m];
    loop {
        if ra.iter().all(|&x| x <= EPS_MASS) || rb.iter().all(|&x| x <= EPS_MASS) {
            break;
        }
        du.iter_mut().for_each(|x| *x = f64::INFINITY);
        dv.iter_mut().for_each(|x| *x = f64::INFINITY);
        done_u.iter_mut().for_each(|x| *x = false);
        done_v.iter_mut().for_each(|x| *x = false);
        for i in 0..n {
            if ra[i] > EPS_MASS {
                du[i] = 0.0;
                pred_u[i] = usize::MAX;
            }
        }
        let target;
        let dist_t;
        loop {
            let mut best = f64::INFINITY;
            let mut pick = None;
            for i in 0..n {
                if !done_u[i] && du[i] < best {
                    best = du[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_v[j] && dv[j] < best {
                    best = dv[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_u, idx)) = pick else {
                panic!("transportation problem is infeasible");
            };
            if is_u {
                done_u[idx] = true;
                for j in 0..m {
                    if done_v[j] {
                        continue;
                    }
                    let rc = (c(idx, j) + pu[idx] - pv[j]).max(0.0);
                    if best + rc < dv[j] {
                        dv[j] = best + rc;
                        pred_v[j] = idx;
                    }
                }
            } else {
                done_v[idx] = true;
                if rb[idx] > EPS_MASS {
                    target = idx;
                    dist_t = best;
                    break;
                }
                for i in 0..n {
                    if done_u[i] || flow[i * m + idx] <= EPS_MASS {
                        continue;
                    }
                    let rc = (-c(i, idx) - pu[i] + pv[idx]).max(0.0);
                    if best + rc < du[i] {
                        du[i] = best + rc;
                        pred_u[i] = idx;
                    }
                }
            }
        }
        for i in 0..n {
            pu[i] += du[i].min(dist_t);
        }
        for j in 0..m {
            pv[j] += dv[j].min(dist_t);
        }
        let mut delta = rb[target];
        let mut j = target;
        let source;
        loop {
            let i = pred_v[j];
            if pred_u[i] == usize::MAX {
                source = i;
                break;
            }
            let jp = pred_u[i];
            delta = delta.min(flow[i * m + jp]);
            j = jp;
        }
        delta = delta.min(ra[source]);
        let mut j = target;
        loop {
            let i = pred_v[j];
            flow[i * m + j] += delta;
            if pred_u[i] == usize::MAX {
                break;
            }
            let jp = pred_u[i];
            flow[i * m + jp] -= delta;
            j = jp;
        }
        ra[source] -= delta;
        rb[target] -= delta;
    }
    flow.iter().zip(cost).map(|(f, c)| f * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let cost = [0.0, 1.0, 1.0, 0.0];
        assert!((min_cost(&[0.5, 0.5], &[0.5, 0.5], &cost) - 0.0).abs() < 1e-15);
        assert!((min_cost(&[1.0, 0.0], &[0.5, 0.5], &cost) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn needs_reverse_edge() {
        let cost = [1.0, 2.0, 0.0, 5.0];
        let v = min_cost(&[0.5, 0.5], &[0.5, 0.5], &cost);
        assert!((v - 2.0 * 0.5).abs() < 1e-15);
    }
}
