//! Dense linear assignment by the Jonker-Volgenant algorithm.
//!
//! Column reduction, two rounds of augmenting row reduction, then Dijkstra-type
//! shortest augmenting paths for the rows left free.

const NONE: usize = usize::MAX;

/// Minimizes `Σ_i cost[i][row_to_col[i]]` over permutations of a square matrix
/// given row-major. Returns the column assigned to every row.
pub fn solve(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    let c = |i: usize, j: usize| cost[i * n + j];
    let mut rowsol = vec![NONE; n];
    let mut colsol = vec![NONE; n];
    let mut v = vec![0.0f64; n];
    let mut matches = vec![0usize; n];

    for j in (0..n).rev() {
        let mut imin = 0;
        let mut min = c(0, j);
        for i in 1..n {
            if c(i, j) < min {
                min = c(i, j);
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if v[j] < v[rowsol[imin]] {
            let j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = NONE;
        } else {
            colsol[j] = NONE;
        }
    }

    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = rowsol[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    min = min.min(c(i, j) - v[j]);
                }
            }
            if min.is_finite() {
                v[j1] -= min;
            }
        }
    }

    for _ in 0..2 {
        let prev = std::mem::take(&mut free);
        let mut k = 0;
        let mut queue = prev;
        while k < queue.len() {
            let i = queue[k];
            k += 1;
            let mut umin = c(i, 0) - v[0];
            let mut j1 = 0;
            let mut j2 = NONE;
            let mut usubmin = f64::INFINITY;
            for j in 1..n {
                let h = c(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = colsol[j1];
            if umin < usubmin && usubmin.is_finite() {
                v[j1] -= usubmin - umin;
            } else if i0 != NONE && j2 != NONE {
                j1 = j2;
                i0 = colsol[j2];
            }
            if rowsol[i] != NONE && colsol[rowsol[i]] == i {
                colsol[rowsol[i]] = NONE;
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if i0 != NONE {
                rowsol[i0] = NONE;
                if umin < usubmin && usubmin.is_finite() {
                    k -= 1;
                    queue[k] = i0;
                } else {
                    free.push(i0);
                }
            }
        }
    }

    let mut d = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &freerow in &free {
        for j in 0..n {
            d[j] = c(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = 0.0;
        let endofpath;
        'search: loop {
            if up == low {
                last = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if colsol[j] == NONE {
                        endofpath = j;
                        break 'search;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = colsol[j1];
            let h = c(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = collist[k];
                let v2 = c(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if colsol[j] == NONE {
                            endofpath = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
                k += 1;
            }
        }
        for &j1 in &collist[..last] {
            v[j1] += d[j1] - min;
        }
        let mut j = endofpath;
        loop {
            let i = pred[j];
            colsol[j] = i;
            let next = rowsol[i];
            rowsol[i] = j;
            j = next;
            if i == freerow {
                break;
            }
        }
    }
    rowsol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_case() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let sol = solve(3, &cost);
        let total: f64 = sol.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn all_ties() {
        let sol = solve(5, &[1.0; 25]);
        let mut s = sol.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }
}
