//! Jonker–Volgenant shortest augmenting path assignment.
//!
//! Column reduction, reduction transfer and two rounds of augmenting row
//! reduction build a partial assignment with feasible column prices; the
//! remaining free rows are matched by Dijkstra-style augmentation.

use super::CostMatrix;

const NONE: usize = usize::MAX;

/// Returns `(row_to_col, u, v)` with `u_i + v_j <= c_ij` and equality on the matching.
pub(crate) fn lapjv<C: CostMatrix>(c: &C) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = c.rows();
    debug_assert_eq!(n, c.cols());
    if n == 1 {
        return (vec![0], vec![c.get(0, 0)], vec![0.0]);
    }
    let mut rowsol = vec![NONE; n];
    let mut colsol = vec![NONE; n];
    let mut v = vec![0.0; n];
    let mut matches = vec![0u32; n];

    // Column reduction, scanning columns in reverse.
    for j in (0..n).rev() {
        let mut min = c.get(0, j);
        let mut imin = 0;
        for i in 1..n {
            let h = c.get(i, j);
            if h < min {
                min = h;
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

    // Reduction transfer from uniquely assigned rows.
    let mut free = Vec::new();
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = rowsol[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    min = min.min(c.get(i, j) - v[j]);
                }
            }
            v[j1] -= min;
        }
    }

    // Augmenting row reduction, two passes. The work budget guards against
    // long chains of tiny price decrements in floating point.
    for _ in 0..2 {
        let mut stack: Vec<usize> = free.drain(..).rev().collect();
        let mut budget = 16 * n + 64;
        while let Some(i) = stack.pop() {
            if budget == 0 {
                free.push(i);
                continue;
            }
            budget -= 1;
            let mut umin = c.get(i, 0) - v[0];
            let mut j1 = 0;
            let mut usubmin = f64::INFINITY;
            let mut j2 = 0;
            for j in 1..n {
                let h = c.get(i, j) - v[j];
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
            let strict = umin < usubmin;
            if strict {
                v[j1] -= usubmin - umin;
            } else if i0 != NONE {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if i0 != NONE {
                if strict {
                    stack.push(i0);
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // Augmentation along shortest alternating paths.
    let mut d = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &freerow in &free {
        for j in 0..n {
            d[j] = c.get(freerow, j) - v[j];
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
            let h = c.get(i, j1) - v[j1] - min;
            for k in up..n {
                let j = collist[k];
                let v2 = c.get(i, j) - v[j] - h;
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
            }
        }
        // Columns scanned before the last minimum update get their prices raised.
        for &j1 in &collist[..last] {
            v[j1] += d[j1] - min;
        }
        let mut end = endofpath;
        loop {
            let i = pred[end];
            colsol[end] = i;
            let j1 = end;
            end = rowsol[i];
            rowsol[i] = j1;
            if i == freerow {
                break;
            }
        }
    }

    let u = (0..n).map(|i| c.get(i, rowsol[i]) - v[rowsol[i]]).collect();
    (rowsol, u, v)
}
