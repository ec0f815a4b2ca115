//! Exhaustive permutation search, used as an oracle for small instances.

use super::CostMatrix;

pub const MAX_BRUTE_FORCE: usize = 9;

/// Best permutation (first found on ties, in Heap's order) plus duals from
/// shortest paths in the reduced-cost graph of that permutation.
pub(crate) fn solve<C: CostMatrix>(c: &C) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = c.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum::<f64>();
    let mut best = perm.clone();
    let mut best_val = total(&perm);
    // Heap's algorithm, iterative form.
    let mut stack = vec![0usize; n];
    let mut k = 1;
    while k < n {
        if stack[k] < k {
            if k % 2 == 0 {
                perm.swap(0, k);
            } else {
                perm.swap(stack[k], k);
            }
            let v = total(&perm);
            if v < best_val {
                best_val = v;
                best.clone_from(&perm);
            }
            stack[k] += 1;
            k = 1;
        } else {
            stack[k] = 0;
            k += 1;
        }
    }

    // Column prices satisfy v_j - v_{pi(i)} <= c_ij - c_{i pi(i)}; Bellman-Ford
    // from a virtual source gives the largest such prices below zero.
    let mut v = vec![0.0; n];
    for _ in 0..n {
        let mut changed = false;
        for (i, &pj) in best.iter().enumerate() {
            let base = c.get(i, pj);
            for j in 0..n {
                let cand = v[pj] + c.get(i, j) - base;
                if cand < v[j] {
                    v[j] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let u = best.iter().enumerate().map(|(i, &j)| c.get(i, j) - v[j]).collect();
    (best, u, v)
}
