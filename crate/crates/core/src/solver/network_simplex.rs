//! Primal network simplex on the complete bipartite transport graph.
//!
//! Nodes `0..m` are sources, `m..m+n` are sinks, and an artificial root is
//! joined to every node by a big-M arc, which gives the initial strongly
//! feasible spanning tree. Entering arcs are chosen by block search (Bland's
//! rule after a long run of degenerate pivots); the leaving arc follows the
//! strongly-feasible-tree convention, which prevents cycling. After each pivot
//! the detached subtree is re-hung and its potentials recomputed.

use super::CostMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const MASS_FLOOR: f64 = 1e-15;

pub(crate) struct Solution {
    pub entries: Vec<(usize, usize, f64)>,
    pub dual_mu: Vec<f64>,
    pub dual_nu: Vec<f64>,
}

struct Tree<'a, C: CostMatrix> {
    c: &'a C,
    m: usize,
    n: usize,
    art_cost: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl<C: CostMatrix> Tree<'_, C> {
    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn root(&self) -> usize {
        self.m + self.n
    }

    #[inline]
    fn ends(&self, e: usize) -> (usize, usize) {
        let a = self.real_arcs();
        if e < a {
            (e / self.n, self.m + e % self.n)
        } else {
            let u = e - a;
            if u < self.m {
                (u, self.root())
            } else {
                (self.root(), u)
            }
        }
    }

    #[inline]
    fn cost(&self, e: usize) -> f64 {
        let a = self.real_arcs();
        if e < a {
            self.c.get(e / self.n, e % self.n)
        } else if e - a < self.m {
            0.0
        } else {
            self.art_cost
        }
    }

    #[inline]
    fn reduced(&self, e: usize) -> f64 {
        let (s, t) = self.ends(e);
        self.cost(e) + self.pi[s] - self.pi[t]
    }

    /// Whether the tree arc into `u` from its parent points upward (u -> parent).
    #[inline]
    fn points_up(&self, u: usize) -> bool {
        self.ends(self.pred[u]).0 == u
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    /// Re-hangs the subtree containing `start` below `anchor` through arc `e`.
    fn rehang(&mut self, start: usize, anchor: usize, e: usize) {
        let mut stack = vec![(start, anchor, e)];
        while let Some((x, par, arc)) = stack.pop() {
            self.parent[x] = par;
            self.pred[x] = arc;
            self.depth[x] = self.depth[par] + 1;
            let (s, _) = self.ends(arc);
            self.pi[x] = if s == par { self.pi[par] + self.cost(arc) } else { self.pi[par] - self.cost(arc) };
            for k in 0..self.adj[x].len() {
                let f = self.adj[x][k];
                if f != arc {
                    let (s, t) = self.ends(f);
                    let y = if s == x { t } else { s };
                    stack.push((y, x, f));
                }
            }
        }
    }
}

fn remove_arc(list: &mut Vec<usize>, e: usize) {
    let pos = list.iter().position(|&f| f == e).expect("tree arc present in adjacency");
    list.swap_remove(pos);
}

pub(crate) fn solve<C: CostMatrix>(c: &C, a: &[f64], b: &[f64]) -> Result<Solution> {
    let (m, n) = (a.len(), b.len());
    let nodes = m + n;
    let arcs = m * n;
    let mut max_cost: f64 = 0.0;
    for i in 0..m {
        for j in 0..n {
            max_cost = max_cost.max(c.get(i, j).abs());
        }
    }
    let art_cost = (max_cost + 1.0) * nodes as f64;
    let eps = 1e-13 * (1.0 + max_cost);

    let mut t = Tree {
        c,
        m,
        n,
        art_cost,
        flow: vec![0.0; arcs + nodes],
        in_tree: vec![false; arcs + nodes],
        parent: vec![NONE; nodes + 1],
        pred: vec![NONE; nodes + 1],
        depth: vec![0; nodes + 1],
        pi: vec![0.0; nodes + 1],
        adj: vec![Vec::new(); nodes + 1],
    };
    let root = nodes;
    for u in 0..nodes {
        let e = arcs + u;
        t.parent[u] = root;
        t.pred[u] = e;
        t.depth[u] = 1;
        t.in_tree[e] = true;
        t.adj[u].push(e);
        t.adj[root].push(e);
        if u < m {
            t.flow[e] = a[u];
            t.pi[u] = 0.0;
        } else {
            t.flow[e] = b[u - m];
            t.pi[u] = art_cost;
        }
    }

    let block = ((arcs as f64).sqrt().ceil() as usize).max(10).min(arcs.max(1));
    let stall_limit = 10 * nodes;
    let pivot_limit = 200 * nodes * (1 + (nodes as f64).log2() as usize) + 100_000;
    let mut next_arc = 0;
    let mut stalled = 0usize;
    let mut pivots = 0usize;
    let mut degenerate_total = 0usize;

    loop {
        // Entering arc.
        let bland = stalled > stall_limit;
        let mut enter = NONE;
        if bland {
            for e in 0..arcs {
                if !t.in_tree[e] && t.reduced(e) < -eps {
                    enter = e;
                    break;
                }
            }
        } else {
            let mut best = -eps;
            let mut scanned = 0;
            let mut e = next_arc;
            while scanned < arcs {
                if !t.in_tree[e] {
                    let r = t.reduced(e);
                    if r < best {
                        best = r;
                        enter = e;
                    }
                }
                scanned += 1;
                e += 1;
                if e == arcs {
                    e = 0;
                }
                if scanned % block == 0 && enter != NONE {
                    break;
                }
            }
            next_arc = e;
        }
        if enter == NONE {
            break;
        }
        pivots += 1;
        if pivots > pivot_limit {
            return Err(Error::numerical(format!(
                "network simplex exceeded {pivot_limit} pivots ({degenerate_total} degenerate, {m}x{n} instance)"
            )));
        }

        // Leaving arc on the cycle closed by `enter` (flow pushed first -> second).
        let (first, second) = t.ends(enter);
        let join = t.join(first, second);
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut out_on_first = false;
        let mut u = first;
        while u != join {
            if t.points_up(u) {
                let d = t.flow[t.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    out_on_first = true;
                }
            }
            u = t.parent[u];
        }
        let mut u = second;
        while u != join {
            if !t.points_up(u) {
                let d = t.flow[t.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    out_on_first = false;
                }
            }
            u = t.parent[u];
        }
        if u_out == NONE {
            return Err(Error::numerical("unbounded pivot cycle in network simplex"));
        }

        if delta > 0.0 {
            stalled = 0;
            t.flow[enter] += delta;
            let mut u = first;
            while u != join {
                let e = t.pred[u];
                if t.points_up(u) {
                    t.flow[e] -= delta;
                } else {
                    t.flow[e] += delta;
                }
                u = t.parent[u];
            }
            let mut u = second;
            while u != join {
                let e = t.pred[u];
                if t.points_up(u) {
                    t.flow[e] += delta;
                } else {
                    t.flow[e] -= delta;
                }
                u = t.parent[u];
            }
        } else {
            stalled += 1;
            degenerate_total += 1;
        }

        // Swap arcs in the tree.
        let out = t.pred[u_out];
        t.flow[out] = 0.0;
        t.in_tree[out] = false;
        let par = t.parent[u_out];
        remove_arc(&mut t.adj[u_out], out);
        remove_arc(&mut t.adj[par], out);
        t.in_tree[enter] = true;
        t.adj[first].push(enter);
        t.adj[second].push(enter);
        if out_on_first {
            t.rehang(first, second, enter);
        } else {
            t.rehang(second, first, enter);
        }
    }

    let residual = (0..nodes).map(|u| t.flow[arcs + u]).fold(0.0, f64::max);
    if residual > 1e-12 {
        return Err(Error::numerical(format!(
            "network simplex ended with {residual:e} mass on artificial arcs"
        )));
    }
    // Pivot arithmetic can leave round-off residues on arcs that carry no mass.
    let mut entries = Vec::new();
    for e in 0..arcs {
        if t.flow[e] > MASS_FLOOR {
            entries.push((e / n, e % n, t.flow[e]));
        }
    }
    Ok(Solution {
        entries,
        dual_mu: (0..m).map(|i| -t.pi[i]).collect(),
        dual_nu: (0..n).map(|j| t.pi[m + j]).collect(),
    })
}
