//! Primal network simplex for the uncapacitated transportation problem.
//!
//! Nodes are the `n` sources, the `m` sinks and an artificial root joined to
//! every node by an arc of large cost. The initial basis is the artificial
//! star, which is strongly feasible; the leaving arc is chosen by
//! Cunningham's rule (last blocking arc from the apex), so degenerate pivots
//! cannot cycle. Entering arcs come from block search pricing.
//!
//! The spanning tree is rebuilt from the basic arcs after each pivot. That
//! costs `O(n + m)`, the same order as one pricing block.

use std::collections::VecDeque;

use crate::{Error, Result};

pub(crate) struct Solution {
    /// Flow on every real arc, in the order of `arcs`.
    pub flows: Vec<f64>,
    /// Node potentials; `-pi[i]` and `pi[n + j]` are optimal duals.
    pub potentials: Vec<f64>,
    pub feasible: bool,
}

pub(crate) struct Problem<'a> {
    pub supply: &'a [f64],
    pub demand: &'a [f64],
    /// `(source, sink, cost)`, finite costs only.
    pub arcs: &'a [(usize, usize, f64)],
}

const NONE: usize = usize::MAX;
/// Flow left on an artificial arc above which the problem is infeasible.
const FEASIBILITY_TOL: f64 = 1e-9;

pub(crate) fn solve(problem: &Problem) -> Result<Solution> {
    let (n, m) = (problem.supply.len(), problem.demand.len());
    let root = n + m;
    let nodes = n + m + 1;
    let real = problem.arcs.len();

    let max_cost = problem.arcs.iter().map(|a| a.2).fold(0.0, f64::max);
    let art_cost = (nodes as f64) * (max_cost + 1.0);
    let eps = 1e-11 * (max_cost + 1.0);

    let mut source = Vec::with_capacity(real + nodes - 1);
    let mut target = Vec::with_capacity(real + nodes - 1);
    let mut cost = Vec::with_capacity(real + nodes - 1);
    for &(i, j, c) in problem.arcs {
        source.push(i);
        target.push(n + j);
        cost.push(c);
    }
    let mut flow = vec![0.0; real];
    let mut basis = Vec::with_capacity(nodes - 1);
    for k in 0..n + m {
        let s = if k < n {
            problem.supply[k]
        } else {
            -problem.demand[k - n]
        };
        basis.push(source.len());
        if s > 0.0 {
            source.push(k);
            target.push(root);
            flow.push(s);
        } else {
            source.push(root);
            target.push(k);
            flow.push(-s);
        }
        cost.push(art_cost);
    }
    let total_arcs = source.len();
    let mut in_tree = vec![false; total_arcs];
    for &a in &basis {
        in_tree[a] = true;
    }

    let mut tree = Tree::new(nodes);
    tree.rebuild(root, &basis, &source, &target, &cost);

    let block = ((total_arcs as f64).sqrt() as usize).max(16);
    let mut next_arc = 0;
    let max_pivots = 50 * total_arcs + 10_000;
    let mut pivots = 0;

    loop {
        // Block search: most negative reduced cost within the first block
        // that contains a candidate.
        let mut entering = NONE;
        let mut best = -eps;
        let mut scanned = 0;
        let mut since_block = 0;
        while scanned < total_arcs {
            let a = next_arc;
            next_arc = (next_arc + 1) % total_arcs;
            scanned += 1;
            since_block += 1;
            if !in_tree[a] {
                let rc = cost[a] + tree.pi[source[a]] - tree.pi[target[a]];
                if rc < best {
                    best = rc;
                    entering = a;
                }
            }
            if since_block == block {
                if entering != NONE {
                    break;
                }
                since_block = 0;
            }
        }
        if entering == NONE {
            break;
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Inconsistent(format!(
                "network simplex exceeded {max_pivots} pivots"
            )));
        }

        let (u, v) = (source[entering], target[entering]);
        // Walk both endpoints to the apex. Each entry: (arc, increases).
        let mut up_from_v = Vec::new();
        let mut up_from_u = Vec::new();
        let (mut x, mut y) = (v, u);
        while tree.depth[x] > tree.depth[y] {
            let a = tree.pred[x];
            up_from_v.push((a, source[a] == x));
            x = tree.parent[x];
        }
        while tree.depth[y] > tree.depth[x] {
            let a = tree.pred[y];
            up_from_u.push((a, target[a] == y));
            y = tree.parent[y];
        }
        while x != y {
            let a = tree.pred[x];
            up_from_v.push((a, source[a] == x));
            x = tree.parent[x];
            let b = tree.pred[y];
            up_from_u.push((b, target[b] == y));
            y = tree.parent[y];
        }
        // Cycle order from the apex: down to u, across, up from v.
        let mut cycle: Vec<(usize, bool)> = up_from_u.into_iter().rev().collect();
        cycle.push((entering, true));
        cycle.extend(up_from_v);

        let delta = cycle
            .iter()
            .filter(|(_, inc)| !inc)
            .map(|(a, _)| flow[*a])
            .fold(f64::INFINITY, f64::min);
        if !delta.is_finite() {
            return Err(Error::Inconsistent("unbounded transportation problem".into()));
        }
        let leaving = cycle
            .iter()
            .rev()
            .find(|(a, inc)| !inc && flow[*a] <= delta)
            .map(|(a, _)| *a)
            .expect("a decreasing arc attains the minimum");
        for &(a, inc) in &cycle {
            if inc {
                flow[a] += delta;
            } else {
                flow[a] -= delta;
            }
        }
        flow[leaving] = 0.0;

        in_tree[leaving] = false;
        in_tree[entering] = true;
        let slot = basis.iter().position(|&a| a == leaving).expect("leaving arc is basic");
        basis[slot] = entering;
        tree.rebuild(root, &basis, &source, &target, &cost);
    }

    let residual = flow[real..].iter().fold(0.0, |acc: f64, f| acc.max(*f));
    flow.truncate(real);
    Ok(Solution {
        flows: flow,
        potentials: tree.pi,
        feasible: residual <= FEASIBILITY_TOL,
    })
}

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
}

impl Tree {
    fn new(nodes: usize) -> Self {
        Tree {
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
            adjacency: vec![Vec::new(); nodes],
        }
    }

    fn rebuild(&mut self, root: usize, basis: &[usize], source: &[usize], target: &[usize], cost: &[f64]) {
        for list in &mut self.adjacency {
            list.clear();
        }
        for &a in basis {
            self.adjacency[source[a]].push(a);
            self.adjacency[target[a]].push(a);
        }
        self.parent.fill(NONE);
        self.parent[root] = root;
        self.pred[root] = NONE;
        self.depth[root] = 0;
        self.pi[root] = 0.0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for k in 0..self.adjacency[x].len() {
                let a = self.adjacency[x][k];
                let y = if source[a] == x { target[a] } else { source[a] };
                if self.parent[y] != NONE {
                    continue;
                }
                self.parent[y] = x;
                self.pred[y] = a;
                self.depth[y] = self.depth[x] + 1;
                // Reduced cost of a basic arc is zero: c + pi[s] - pi[t] = 0.
                self.pi[y] = if source[a] == x {
                    self.pi[x] + cost[a]
                } else {
                    self.pi[x] - cost[a]
                };
                queue.push_back(y);
            }
        }
        debug_assert!(self.parent.iter().all(|p| *p != NONE), "basis is a spanning tree");
    }
}
