//! Primal network simplex for uncapacitated min-cost flow with integer
//! supplies and real arc costs.
//!
//! The spanning tree is kept as parent pointers with explicit child lists.
//! An artificial root is connected to every node; the initial tree is
//! strongly feasible and the leaving-arc rule (last blocking arc met when
//! walking the cycle from its apex) keeps it so, which rules out cycling on
//! degenerate pivots. Entering arcs are priced by block search.

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// A min-cost flow instance: `supply[v]` units leave node `v` (negative for
/// demand). Supplies must sum to zero.
#[derive(Debug, Clone, Default)]
pub(crate) struct FlowNetwork {
    pub supply: Vec<i64>,
    pub src: Vec<u32>,
    pub dst: Vec<u32>,
    pub cost: Vec<f64>,
}

impl FlowNetwork {
    pub fn with_nodes(supply: Vec<i64>) -> Self {
        Self {
            supply,
            ..Self::default()
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) {
        self.src.push(from as u32);
        self.dst.push(to as u32);
        self.cost.push(cost);
    }

    pub fn node_count(&self) -> usize {
        self.supply.len()
    }

    pub fn arc_count(&self) -> usize {
        self.src.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FlowSolution {
    /// Flow on each arc of the network, in input order.
    pub flow: Vec<i64>,
    /// Node potentials; `cost + pi[src] - pi[dst] >= 0` on every arc, with
    /// equality on arcs carrying flow.
    pub potential: Vec<f64>,
}

struct Tree {
    n: usize,
    root: usize,
    src: Vec<u32>,
    dst: Vec<u32>,
    cost: Vec<f64>,
    flow: Vec<i64>,
    in_tree: Vec<bool>,
    parent: Vec<u32>,
    pred: Vec<u32>,
    /// `true` when `pred[v]` points from `v` to its parent.
    up: Vec<bool>,
    depth: Vec<u32>,
    pi: Vec<f64>,
    children: Vec<Vec<u32>>,
    child_pos: Vec<u32>,
}

impl Tree {
    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.pi[self.src[e] as usize] - self.pi[self.dst[e] as usize]
    }

    fn detach(&mut self, v: usize) {
        let p = self.parent[v] as usize;
        let pos = self.child_pos[v] as usize;
        let kids = &mut self.children[p];
        kids.swap_remove(pos);
        if pos < kids.len() {
            let moved = kids[pos] as usize;
            self.child_pos[moved] = pos as u32;
        }
    }

    fn attach(&mut self, v: usize, p: usize) {
        self.parent[v] = p as u32;
        self.child_pos[v] = self.children[p].len() as u32;
        self.children[p].push(v as u32);
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a] as usize;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b] as usize;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    /// Recomputes depth and potential below `top`, shifting potentials by
    /// `sigma`.
    fn refresh_subtree(&mut self, top: usize, sigma: f64) {
        let mut stack = vec![top as u32];
        while let Some(v) = stack.pop() {
            let v = v as usize;
            self.pi[v] += sigma;
            self.depth[v] = self.depth[self.parent[v] as usize] + 1;
            stack.extend_from_slice(&self.children[v]);
        }
    }

    /// Potentials recomputed from scratch along tree arcs.
    fn exact_potentials(&self) -> Vec<f64> {
        let mut pi = vec![0.0; self.n + 1];
        let mut stack: Vec<u32> = self.children[self.root].clone();
        while let Some(v) = stack.pop() {
            let v = v as usize;
            let p = self.parent[v] as usize;
            let e = self.pred[v] as usize;
            pi[v] = if self.up[v] {
                pi[p] - self.cost[e]
            } else {
                pi[p] + self.cost[e]
            };
            stack.extend_from_slice(&self.children[v]);
        }
        pi
    }

    /// Performs one pivot on the entering arc `e_in`.
    fn pivot(&mut self, e_in: usize) -> Result<()> {
        let first = self.src[e_in] as usize;
        let second = self.dst[e_in] as usize;
        let join = self.join(first, second);

        let mut delta = i64::MAX;
        let mut u_out = NONE as usize;
        let mut side = 0u8;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u] as usize];
                if d < delta {
                    delta = d;
                    u_out = u;
                    side = 1;
                }
            }
            u = self.parent[u] as usize;
        }
        u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u] as usize];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    side = 2;
                }
            }
            u = self.parent[u] as usize;
        }
        if side == 0 {
            return Err(Error::Certificate("min-cost flow is unbounded".into()));
        }

        if delta > 0 {
            self.flow[e_in] += delta;
            u = first;
            while u != join {
                let e = self.pred[u] as usize;
                if self.up[u] {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                u = self.parent[u] as usize;
            }
            u = second;
            while u != join {
                let e = self.pred[u] as usize;
                if self.up[u] {
                    self.flow[e] += delta;
                } else {
                    self.flow[e] -= delta;
                }
                u = self.parent[u] as usize;
            }
        }

        let (u_in, v_in) = if side == 1 {
            (first, second)
        } else {
            (second, first)
        };
        self.in_tree[e_in] = true;
        self.in_tree[self.pred[u_out] as usize] = false;

        // Stem: u_in, parent(u_in), ..., u_out. Reverse it and hang it on v_in.
        let mut stem = vec![u_in];
        while *stem.last().unwrap() != u_out {
            let last = *stem.last().unwrap();
            stem.push(self.parent[last] as usize);
        }
        let old_pred: Vec<u32> = stem.iter().map(|&s| self.pred[s]).collect();
        let old_up: Vec<bool> = stem.iter().map(|&s| self.up[s]).collect();
        for &s in &stem {
            self.detach(s);
        }
        self.attach(u_in, v_in);
        self.pred[u_in] = e_in as u32;
        self.up[u_in] = self.src[e_in] as usize == u_in;
        for k in 1..stem.len() {
            self.attach(stem[k], stem[k - 1]);
            self.pred[stem[k]] = old_pred[k - 1];
            self.up[stem[k]] = !old_up[k - 1];
        }

        let sigma = if self.up[u_in] {
            self.pi[v_in] - self.pi[u_in] - self.cost[e_in]
        } else {
            self.pi[v_in] - self.pi[u_in] + self.cost[e_in]
        };
        self.refresh_subtree(u_in, sigma);
        Ok(())
    }
}

/// Solves the instance to optimality.
pub(crate) fn solve(net: &FlowNetwork) -> Result<FlowSolution> {
    let n = net.node_count();
    let m = net.arc_count();
    if n == 0 {
        return Ok(FlowSolution {
            flow: vec![],
            potential: vec![],
        });
    }
    if net.supply.iter().sum::<i64>() != 0 {
        return Err(Error::Certificate("supplies do not balance".into()));
    }
    if let Some(c) = net.cost.iter().find(|c| !c.is_finite()) {
        return Err(Error::Certificate(format!("non-finite arc cost {c}")));
    }
    let max_cost = net.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let art_cost = (max_cost + 1.0) * (n as f64 + 1.0);
    let eps = 1e-11 * (max_cost + 1.0) + 4.0 * f64::EPSILON * art_cost;

    let root = n;
    let total = m + n;
    let mut t = Tree {
        n,
        root,
        src: Vec::with_capacity(total),
        dst: Vec::with_capacity(total),
        cost: Vec::with_capacity(total),
        flow: vec![0; total],
        in_tree: vec![false; total],
        parent: vec![NONE; n + 1],
        pred: vec![NONE; n + 1],
        up: vec![false; n + 1],
        depth: vec![0; n + 1],
        pi: vec![0.0; n + 1],
        children: vec![Vec::new(); n + 1],
        child_pos: vec![0; n + 1],
    };
    t.src.extend_from_slice(&net.src);
    t.dst.extend_from_slice(&net.dst);
    t.cost.extend_from_slice(&net.cost);
    t.children[root].reserve(n);
    for v in 0..n {
        let e = m + v;
        let b = net.supply[v];
        if b >= 0 {
            t.src.push(v as u32);
            t.dst.push(root as u32);
            t.cost.push(0.0);
            t.flow[e] = b;
            t.up[v] = true;
            t.pi[v] = 0.0;
        } else {
            t.src.push(root as u32);
            t.dst.push(v as u32);
            t.cost.push(art_cost);
            t.flow[e] = -b;
            t.up[v] = false;
            t.pi[v] = art_cost;
        }
        t.in_tree[e] = true;
        t.pred[v] = e as u32;
        t.depth[v] = 1;
        t.attach(v, root);
    }

    let block = ((m as f64).sqrt() as usize).max(10).min(m.max(1));
    let mut next = 0usize;
    loop {
        // Block search over the real arcs.
        let mut best = -eps;
        let mut entering = usize::MAX;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        let mut e = next;
        while scanned < m {
            if !t.in_tree[e] {
                let rc = t.reduced_cost(e);
                if rc < best {
                    best = rc;
                    entering = e;
                }
            }
            scanned += 1;
            in_block += 1;
            e += 1;
            if e == m {
                e = 0;
            }
            if in_block == block {
                if entering != usize::MAX {
                    break;
                }
                in_block = 0;
            }
        }
        if entering == usize::MAX {
            // Confirm optimality against potentials rebuilt from the tree.
            t.pi = t.exact_potentials();
            let again = (0..m).find(|&e| !t.in_tree[e] && t.reduced_cost(e) < -eps);
            match again {
                Some(e) => {
                    next = e;
                    continue;
                }
                None => break,
            }
        }
        next = e;
        t.pivot(entering)?;
    }

    if (m..total).any(|e| t.flow[e] != 0) {
        return Err(Error::Certificate("flow problem is infeasible".into()));
    }
    t.flow.truncate(m);
    t.pi.truncate(n);
    Ok(FlowSolution {
        flow: t.flow,
        potential: t.pi,
    })
}

/// Rounds nonnegative weights to integers summing exactly to `scale` by the
/// largest-remainder rule (ties broken by index).
pub(crate) fn integer_masses(weights: &[f64], scale: i64) -> Vec<i64> {
    let total: f64 = weights.iter().sum();
    let s = scale as f64;
    let mut out: Vec<i64> = Vec::with_capacity(weights.len());
    let mut rema: Vec<(f64, usize)> = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let x = w / total * s;
        let f = x.floor();
        out.push(f as i64);
        rema.push((x - f, i));
    }
    let mut diff = scale - out.iter().sum::<i64>();
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let n = weights.len();
    let mut k = 0;
    while diff > 0 {
        out[rema[k % n].1] += 1;
        diff -= 1;
        k += 1;
    }
    while diff < 0 {
        // Take from the largest entries.
        let i = (0..n).max_by_key(|&i| (out[i], std::cmp::Reverse(i))).unwrap();
        out[i] -= 1;
        diff += 1;
    }
    out
}
