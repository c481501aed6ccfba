//! Capacitated s-t networks and an exact max-flow solver.
//!
//! The solver follows Boykov and Kolmogorov: two search trees rooted at the
//! source and the sink grow until they touch, the connecting path is
//! augmented, and orphaned subtrees are re-adopted instead of being rebuilt.
//! Tree reuse is what makes it fast on the short-path, low-degree graphs that
//! image energies produce.
//!
//! Capacities are `f64`. A residual capacity counts as usable only when it
//! exceeds [`RESIDUAL_EPS`], which also bounds how small an augmentation can
//! be and guarantees termination.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Residual capacities at or below this are treated as saturated.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// A directed graph with paired residual arcs.
///
/// Arc `k` and arc `k ^ 1` are reverses of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    heads: Vec<usize>,
    capacity: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
}

/// Result of a max-flow computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// `true` for nodes on the source side of the minimum cut.
    pub source_side: Vec<bool>,
    /// Residual capacity per arc after the flow was pushed.
    pub residual: Vec<f64>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        assert!(source < node_count && sink < node_count && source != sink);
        FlowNetwork {
            node_count,
            source,
            sink,
            heads: Vec::new(),
            capacity: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arc_count(&self) -> usize {
        self.heads.len()
    }

    /// Adds the pair `from -> to` (capacity `forward`) and `to -> from`
    /// (capacity `backward`); returns the index of the forward arc.
    pub fn add_arc_pair(&mut self, from: usize, to: usize, forward: f64, backward: f64) -> Result<usize> {
        if from >= self.node_count || to >= self.node_count || from == to {
            return Err(Error::InvalidParams(alloc::format!("invalid arc {from} -> {to}")));
        }
        for cap in [forward, backward] {
            if !(cap.is_finite() && cap >= 0.0) {
                return Err(Error::InvalidParams(alloc::format!(
                    "arc {from} -> {to} has invalid capacity {cap}"
                )));
            }
        }
        let k = self.heads.len();
        self.heads.push(to);
        self.capacity.push(forward);
        self.adjacency[from].push(k);
        self.heads.push(from);
        self.capacity.push(backward);
        self.adjacency[to].push(k + 1);
        Ok(k)
    }

    pub fn head(&self, arc: usize) -> usize {
        self.heads[arc]
    }

    pub fn tail(&self, arc: usize) -> usize {
        self.heads[arc ^ 1]
    }

    pub fn capacity(&self, arc: usize) -> f64 {
        self.capacity[arc]
    }

    pub fn arcs_from(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Total capacity of arcs leaving the `source_side` set.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        (0..self.heads.len())
            .filter(|&a| source_side[self.tail(a)] && !source_side[self.head(a)])
            .map(|a| self.capacity[a])
            .sum()
    }

    /// DIMACS max-flow text. Nodes are 1-based; only arcs with positive
    /// capacity are listed.
    pub fn to_dimacs(&self) -> String {
        let arcs: Vec<usize> = (0..self.heads.len()).filter(|&a| self.capacity[a] > 0.0).collect();
        let mut out = String::new();
        let _ = writeln!(out, "p max {} {}", self.node_count, arcs.len());
        let _ = writeln!(out, "n {} s", self.source + 1);
        let _ = writeln!(out, "n {} t", self.sink + 1);
        for a in arcs {
            let _ = writeln!(out, "a {} {} {}", self.tail(a) + 1, self.head(a) + 1, self.capacity[a]);
        }
        out
    }

    /// Maximum s-t flow and the source side of a minimum cut.
    pub fn max_flow(&self) -> MaxFlow {
        let mut solver = Solver::new(self);
        solver.run();
        let residual = solver.residual;
        let source_side = reachable_from(self, &residual, self.source);
        // The flow value is the net outflow of the source.
        let value = self.adjacency[self.source]
            .iter()
            .map(|&a| self.capacity[a] - residual[a])
            .fold(0.0, |acc, f| acc + f);
        MaxFlow {
            value,
            source_side,
            residual,
        }
    }
}

/// Nodes reachable from `start` through arcs with usable residual capacity.
fn reachable_from(net: &FlowNetwork, residual: &[f64], start: usize) -> Vec<bool> {
    let mut seen = vec![false; net.node_count];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        for &a in &net.adjacency[u] {
            let v = net.heads[a];
            if !seen[v] && residual[a] > RESIDUAL_EPS {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parent {
    None,
    Root,
    Orphan,
    /// Arc joining the node to its parent, oriented in the direction flow
    /// travels: parent -> node in the source tree, node -> parent in the sink
    /// tree.
    Arc(usize),
}

struct Solver<'a> {
    net: &'a FlowNetwork,
    residual: Vec<f64>,
    tree: Vec<Tree>,
    parent: Vec<Parent>,
    active: VecDeque<usize>,
    in_active: Vec<bool>,
    orphans: VecDeque<usize>,
    // Distance-to-root cache used during adoption.
    stamp: Vec<u64>,
    dist: Vec<u32>,
    time: u64,
}

impl<'a> Solver<'a> {
    fn new(net: &'a FlowNetwork) -> Self {
        let n = net.node_count;
        let mut s = Solver {
            net,
            residual: net.capacity.clone(),
            tree: vec![Tree::Free; n],
            parent: vec![Parent::None; n],
            active: VecDeque::new(),
            in_active: vec![false; n],
            orphans: VecDeque::new(),
            stamp: vec![0; n],
            dist: vec![0; n],
            time: 0,
        };
        for (root, tree) in [(net.source, Tree::Source), (net.sink, Tree::Sink)] {
            s.tree[root] = tree;
            s.parent[root] = Parent::Root;
            s.stamp[root] = 1;
            s.dist[root] = 0;
            s.activate(root);
        }
        s.time = 1;
        s
    }

    fn activate(&mut self, v: usize) {
        if !self.in_active[v] {
            self.in_active[v] = true;
            self.active.push_back(v);
        }
    }

    fn parent_node(&self, v: usize) -> Option<usize> {
        match (self.parent[v], self.tree[v]) {
            (Parent::Arc(a), Tree::Source) => Some(self.net.tail(a)),
            (Parent::Arc(a), Tree::Sink) => Some(self.net.head(a)),
            _ => None,
        }
    }

    fn run(&mut self) {
        while let Some(bridge) = self.grow() {
            self.time += 1;
            self.augment(bridge);
            self.adopt();
        }
    }

    /// Grows both trees until an arc with residual capacity links the source
    /// tree to the sink tree. Returns that arc (oriented source -> sink side).
    fn grow(&mut self) -> Option<usize> {
        while let Some(&p) = self.active.front() {
            if self.tree[p] == Tree::Free {
                self.active.pop_front();
                self.in_active[p] = false;
                continue;
            }
            let tree = self.tree[p];
            for idx in 0..self.net.adjacency[p].len() {
                let a = self.net.adjacency[p][idx];
                // Residual capacity in the direction flow would travel.
                let (flow_arc, q) = match tree {
                    Tree::Source => (a, self.net.heads[a]),
                    _ => (a ^ 1, self.net.heads[a]),
                };
                if self.residual[flow_arc] <= RESIDUAL_EPS {
                    continue;
                }
                match self.tree[q] {
                    Tree::Free => {
                        self.tree[q] = tree;
                        self.parent[q] = Parent::Arc(flow_arc);
                        self.stamp[q] = self.stamp[p];
                        self.dist[q] = self.dist[p] + 1;
                        self.activate(q);
                    }
                    other if other != tree => {
                        return Some(if tree == Tree::Source { a } else { a ^ 1 });
                    }
                    _ => {}
                }
            }
            self.active.pop_front();
            self.in_active[p] = false;
        }
        None
    }

    fn augment(&mut self, bridge: usize) {
        let net = self.net;
        // Bottleneck over the source half, the bridge and the sink half.
        let mut bottleneck = self.residual[bridge];
        let mut v = net.tail(bridge);
        while let Parent::Arc(a) = self.parent[v] {
            bottleneck = bottleneck.min(self.residual[a]);
            v = net.tail(a);
        }
        let mut v = net.head(bridge);
        while let Parent::Arc(a) = self.parent[v] {
            bottleneck = bottleneck.min(self.residual[a]);
            v = net.head(a);
        }

        self.push(bridge, bottleneck);
        let mut v = net.tail(bridge);
        while let Parent::Arc(a) = self.parent[v] {
            let up = net.tail(a);
            self.push(a, bottleneck);
            if self.residual[a] <= RESIDUAL_EPS {
                self.parent[v] = Parent::Orphan;
                self.orphans.push_back(v);
            }
            v = up;
        }
        let mut v = net.head(bridge);
        while let Parent::Arc(a) = self.parent[v] {
            let up = net.head(a);
            self.push(a, bottleneck);
            if self.residual[a] <= RESIDUAL_EPS {
                self.parent[v] = Parent::Orphan;
                self.orphans.push_back(v);
            }
            v = up;
        }
    }

    fn push(&mut self, arc: usize, amount: f64) {
        self.residual[arc] -= amount;
        self.residual[arc ^ 1] += amount;
    }

    /// Distance from `start` to its tree root following parents, or `None`
    /// when the chain ends in an orphan. Caches distances with the current
    /// timestamp.
    fn root_distance(&mut self, start: usize) -> Option<u32> {
        let mut d = 0u32;
        let mut v = start;
        loop {
            if self.stamp[v] == self.time {
                d += self.dist[v];
                break;
            }
            match self.parent[v] {
                Parent::Root => {
                    self.stamp[v] = self.time;
                    self.dist[v] = 0;
                    break;
                }
                Parent::Arc(_) => {
                    d += 1;
                    v = self.parent_node(v).expect("arc parent");
                }
                Parent::Orphan | Parent::None => return None,
            }
        }
        // Stamp the walked chain.
        let mut v = start;
        let mut dv = d;
        while self.stamp[v] != self.time {
            self.stamp[v] = self.time;
            self.dist[v] = dv;
            dv = dv.saturating_sub(1);
            v = self.parent_node(v).expect("arc parent");
        }
        Some(d)
    }

    fn adopt(&mut self) {
        while let Some(v) = self.orphans.pop_front() {
            let tree = self.tree[v];
            let mut best: Option<(usize, u32)> = None;
            for idx in 0..self.net.adjacency[v].len() {
                let a = self.net.adjacency[v][idx];
                let q = self.net.heads[a];
                if self.tree[q] != tree {
                    continue;
                }
                // Flow arc from candidate parent q to v (source) or v to q (sink).
                let flow_arc = if tree == Tree::Source { a ^ 1 } else { a };
                if self.residual[flow_arc] <= RESIDUAL_EPS {
                    continue;
                }
                if let Some(d) = self.root_distance(q) {
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((flow_arc, d));
                    }
                }
            }
            if let Some((arc, d)) = best {
                self.parent[v] = Parent::Arc(arc);
                self.stamp[v] = self.time;
                self.dist[v] = d + 1;
                continue;
            }

            // No parent: v leaves its tree and its children become orphans.
            for idx in 0..self.net.adjacency[v].len() {
                let a = self.net.adjacency[v][idx];
                let q = self.net.heads[a];
                if self.tree[q] != tree {
                    continue;
                }
                let toward_v = if tree == Tree::Source { a ^ 1 } else { a };
                if self.residual[toward_v] > RESIDUAL_EPS {
                    self.activate(q);
                }
                if self.parent_node(q) == Some(v) {
                    self.parent[q] = Parent::Orphan;
                    self.orphans.push_back(q);
                }
            }
            self.tree[v] = Tree::Free;
            self.parent[v] = Parent::None;
        }
    }
}
