//! Sparse weighted undirected graphs and the constructors used by the
//! coloring reduction.
//!
//! A [`WeightedGraph`] is immutable once built. Every unordered pair is stored
//! once in the edge list; adjacency is kept in compressed (CSR) form so the
//! dynamics can sweep neighbors without chasing pointers.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// An undirected weighted edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph on `n` nodes, rejecting self-loops, out-of-range ids and
    /// repeated unordered pairs.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            if !w.is_finite() {
                return Err(Error::invalid(format!("non-finite weight on ({u}, {v})")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::invalid(format!("duplicate edge ({a}, {b})")));
            }
            list.push(Edge { u: a, v: b, w });
        }
        Ok(Self::from_checked(n, list))
    }

    /// Graph with `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Self::from_checked(n, Vec::new())
    }

    fn from_checked(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0usize; 2 * edges.len()];
        let mut weights = vec![0.0; 2 * edges.len()];
        for e in &edges {
            targets[fill[e.u]] = e.v;
            weights[fill[e.u]] = e.w;
            fill[e.u] += 1;
            targets[fill[e.v]] = e.u;
            weights[fill[e.v]] = e.w;
            fill[e.v] += 1;
        }
        WeightedGraph {
            n,
            edges,
            offsets,
            targets,
            weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `u` with the connecting edge weight.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Raw CSR view: `(offsets, targets, weights)`.
    pub fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.neighbors(u).map(|(_, w)| w).sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.neighbors(u).find(|&(t, _)| t == v).map(|(_, w)| w)
    }

    /// Total edge weight, each unordered pair counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                w: e.w * factor,
                ..*e
            })
            .collect();
        Self::from_checked(self.n, edges)
    }

    /// Union of two graphs over the same node set. Shared pairs are an error.
    pub fn union(&self, other: &WeightedGraph) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let all = self
            .edges
            .iter()
            .chain(other.edges.iter())
            .map(|e| (e.u, e.v, e.w));
        Self::from_edges(self.n, all)
    }

    /// Adds an apex at index 0 joined to every node with weight `w`; existing
    /// ids shift by one.
    pub fn add_apex(&self, w: f64) -> Self {
        self.add_apex_with(|_| w)
    }

    /// Apex variant with a per-node weight (indexed by the pre-shift id).
    pub fn add_apex_with(&self, weight_of: impl Fn(usize) -> f64) -> Self {
        let mut edges = Vec::with_capacity(self.edges.len() + self.n);
        edges.extend((0..self.n).map(|i| Edge {
            u: 0,
            v: i + 1,
            w: weight_of(i),
        }));
        edges.extend(self.edges.iter().map(|e| Edge {
            u: e.u + 1,
            v: e.v + 1,
            w: e.w,
        }));
        Self::from_checked(self.n + 1, edges)
    }
}

/// Complete graph on `k` nodes with uniform weight `w`.
pub fn complete_graph(k: usize, w: f64) -> Result<WeightedGraph> {
    if k == 0 {
        return Err(Error::invalid("complete graph needs at least one node"));
    }
    let edges = (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| Edge { u: a, v: b, w }))
        .collect();
    Ok(WeightedGraph::from_checked(k, edges))
}

/// Adjacency `A_G ⊗ I_K`: node `(i, κ)` is `i*K + κ`, and each edge `(i, j)`
/// of `g` is copied into every color layer.
pub fn kronecker_identity_left(g: &WeightedGraph, k: usize) -> Result<WeightedGraph> {
    if k == 0 {
        return Err(Error::invalid("identity factor must be positive"));
    }
    let mut edges = Vec::with_capacity(g.edge_count() * k);
    for e in g.edges() {
        for layer in 0..k {
            edges.push(Edge {
                u: e.u * k + layer,
                v: e.v * k + layer,
                w: e.w,
            });
        }
    }
    Ok(WeightedGraph::from_checked(g.node_count() * k, edges))
}

/// Adjacency `I_N ⊗ A_H`: `n` disjoint copies of `h`, copy `i` occupying ids
/// `i*|H| .. (i+1)*|H|`.
pub fn kronecker_identity_right(n: usize, h: &WeightedGraph) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::invalid("identity factor must be positive"));
    }
    let k = h.node_count();
    let mut edges = Vec::with_capacity(h.edge_count() * n);
    for block in 0..n {
        edges.extend(h.edges().iter().map(|e| Edge {
            u: block * k + e.u,
            v: block * k + e.v,
            w: e.w,
        }));
    }
    Ok(WeightedGraph::from_checked(n * k, edges))
}

/// Parses the line-oriented edge-list format: `u v w` per line, `#` comments,
/// optional `n <count>` header.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut declared: Option<usize> = None;
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "n" {
            if fields.len() != 2 || declared.is_some() || !triples.is_empty() {
                return Err(err("header must be a single leading `n <count>`".into()));
            }
            let n = fields[1]
                .parse::<usize>()
                .map_err(|_| err(format!("bad node count `{}`", fields[1])))?;
            declared = Some(n);
            continue;
        }
        if fields.len() != 3 {
            return Err(err(format!("expected `u v w`, got `{line}`")));
        }
        let id = |s: &str| -> Result<usize> {
            let v = s
                .parse::<i64>()
                .map_err(|_| err(format!("bad node id `{s}`")))?;
            usize::try_from(v).map_err(|_| err(format!("negative node id {v}")))
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = fields[2]
            .parse::<f64>()
            .ok()
            .filter(|w| w.is_finite())
            .ok_or_else(|| err(format!("bad weight `{}`", fields[2])))?;
        if u == v {
            return Err(err(format!("self-loop at node {u}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(err(format!("duplicate edge ({u}, {v})")));
        }
        if let Some(n) = declared {
            if u >= n || v >= n {
                return Err(err(format!("node id out of range for n = {n}")));
            }
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        triples.push((u, v, w));
    }

    let n = declared.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    WeightedGraph::from_edges(n, triples)
}

impl fmt::Display for WeightedGraph {
    /// Writes the graph back out in edge-list format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for e in &self.edges {
            writeln!(f, "{} {} {}", e.u, e.v, e.w)?;
        }
        Ok(())
    }
}
