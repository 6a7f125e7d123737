//! Explicit weighted graphs: the brute-force oracle behind the lazy
//! recursive metrics, and the export target for external verification.

use crate::rational::{format_len, Len};
use crate::{Error, PointAddr, Result};
use num::Zero;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

/// Undirected weighted graph over vertices `0..n`, with an optional address
/// label per vertex (kept when the graph is a materialized metric space).
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGraph {
    n: usize,
    adj: Vec<Vec<(usize, Len)>>,
    edges: Vec<(PointAddr, PointAddr, Len)>,
    labels: Vec<PointAddr>,
}

impl ExplicitGraph {
    pub fn new(n: usize) -> ExplicitGraph {
        ExplicitGraph {
            n,
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
            labels: (0..n as u32).map(PointAddr::base).collect(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: Len) {
        assert!(u < self.n && v < self.n && w >= Len::zero());
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
        self.edges.push((self.labels[u].clone(), self.labels[v].clone(), w));
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(PointAddr, PointAddr, Len)] {
        &self.edges
    }

    pub fn labels(&self) -> &[PointAddr] {
        &self.labels
    }

    pub fn vertex_of(&self, p: &PointAddr) -> Option<usize> {
        self.labels.iter().position(|l| l == p)
    }

    /// Single-source shortest paths; `None` for unreachable vertices.
    pub fn dijkstra(&self, from: usize) -> Vec<Option<Len>> {
        let mut dist: Vec<Option<Len>> = vec![None; self.n];
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((Len::zero(), from)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].is_some() {
                continue;
            }
            dist[u] = Some(d);
            for &(v, w) in &self.adj[u] {
                if dist[v].is_none() {
                    heap.push(Reverse((d + w, v)));
                }
            }
        }
        dist
    }

    pub fn shortest_path_len(&self, x: &PointAddr, y: &PointAddr) -> Result<Len> {
        let bad = |p: &PointAddr| Error::BadAddress {
            addr: p.to_string(),
            reason: "not a vertex of this graph".into(),
        };
        let u = self.vertex_of(x).ok_or_else(|| bad(x))?;
        let v = self.vertex_of(y).ok_or_else(|| bad(y))?;
        self.dijkstra(u)[v].ok_or_else(|| Error::InvalidParams("graph is disconnected".into()))
    }

    pub fn diameter(&self) -> Len {
        let mut best = Len::zero();
        for u in 0..self.n {
            for d in self.dijkstra(u).into_iter().flatten() {
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// Edge-list text: one `u v length` line per edge, with a vertex table
    /// in leading comments.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        let index: BTreeMap<&PointAddr, usize> =
            self.labels.iter().enumerate().map(|(i, p)| (p, i)).collect();
        for (p, i) in &index {
            out.push_str(&format!("# vertex {i} = {p}\n"));
        }
        for (u, v, w) in &self.edges {
            out.push_str(&format!("{} {} {}\n", index[u], index[v], format_len(*w)));
        }
        out
    }

    /// Parses the `u v length` edge-list format (comments ignored).
    pub fn parse_edge_list(text: &str) -> Result<ExplicitGraph> {
        let mut edges = Vec::new();
        let mut max_v = 0usize;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || it.next().ok_or_else(|| Error::Parse(format!("short edge line: {line:?}")));
            let u: usize = next()?.parse().map_err(|_| Error::Parse(format!("bad vertex in {line:?}")))?;
            let v: usize = next()?.parse().map_err(|_| Error::Parse(format!("bad vertex in {line:?}")))?;
            let w = crate::rational::parse_len(next()?)?;
            max_v = max_v.max(u).max(v);
            edges.push((u, v, w));
        }
        let mut g = ExplicitGraph::new(max_v + 1);
        for (u, v, w) in edges {
            g.add_edge(u, v, w);
        }
        Ok(g)
    }
}

/// Default vertex cap for materialization.
pub const DEFAULT_MATERIALIZE_CAP: u64 = 100_000;

/// Materializes a metric space as an explicit weighted graph whose
/// shortest-path metric equals the recursive `distance`.
pub fn materialize(space: &super::MetricSpace, cap: u64) -> Result<ExplicitGraph> {
    let points = space.enumerate_points(cap)?;
    let index: BTreeMap<&PointAddr, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut g = ExplicitGraph {
        n: points.len(),
        adj: vec![Vec::new(); points.len()],
        edges: Vec::new(),
        labels: points.clone(),
    };
    for (u, v, w) in space.raw_edges()? {
        let (iu, iv) = (index[&u], index[&v]);
        g.adj[iu].push((iv, w));
        g.adj[iv].push((iu, w));
        g.edges.push((u, v, w));
    }
    Ok(g)
}
