//! Edge-weighted undirected graphs with the metric utilities the rest of the
//! crate leans on: Dijkstra (plain, masked, multi-source with labels), strong
//! cluster diameters, quotients by vertex partitions, connected components,
//! normalization to unit minimum distance, and a plain-text edge-list format.
//!
//! Vertices are `0..n-1`. Edge lengths are strictly positive finite reals and
//! there is at most one edge per vertex pair.

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex id {0} out of range for n = {1}")]
    VertexOutOfRange(u32, usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(u32, u32),
    #[error("edge ({0}, {1}) has non-positive or non-finite length {2}")]
    BadLength(u32, u32, f64),
    #[error("graph is not connected")]
    Disconnected,
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("cluster {{{0}, ...}} does not induce a connected subgraph")]
    ClusterDisconnected(u32),
    #[error("vertex sets do not partition the graph (vertex {0} covered {1} times)")]
    NotAPartition(u32, usize),
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph has no vertices")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub len: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    n: usize,
    edges: Vec<(u32, u32, f64)>,
}

/// Undirected graph with positive edge lengths, canonical edge order
/// (u < v, sorted lexicographically) and a prebuilt adjacency table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(u32, f64)>>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl TryFrom<RawGraph> for WeightedGraph {
    type Error = GraphError;
    fn try_from(raw: RawGraph) -> Result<Self, GraphError> {
        WeightedGraph::new(
            raw.n,
            raw.edges
                .into_iter()
                .map(|(u, v, len)| Edge { u, v, len })
                .collect(),
        )
    }
}

impl From<WeightedGraph> for RawGraph {
    fn from(g: WeightedGraph) -> RawGraph {
        RawGraph {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.u, e.v, e.len)).collect(),
        }
    }
}

/// Distance summary of a graph. `k` is the smallest integer with
/// 2^k >= diameter (0 when the diameter is at most 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub diameter: f64,
    pub min_distance: f64,
    pub aspect_ratio: f64,
    pub k: u32,
}

/// Smallest k >= 0 with 2^k >= d, robust to float dust just below a power of two.
pub fn ceil_log2(d: f64) -> u32 {
    let target = d * (1.0 - 1e-9);
    let mut k = 0u32;
    let mut p = 1.0f64;
    while p < target {
        p *= 2.0;
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLengthMode {
    /// Every quotient edge gets length 1.
    Unit,
    /// Quotient edge length = minimum length among crossing edges.
    MinCrossing,
}

/// A partition of `0..n-1` into vertex clusters. Cluster order is preserved
/// from construction; members are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexPartition {
    clusters: Vec<Vec<u32>>,
    cluster_of: Vec<u32>,
}

impl VertexPartition {
    pub fn from_clusters(n: usize, clusters: Vec<Vec<u32>>) -> Result<Self, GraphError> {
        let mut cover = vec![0usize; n];
        for c in &clusters {
            if c.is_empty() {
                return Err(GraphError::EmptyCluster);
            }
            for &v in c {
                if (v as usize) >= n {
                    return Err(GraphError::VertexOutOfRange(v, n));
                }
                cover[v as usize] += 1;
            }
        }
        for (v, &times) in cover.iter().enumerate() {
            if times != 1 {
                return Err(GraphError::NotAPartition(v as u32, times));
            }
        }
        let mut clusters = clusters;
        for c in &mut clusters {
            c.sort_unstable();
        }
        let mut cluster_of = vec![0u32; n];
        for (i, c) in clusters.iter().enumerate() {
            for &v in c {
                cluster_of[v as usize] = i as u32;
            }
        }
        Ok(VertexPartition {
            clusters,
            cluster_of,
        })
    }

    /// Build from a per-vertex cluster assignment; cluster ids must be dense 0..k.
    pub fn from_assignment(assign: &[u32]) -> Result<Self, GraphError> {
        let k = match assign.iter().max() {
            Some(&m) => m as usize + 1,
            None => return Err(GraphError::Empty),
        };
        let mut clusters = vec![Vec::new(); k];
        for (v, &c) in assign.iter().enumerate() {
            clusters[c as usize].push(v as u32);
        }
        Self::from_clusters(assign.len(), clusters)
    }

    pub fn clusters(&self) -> &[Vec<u32>] {
        &self.clusters
    }

    pub fn cluster_of(&self, v: u32) -> u32 {
        self.cluster_of[v as usize]
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

#[derive(PartialEq)]
struct HeapKey(f64, u32, u32);

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .total_cmp(&other.0)
            .then(self.1.cmp(&other.1))
            .then(self.2.cmp(&other.2))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl WeightedGraph {
    pub fn new(n: usize, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for e in &mut edges {
            if (e.u as usize) >= n {
                return Err(GraphError::VertexOutOfRange(e.u, n));
            }
            if (e.v as usize) >= n {
                return Err(GraphError::VertexOutOfRange(e.v, n));
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if !(e.len > 0.0 && e.len.is_finite()) {
                return Err(GraphError::BadLength(e.u, e.v, e.len));
            }
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.sort_unstable_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        for w in edges.windows(2) {
            if w[0].u == w[1].u && w[0].v == w[1].v {
                return Err(GraphError::DuplicateEdge(w[0].u, w[0].v));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u as usize].push((e.v, e.len));
            adj[e.v as usize].push((e.u, e.len));
        }
        for a in &mut adj {
            a.sort_unstable_by_key(|&(v, _)| v);
        }
        Ok(WeightedGraph { n, edges, adj })
    }

    pub fn single_vertex() -> Self {
        WeightedGraph::new(1, Vec::new()).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, f64)] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].iter().any(|&(w, _)| w == v)
    }

    pub fn edge_len(&self, u: u32, v: u32) -> Option<f64> {
        self.adj[u as usize]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, len)| len)
    }

    /// Single-source shortest path distances. Unreachable vertices get infinity.
    pub fn dijkstra(&self, src: u32) -> Vec<f64> {
        self.dijkstra_within(None, &[(src, 0.0)])
    }

    /// Multi-source Dijkstra restricted to `allowed` vertices (all when None).
    /// Seeds carry initial distances; seed vertices must be allowed.
    /// Single-source shortest paths with predecessor links, restricted to
    /// `allowed` vertices. Predecessors are deterministic: the first strict
    /// improver wins, and heap ties pop in vertex-id order.
    pub fn dijkstra_tree(&self, allowed: Option<&[bool]>, src: u32) -> (Vec<f64>, Vec<u32>) {
        let mut dist = vec![f64::INFINITY; self.n];
        let mut pred = vec![u32::MAX; self.n];
        let mut heap = BinaryHeap::new();
        dist[src as usize] = 0.0;
        heap.push(Reverse(HeapKey(0.0, src, 0)));
        while let Some(Reverse(HeapKey(d, v, _))) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for &(w, len) in &self.adj[v as usize] {
                if let Some(a) = allowed {
                    if !a[w as usize] {
                        continue;
                    }
                }
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    pred[w as usize] = v;
                    heap.push(Reverse(HeapKey(nd, w, 0)));
                }
            }
        }
        (dist, pred)
    }

    pub fn dijkstra_within(&self, allowed: Option<&[bool]>, seeds: &[(u32, f64)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n];
        let mut heap = BinaryHeap::new();
        for &(s, d0) in seeds {
            debug_assert!(allowed.map_or(true, |a| a[s as usize]));
            if d0 < dist[s as usize] {
                dist[s as usize] = d0;
                heap.push(Reverse(HeapKey(d0, s, 0)));
            }
        }
        while let Some(Reverse(HeapKey(d, v, _))) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for &(w, len) in &self.adj[v as usize] {
                if let Some(a) = allowed {
                    if !a[w as usize] {
                        continue;
                    }
                }
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    heap.push(Reverse(HeapKey(nd, w, 0)));
                }
            }
        }
        dist
    }

    /// Multi-source Dijkstra where each seed carries a label; vertices adopt
    /// the lexicographically smallest (distance, label) over all paths. Ties
    /// between equal distances therefore resolve to the smallest label,
    /// consistently along shortest paths. Returns (distance, label) per
    /// vertex, with (infinity, u32::MAX) for unreachable ones.
    pub fn dijkstra_labeled(
        &self,
        allowed: Option<&[bool]>,
        seeds: &[(u32, f64, u32)],
    ) -> Vec<(f64, u32)> {
        let mut best: Vec<(f64, u32)> = vec![(f64::INFINITY, u32::MAX); self.n];
        let mut heap = BinaryHeap::new();
        for &(s, d0, lab) in seeds {
            debug_assert!(allowed.map_or(true, |a| a[s as usize]));
            if (d0, lab) < best[s as usize] {
                best[s as usize] = (d0, lab);
                heap.push(Reverse(HeapKey(d0, lab, s)));
            }
        }
        while let Some(Reverse(HeapKey(d, lab, v))) = heap.pop() {
            if (d, lab) > best[v as usize] {
                continue;
            }
            for &(w, len) in &self.adj[v as usize] {
                if let Some(a) = allowed {
                    if !a[w as usize] {
                        continue;
                    }
                }
                let nd = d + len;
                if (nd, lab) < best[w as usize] {
                    best[w as usize] = (nd, lab);
                    heap.push(Reverse(HeapKey(nd, lab, w)));
                }
            }
        }
        best
    }

    /// Hop distances (edge counts) from the seed set, restricted to `allowed`.
    pub fn bfs_hops(&self, allowed: Option<&[bool]>, seeds: &[u32]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &s in seeds {
            if dist[s as usize] == usize::MAX {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v as usize] {
                if let Some(a) = allowed {
                    if !a[w as usize] {
                        continue;
                    }
                }
                if dist[w as usize] == usize::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn shortest_path_distance(&self, u: u32, v: u32) -> Result<f64, GraphError> {
        if (u as usize) >= self.n {
            return Err(GraphError::VertexOutOfRange(u, self.n));
        }
        if (v as usize) >= self.n {
            return Err(GraphError::VertexOutOfRange(v, self.n));
        }
        Ok(self.dijkstra(u)[v as usize])
    }

    pub fn all_pairs(&self) -> Vec<Vec<f64>> {
        (0..self.n as u32).map(|v| self.dijkstra(v)).collect()
    }

    /// Maximum pairwise distance inside the subgraph induced by `cluster`.
    /// Errors if the cluster is empty or the induced subgraph is disconnected.
    pub fn strong_diameter(&self, cluster: &[u32]) -> Result<f64, GraphError> {
        if cluster.is_empty() {
            return Err(GraphError::EmptyCluster);
        }
        let mut allowed = vec![false; self.n];
        for &v in cluster {
            if (v as usize) >= self.n {
                return Err(GraphError::VertexOutOfRange(v, self.n));
            }
            allowed[v as usize] = true;
        }
        let mut diam = 0.0f64;
        for &v in cluster {
            let dist = self.dijkstra_within(Some(&allowed), &[(v, 0.0)]);
            for &u in cluster {
                let d = dist[u as usize];
                if d.is_infinite() {
                    return Err(GraphError::ClusterDisconnected(cluster[0]));
                }
                diam = diam.max(d);
            }
        }
        Ok(diam)
    }

    /// Connected components of the graph minus `removed`, each sorted
    /// ascending, components ordered by smallest member.
    pub fn connected_components(&self, removed: &[u32]) -> Vec<Vec<u32>> {
        let mut alive = vec![true; self.n];
        for &v in removed {
            if (v as usize) < self.n {
                alive[v as usize] = false;
            }
        }
        self.components_within(&alive)
    }

    /// Connected components among vertices with `within[v] == true`.
    pub fn components_within(&self, within: &[bool]) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if !within[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start as u32];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(w, _) in &self.adj[v as usize] {
                    if within[w as usize] && !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components(&[]).len() == 1
    }

    /// Quotient by a partition. Quotient vertex i corresponds to cluster i.
    /// Every cluster must induce a connected subgraph.
    pub fn contract_clusters(
        &self,
        partition: &VertexPartition,
        mode: EdgeLengthMode,
    ) -> Result<WeightedGraph, GraphError> {
        if partition.cluster_of.len() != self.n {
            return Err(GraphError::NotAPartition(0, 0));
        }
        for c in partition.clusters() {
            let mut allowed = vec![false; self.n];
            for &v in c {
                allowed[v as usize] = true;
            }
            let hops = self.bfs_hops(Some(&allowed), &[c[0]]);
            if c.iter().any(|&v| hops[v as usize] == usize::MAX) {
                return Err(GraphError::ClusterDisconnected(c[0]));
            }
        }
        let mut crossing: std::collections::BTreeMap<(u32, u32), f64> =
            std::collections::BTreeMap::new();
        for e in &self.edges {
            let cu = partition.cluster_of(e.u);
            let cv = partition.cluster_of(e.v);
            if cu == cv {
                continue;
            }
            let key = (cu.min(cv), cu.max(cv));
            let entry = crossing.entry(key).or_insert(f64::INFINITY);
            *entry = entry.min(e.len);
        }
        let edges = crossing
            .into_iter()
            .map(|((u, v), min_len)| Edge {
                u,
                v,
                len: match mode {
                    EdgeLengthMode::Unit => 1.0,
                    EdgeLengthMode::MinCrossing => min_len,
                },
            })
            .collect();
        WeightedGraph::new(partition.len(), edges)
    }

    /// Induced subgraph on `cluster` (which must be sorted ascending).
    /// Returns the subgraph and the map from new ids to original ids.
    pub fn induced(&self, cluster: &[u32]) -> Result<(WeightedGraph, Vec<u32>), GraphError> {
        if cluster.is_empty() {
            return Err(GraphError::EmptyCluster);
        }
        debug_assert!(cluster.windows(2).all(|w| w[0] < w[1]));
        let mut new_id = vec![u32::MAX; self.n];
        for (i, &v) in cluster.iter().enumerate() {
            if (v as usize) >= self.n {
                return Err(GraphError::VertexOutOfRange(v, self.n));
            }
            new_id[v as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            let (nu, nv) = (new_id[e.u as usize], new_id[e.v as usize]);
            if nu != u32::MAX && nv != u32::MAX {
                edges.push(Edge {
                    u: nu,
                    v: nv,
                    len: e.len,
                });
            }
        }
        Ok((WeightedGraph::new(cluster.len(), edges)?, cluster.to_vec()))
    }

    /// Distance summary. Errors on a disconnected graph. A single vertex has
    /// diameter 0, min distance 1 (by convention), aspect ratio 1, k = 0.
    pub fn metrics(&self) -> Result<GraphMetrics, GraphError> {
        if self.n == 1 {
            return Ok(GraphMetrics {
                diameter: 0.0,
                min_distance: 1.0,
                aspect_ratio: 1.0,
                k: 0,
            });
        }
        let mut diameter = 0.0f64;
        let mut min_distance = f64::INFINITY;
        for v in 0..self.n as u32 {
            let dist = self.dijkstra(v);
            for u in 0..self.n {
                if u as u32 == v {
                    continue;
                }
                let d = dist[u];
                if d.is_infinite() {
                    return Err(GraphError::Disconnected);
                }
                diameter = diameter.max(d);
                min_distance = min_distance.min(d);
            }
        }
        Ok(GraphMetrics {
            diameter,
            min_distance,
            aspect_ratio: diameter / min_distance,
            k: ceil_log2(diameter),
        })
    }

    /// Rescale all lengths so the minimum pairwise distance is exactly 1.
    /// Returns the rescaled graph and its metrics. Distance ratios are
    /// preserved since every length is divided by the same factor.
    pub fn normalize(&self) -> Result<(WeightedGraph, GraphMetrics), GraphError> {
        if self.n == 1 {
            let g = self.clone();
            let m = g.metrics()?;
            return Ok((g, m));
        }
        let before = self.metrics()?;
        let scale = before.min_distance;
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                u: e.u,
                v: e.v,
                len: e.len / scale,
            })
            .collect();
        let g = WeightedGraph::new(self.n, edges)?;
        let m = g.metrics()?;
        Ok((g, m))
    }

    /// Plain text: first line "n m", then one "u v len" line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            s.push_str(&format!("{} {} {}\n", e.u, e.v, e.len));
        }
        s
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let mut it = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, line: usize, what: &str| -> Result<usize, GraphError> {
            tok.ok_or(GraphError::Parse {
                line,
                msg: format!("missing {what}"),
            })?
            .parse()
            .map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad {what}"),
            })
        };
        let n = parse_usize(it.next(), hline + 1, "vertex count")?;
        let m = parse_usize(it.next(), hline + 1, "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for (lno, line) in lines {
            let mut it = line.split_whitespace();
            let u = parse_usize(it.next(), lno + 1, "endpoint")? as u32;
            let v = parse_usize(it.next(), lno + 1, "endpoint")? as u32;
            let len: f64 = it
                .next()
                .ok_or(GraphError::Parse {
                    line: lno + 1,
                    msg: "missing length".into(),
                })?
                .parse()
                .map_err(|_| GraphError::Parse {
                    line: lno + 1,
                    msg: "bad length".into(),
                })?;
            edges.push(Edge { u, v, len });
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header claims {} edges, found {}", m, edges.len()),
            });
        }
        WeightedGraph::new(n, edges)
    }
}
