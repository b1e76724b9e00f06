//! Shortcut partitions: cluster a graph so that every cluster has strong
//! diameter at most epsilon * diam(G), while shortest paths can be traced
//! through few clusters. Built on a buffered cop decomposition: each supernode
//! skeleton gets a greedy net, net points get random offsets, and every vertex
//! joins the net point minimizing offset distance inside its supernode.

use crate::cops::{build_cop_decomposition, CopDecomposition, CopError};
use crate::graph::{EdgeLengthMode, GraphError, VertexPartition, WeightedGraph};
use crate::rng::RandomSource;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShortcutError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cop(#[from] CopError),
    #[error("epsilon must be in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("all-pairs check capped at {cap} vertices, graph has {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("cluster {cluster} does not contain its center {center}")]
    CenterOutsideCluster { cluster: usize, center: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetPoint {
    pub supernode: u32,
    pub center: u32,
    pub alpha: f64,
}

/// Construction-time data kept so the verifier can recheck the net spacing
/// and replay the assignment. Not part of the serialized artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortcutSource {
    pub cop: CopDecomposition,
    pub net_points: Vec<NetPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawShortcut", into = "RawShortcut")]
pub struct ShortcutPartition {
    pub epsilon: f64,
    pub delta_internal: f64,
    pub clustering: VertexPartition,
    /// One center vertex per cluster, aligned with the clustering.
    pub centers: Vec<u32>,
    pub source: Option<ShortcutSource>,
}

/// The replayable source is construction-time data; two partitions are equal
/// when their serialized identity (scales, clusters, centers) agrees.
impl PartialEq for ShortcutPartition {
    fn eq(&self, other: &Self) -> bool {
        self.epsilon == other.epsilon
            && self.delta_internal == other.delta_internal
            && self.clustering == other.clustering
            && self.centers == other.centers
    }
}

#[derive(Serialize, Deserialize)]
struct RawShortcut {
    epsilon: f64,
    delta_internal: f64,
    clusters: Vec<Vec<u32>>,
    centers: Vec<u32>,
}

impl TryFrom<RawShortcut> for ShortcutPartition {
    type Error = ShortcutError;

    fn try_from(raw: RawShortcut) -> Result<Self, ShortcutError> {
        let n: usize = raw.clusters.iter().map(|c| c.len()).sum();
        let clustering = VertexPartition::from_clusters(n, raw.clusters)?;
        if raw.centers.len() != clustering.len() {
            return Err(GraphError::NotAPartition(0, raw.centers.len()).into());
        }
        for (i, &c) in raw.centers.iter().enumerate() {
            if clustering.clusters()[i].binary_search(&c).is_err() {
                return Err(ShortcutError::CenterOutsideCluster {
                    cluster: i,
                    center: c,
                });
            }
        }
        Ok(ShortcutPartition {
            epsilon: raw.epsilon,
            delta_internal: raw.delta_internal,
            clustering,
            centers: raw.centers,
            source: None,
        })
    }
}

impl From<ShortcutPartition> for RawShortcut {
    fn from(sp: ShortcutPartition) -> RawShortcut {
        RawShortcut {
            epsilon: sp.epsilon,
            delta_internal: sp.delta_internal,
            clusters: sp.clustering.clusters().to_vec(),
            centers: sp.centers,
        }
    }
}

/// Greedy net over a skeleton tree: scan vertices in id order, keep those at
/// tree distance >= delta from everything kept so far. Maximality gives the
/// covering half of the net property.
fn net_of_skeleton(g: &WeightedGraph, sk: &crate::cops::Skeleton, delta: f64) -> Vec<u32> {
    let k = sk.vertices.len();
    let idx: std::collections::BTreeMap<u32, usize> = sk
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for &(a, b) in &sk.edges {
        let len = g.edge_len(a, b).expect("skeleton edge exists in graph");
        let (ia, ib) = (idx[&a], idx[&b]);
        adj[ia].push((ib, len));
        adj[ib].push((ia, len));
    }
    let mut best = vec![f64::INFINITY; k];
    let mut net = Vec::new();
    for i in 0..k {
        if best[i] < delta {
            continue;
        }
        net.push(sk.vertices[i]);
        // relax best[] by tree distances from the new point
        let mut dist = vec![f64::INFINITY; k];
        let mut heap = std::collections::BinaryHeap::new();
        dist[i] = 0.0;
        heap.push(std::cmp::Reverse((0u64, i)));
        while let Some(std::cmp::Reverse((key, v))) = heap.pop() {
            if key != dist[v].to_bits() {
                continue;
            }
            for &(w, len) in &adj[v] {
                let nd = dist[v] + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(std::cmp::Reverse((nd.to_bits(), w)));
                }
            }
        }
        for v in 0..k {
            best[v] = best[v].min(dist[v]);
        }
    }
    net
}

fn skeleton_tree_distance(g: &WeightedGraph, sk: &crate::cops::Skeleton, from: u32, to: u32) -> f64 {
    let k = sk.vertices.len();
    let idx: std::collections::BTreeMap<u32, usize> = sk
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for &(a, b) in &sk.edges {
        let len = g.edge_len(a, b).expect("skeleton edge exists in graph");
        let (ia, ib) = (idx[&a], idx[&b]);
        adj[ia].push((ib, len));
        adj[ib].push((ia, len));
    }
    let mut dist = vec![f64::INFINITY; k];
    let mut heap = std::collections::BinaryHeap::new();
    dist[idx[&from]] = 0.0;
    heap.push(std::cmp::Reverse((0u64, idx[&from])));
    while let Some(std::cmp::Reverse((key, v))) = heap.pop() {
        if key != dist[v].to_bits() {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = dist[v] + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(std::cmp::Reverse((nd.to_bits(), w)));
            }
        }
    }
    dist[idx[&to]]
}

/// Replay the per-supernode assignment for given net points: each vertex of a
/// supernode joins the net point minimizing distance-inside-the-supernode plus
/// its offset, ties to the lowest center index. Returns per-center vertex
/// lists, indexed like `net_points`.
fn assign_clusters(
    g: &WeightedGraph,
    cop: &CopDecomposition,
    net_points: &[NetPoint],
) -> Vec<Vec<u32>> {
    let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); net_points.len()];
    for s in &cop.supernodes {
        let seeds: Vec<(u32, f64, u32)> = net_points
            .iter()
            .enumerate()
            .filter(|(_, np)| np.supernode == s.id)
            .map(|(ci, np)| (np.center, np.alpha, ci as u32))
            .collect();
        if seeds.is_empty() {
            continue;
        }
        let mut mask = vec![false; g.n()];
        for &v in &s.members {
            mask[v as usize] = true;
        }
        let labels = g.dijkstra_labeled(Some(&mask), &seeds);
        for &v in &s.members {
            let (d, lab) = labels[v as usize];
            assert!(
                d.is_finite(),
                "supernode {} member {v} unreachable from its net",
                s.id
            );
            clusters[lab as usize].push(v);
        }
    }
    clusters
}

/// Sample a shortcut partition. Sets the internal scale to
/// epsilon * diam(g) / 12 so that the 12x diameter blowup of the cluster
/// growth lands exactly on the epsilon * diam(g) bound.
pub fn shortcut_partition(
    g: &WeightedGraph,
    epsilon: f64,
    r: u32,
    rng: &mut RandomSource,
) -> Result<ShortcutPartition, ShortcutError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(ShortcutError::BadEpsilon(epsilon));
    }
    let metrics = g.metrics()?;
    if g.n() == 1 {
        return Ok(ShortcutPartition {
            epsilon,
            delta_internal: 0.0,
            clustering: VertexPartition::from_clusters(1, vec![vec![0]])?,
            centers: vec![0],
            source: None,
        });
    }
    let delta = epsilon / 12.0 * metrics.diameter;
    let cop = build_cop_decomposition(g, delta, r, rng.next_seed())?;
    let mut net_points = Vec::new();
    for s in &cop.supernodes {
        for x in net_of_skeleton(g, &s.skeleton, delta) {
            net_points.push(NetPoint {
                supernode: s.id,
                center: x,
                alpha: rng.uniform(0.0, delta),
            });
        }
    }
    let raw_clusters = assign_clusters(g, &cop, &net_points);
    let mut clusters = Vec::new();
    let mut centers = Vec::new();
    for (ci, cluster) in raw_clusters.into_iter().enumerate() {
        if !cluster.is_empty() {
            clusters.push(cluster);
            centers.push(net_points[ci].center);
        }
    }
    Ok(ShortcutPartition {
        epsilon,
        delta_internal: delta,
        clustering: VertexPartition::from_clusters(g.n(), clusters)?,
        centers,
        source: Some(ShortcutSource { cop, net_points }),
    })
}

/// Check the partition axioms, the exact strong-diameter bound, and (when the
/// construction data is present) the net spacing and assignment replay.
pub fn verify_shortcut_partition(g: &WeightedGraph, sp: &ShortcutPartition) -> Vec<String> {
    let mut out = Vec::new();
    if !(sp.epsilon > 0.0 && sp.epsilon <= 1.0) {
        out.push(format!("epsilon {} outside (0, 1]", sp.epsilon));
    }
    let metrics = match g.metrics() {
        Ok(m) => m,
        Err(e) => {
            out.push(format!("graph metrics unavailable: {e}"));
            return out;
        }
    };
    let expected_delta = sp.epsilon / 12.0 * metrics.diameter;
    if (sp.delta_internal - expected_delta).abs() > 1e-9 * (1.0 + metrics.diameter) {
        out.push(format!(
            "internal scale {} does not match epsilon/12 * diam = {expected_delta}",
            sp.delta_internal
        ));
    }
    if sp.clustering.clusters().iter().map(|c| c.len()).sum::<usize>() != g.n() {
        out.push("clustering does not cover the graph".to_string());
        return out;
    }
    if sp.centers.len() != sp.clustering.len() {
        out.push(format!(
            "{} centers for {} clusters",
            sp.centers.len(),
            sp.clustering.len()
        ));
        return out;
    }
    let bound = sp.epsilon * metrics.diameter;
    for (i, cluster) in sp.clustering.clusters().iter().enumerate() {
        if cluster.binary_search(&sp.centers[i]).is_err() {
            out.push(format!(
                "cluster {i} does not contain its center {}",
                sp.centers[i]
            ));
        }
        match g.strong_diameter(cluster) {
            Ok(d) => {
                if d > bound * (1.0 + 1e-9) {
                    out.push(format!(
                        "cluster {i} has strong diameter {d}, over epsilon * diam = {bound}"
                    ));
                }
            }
            Err(e) => out.push(format!("cluster {i}: {e}")),
        }
    }
    if let Some(src) = &sp.source {
        let assign = src.cop.assignment(g.n());
        for (i, cluster) in sp.clustering.clusters().iter().enumerate() {
            let owner = assign[cluster[0] as usize];
            if cluster.iter().any(|&v| assign[v as usize] != owner) {
                out.push(format!("cluster {i} straddles supernodes"));
            }
        }
        for s in &src.cop.supernodes {
            let pts: Vec<&NetPoint> = src
                .net_points
                .iter()
                .filter(|np| np.supernode == s.id)
                .collect();
            for a in 0..pts.len() {
                if !(0.0..=sp.delta_internal).contains(&pts[a].alpha) {
                    out.push(format!(
                        "net point {} of supernode {} has offset {} outside [0, {}]",
                        pts[a].center, s.id, pts[a].alpha, sp.delta_internal
                    ));
                }
                for b in a + 1..pts.len() {
                    let d = skeleton_tree_distance(g, &s.skeleton, pts[a].center, pts[b].center);
                    if d < sp.delta_internal * (1.0 - 1e-9) {
                        out.push(format!(
                            "net points {} and {} of supernode {} at tree distance {d}, under {}",
                            pts[a].center, pts[b].center, s.id, sp.delta_internal
                        ));
                    }
                }
            }
            for &v in &s.skeleton.vertices {
                let covered = pts.iter().any(|np| {
                    skeleton_tree_distance(g, &s.skeleton, np.center, v)
                        <= sp.delta_internal * (1.0 + 1e-9)
                });
                if !covered {
                    out.push(format!(
                        "skeleton vertex {v} of supernode {} not covered by its net",
                        s.id
                    ));
                }
            }
        }
        let replayed = assign_clusters(g, &src.cop, &src.net_points);
        let nonempty: Vec<&Vec<u32>> = replayed.iter().filter(|c| !c.is_empty()).collect();
        let matches = nonempty.len() == sp.clustering.len()
            && nonempty
                .iter()
                .zip(sp.clustering.clusters())
                .all(|(a, b)| a.as_slice() == b.as_slice());
        if !matches {
            out.push("assignment replay disagrees with stored clustering".to_string());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowHopReport {
    pub pairs: usize,
    pub max_hops: usize,
    /// Smallest h for which every pair satisfies the hop budget
    /// epsilon * h * ceil(dist / (epsilon * diam)).
    pub h_hat: f64,
    /// Largest hop count per distance unit ceil(dist / (epsilon * diam)).
    pub hops_per_unit: f64,
    pub quotient_hop_diameter: usize,
    /// Pairs exceeding the budget for the h passed in.
    pub violations: Vec<String>,
}

/// All-pairs check of the low-hop property: for every vertex pair, walk a
/// canonical shortest path, restrict the cluster quotient to clusters that
/// path touches, and measure the hop distance between the endpoint clusters.
pub fn verify_low_hop(
    g: &WeightedGraph,
    sp: &ShortcutPartition,
    h: u32,
    cap: usize,
) -> Result<LowHopReport, ShortcutError> {
    if g.n() > cap {
        return Err(ShortcutError::TooLarge { n: g.n(), cap });
    }
    let metrics = g.metrics()?;
    let quotient = g.contract_clusters(&sp.clustering, EdgeLengthMode::Unit)?;
    let k = sp.clustering.len();
    let scale = sp.epsilon * metrics.diameter;
    let mut max_hops = 0usize;
    let mut h_hat: f64 = 0.0;
    let mut hops_per_unit: f64 = 0.0;
    let mut violations = Vec::new();
    let mut pairs = 0usize;
    for u in 0..g.n() as u32 {
        let (dist, pred) = g.dijkstra_tree(None, u);
        for v in (u + 1)..g.n() as u32 {
            pairs += 1;
            let cu = sp.clustering.cluster_of(u);
            let cv = sp.clustering.cluster_of(v);
            if cu == cv {
                continue;
            }
            let mut on_path = vec![false; k];
            let mut cur = v;
            loop {
                on_path[sp.clustering.cluster_of(cur) as usize] = true;
                if cur == u {
                    break;
                }
                cur = pred[cur as usize];
            }
            let hops_vec = quotient.bfs_hops(Some(&on_path), &[cu]);
            let hops = hops_vec[cv as usize];
            if hops == usize::MAX {
                violations.push(format!(
                    "pair ({u}, {v}): endpoint clusters not connected through the shortest path's clusters"
                ));
                continue;
            }
            max_hops = max_hops.max(hops);
            let d = dist[v as usize];
            let units = if scale > 0.0 {
                ((d / scale) - 1e-9).ceil().max(1.0)
            } else {
                1.0
            };
            h_hat = h_hat.max(hops as f64 / (sp.epsilon * units));
            hops_per_unit = hops_per_unit.max(hops as f64 / units);
            let budget = sp.epsilon * h as f64 * units;
            if hops as f64 > budget + 1e-9 {
                violations.push(format!(
                    "pair ({u}, {v}): {hops} hops, budget {budget} at h = {h}"
                ));
            }
        }
    }
    let mut quotient_hop_diameter = 0usize;
    for c in 0..k as u32 {
        let hops = quotient.bfs_hops(None, &[c]);
        for &x in &hops {
            if x != usize::MAX {
                quotient_hop_diameter = quotient_hop_diameter.max(x);
            }
        }
    }
    Ok(LowHopReport {
        pairs,
        max_hops,
        h_hat,
        hops_per_unit,
        quotient_hop_diameter,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCutFrequency {
    pub u: u32,
    pub v: u32,
    pub len: f64,
    pub cut_count: u32,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutFrequencyTable {
    pub samples: u32,
    /// max over edges of frequency * epsilon * diam / len.
    pub beta_hat: f64,
    pub edges: Vec<EdgeCutFrequency>,
}

/// Empirical per-edge cut frequency over independently seeded runs.
pub fn estimate_shortcut_cut_probability(
    g: &WeightedGraph,
    epsilon: f64,
    r: u32,
    samples: u32,
    rng: &mut RandomSource,
) -> Result<CutFrequencyTable, ShortcutError> {
    assert!(samples >= 1, "need at least one sample");
    let mut counts = vec![0u32; g.edges().len()];
    for _ in 0..samples {
        let mut run_rng = RandomSource::new(rng.next_seed());
        let sp = shortcut_partition(g, epsilon, r, &mut run_rng)?;
        for (i, e) in g.edges().iter().enumerate() {
            if sp.clustering.cluster_of(e.u) != sp.clustering.cluster_of(e.v) {
                counts[i] += 1;
            }
        }
    }
    let scale = if g.n() > 1 {
        epsilon * g.metrics()?.diameter
    } else {
        0.0
    };
    let mut beta_hat: f64 = 0.0;
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let frequency = counts[i] as f64 / samples as f64;
            beta_hat = beta_hat.max(frequency * scale / e.len);
            EdgeCutFrequency {
                u: e.u,
                v: e.v,
                len: e.len,
                cut_count: counts[i],
                frequency,
            }
        })
        .collect();
    Ok(CutFrequencyTable {
        samples,
        beta_hat,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::Edge;

    #[test]
    fn single_vertex_single_cluster() {
        let g = WeightedGraph::single_vertex();
        let mut rng = RandomSource::new(0);
        let sp = shortcut_partition(&g, 0.5, 5, &mut rng).unwrap();
        assert_eq!(sp.clustering.clusters(), &[vec![0]]);
        assert_eq!(sp.centers, vec![0]);
        assert!(verify_shortcut_partition(&g, &sp).is_empty());
    }

    #[test]
    fn grid_partition_diameter_bound_exact() {
        // 10x10 unit grid has diameter 18; every cluster must stay within 9
        let g = gen::grid(10, 10, 1.0).unwrap();
        for seed in [0u64, 1, 2] {
            let mut rng = RandomSource::new(seed);
            let sp = shortcut_partition(&g, 0.5, 5, &mut rng).unwrap();
            let violations = verify_shortcut_partition(&g, &sp);
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
            for cluster in sp.clustering.clusters() {
                assert!(g.strong_diameter(cluster).unwrap() <= 9.0);
            }
        }
    }

    #[test]
    fn rejects_bad_epsilon_and_disconnected() {
        let g = gen::path(4).unwrap();
        let mut rng = RandomSource::new(0);
        assert!(matches!(
            shortcut_partition(&g, 0.0, 5, &mut rng),
            Err(ShortcutError::BadEpsilon(_))
        ));
        assert!(matches!(
            shortcut_partition(&g, 1.5, 5, &mut rng),
            Err(ShortcutError::BadEpsilon(_))
        ));
        let disconnected = WeightedGraph::new(
            3,
            vec![Edge { u: 0, v: 1, len: 1.0 }],
        )
        .unwrap();
        assert!(shortcut_partition(&disconnected, 0.5, 5, &mut rng).is_err());
    }

    #[test]
    fn low_hop_single_cluster_needs_no_hops() {
        let g = gen::path(4).unwrap();
        let sp = ShortcutPartition {
            epsilon: 1.0,
            delta_internal: 0.25,
            clustering: VertexPartition::from_clusters(4, vec![vec![0, 1, 2, 3]]).unwrap(),
            centers: vec![0],
            source: None,
        };
        let report = verify_low_hop(&g, &sp, 0, 200).unwrap();
        assert_eq!(report.max_hops, 0);
        assert_eq!(report.h_hat, 0.0);
        assert_eq!(report.quotient_hop_diameter, 0);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn low_hop_singletons_on_path() {
        // 5 unit edges, epsilon * diam = 1: every hop costs a full unit
        let n = 6u32;
        let g = gen::path(n as usize).unwrap();
        let clusters: Vec<Vec<u32>> = (0..n).map(|v| vec![v]).collect();
        let sp = ShortcutPartition {
            epsilon: 1.0 / 5.0,
            delta_internal: (1.0 / 5.0) / 12.0 * 5.0,
            clustering: VertexPartition::from_clusters(n as usize, clusters).unwrap(),
            centers: (0..n).collect(),
            source: None,
        };
        let report = verify_low_hop(&g, &sp, 5, 200).unwrap();
        assert_eq!(report.max_hops, 5);
        assert_eq!(report.hops_per_unit, 1.0);
        assert!((report.h_hat - 5.0).abs() < 1e-9);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert_eq!(report.quotient_hop_diameter, 5);
    }

    #[test]
    fn low_hop_on_sampled_grid_partitions() {
        let g = gen::grid(6, 6, 1.0).unwrap();
        for seed in [0u64, 7] {
            let mut rng = RandomSource::new(seed);
            let sp = shortcut_partition(&g, 0.5, 5, &mut rng).unwrap();
            let report = verify_low_hop(&g, &sp, u32::MAX, 200).unwrap();
            assert!(report.violations.is_empty());
            // contracting an (eps, h)-shortcut partition leaves hop diameter <= h + 1
            assert!(report.quotient_hop_diameter as f64 <= report.h_hat + 1.0 + 1e-9);
            let h_needed = report.h_hat.ceil() as u32;
            let strict = verify_low_hop(&g, &sp, h_needed, 200).unwrap();
            assert!(strict.violations.is_empty());
        }
    }

    #[test]
    fn cut_frequency_on_forced_clusters() {
        // long edge forces {0} apart; the short tail path is always one
        // supernode with a single net point, so its edges are never cut
        let g = WeightedGraph::new(
            4,
            vec![
                Edge { u: 0, v: 3, len: 100.0 },
                Edge { u: 3, v: 2, len: 0.1 },
                Edge { u: 2, v: 1, len: 0.1 },
            ],
        )
        .unwrap();
        let mut rng = RandomSource::new(42);
        let table = estimate_shortcut_cut_probability(&g, 1.0, 3, 50, &mut rng).unwrap();
        assert_eq!(table.samples, 50);
        for ef in &table.edges {
            if (ef.u, ef.v) == (0, 3) {
                assert_eq!(ef.frequency, 1.0);
            } else {
                assert_eq!(ef.frequency, 0.0, "edge ({}, {})", ef.u, ef.v);
            }
        }
        let diam = g.metrics().unwrap().diameter;
        assert!((table.beta_hat - diam / 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_table_for_single_vertex() {
        let g = WeightedGraph::single_vertex();
        let mut rng = RandomSource::new(0);
        let table = estimate_shortcut_cut_probability(&g, 0.5, 3, 5, &mut rng).unwrap();
        assert!(table.edges.is_empty());
        assert_eq!(table.beta_hat, 0.0);
    }

    #[test]
    fn beta_stable_across_batches() {
        let g = gen::grid(8, 8, 1.0).unwrap();
        let mut rng_a = RandomSource::new(1);
        let mut rng_b = RandomSource::new(2);
        let a = estimate_shortcut_cut_probability(&g, 0.5, 5, 250, &mut rng_a).unwrap();
        let b = estimate_shortcut_cut_probability(&g, 0.5, 5, 250, &mut rng_b).unwrap();
        assert!(a.beta_hat > 0.0 && b.beta_hat > 0.0);
        let ratio = a.beta_hat / b.beta_hat;
        assert!((0.5..=2.0).contains(&ratio), "batch fits diverge: {ratio}");
    }

    #[test]
    fn serialization_round_trip_drops_source() {
        let g = gen::grid(5, 5, 1.0).unwrap();
        let mut rng = RandomSource::new(3);
        let sp = shortcut_partition(&g, 0.5, 5, &mut rng).unwrap();
        assert!(sp.source.is_some());
        let json = serde_json::to_string(&sp).unwrap();
        let back: ShortcutPartition = serde_json::from_str(&json).unwrap();
        assert!(back.source.is_none());
        assert_eq!(back.clustering, sp.clustering);
        assert_eq!(back.centers, sp.centers);
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            json,
            "round trip is byte stable"
        );
        // tampered artifact: center outside its cluster must be rejected
        let mut val: serde_json::Value = serde_json::from_str(&json).unwrap();
        val["centers"][0] = serde_json::json!(999);
        let parsed: Result<ShortcutPartition, _> = serde_json::from_value(val);
        assert!(parsed.is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = gen::grid(6, 6, 1.0).unwrap();
        let mut r1 = RandomSource::new(5);
        let mut r2 = RandomSource::new(5);
        let a = shortcut_partition(&g, 0.5, 5, &mut r1).unwrap();
        let b = shortcut_partition(&g, 0.5, 5, &mut r2).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
