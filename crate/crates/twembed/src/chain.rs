//! Clustering chains: a tower of partitions C_0 .. C_k where C_k is the whole
//! vertex set, C_0 is singletons, each level refines the one above, and every
//! scale-i cluster has strong diameter at most 2^i. Sampled top-down by
//! repeatedly halving cluster diameters, with shortcut partitions at scales
//! coarse enough for their nets and random ball carving below.

use crate::graph::{EdgeLengthMode, GraphError, VertexPartition, WeightedGraph};
use crate::rng::RandomSource;
use crate::shortcut::{shortcut_partition, ShortcutError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Shortcut(#[from] ShortcutError),
    #[error("graph is not normalized: min pairwise distance {0} < 1")]
    NotNormalized(f64),
    #[error("no cluster {index} at level {level}")]
    UnknownCluster { level: usize, index: usize },
    #[error("split scale of ({0}, {0}) is undefined")]
    SameVertex(u32),
    #[error("level {level} has {got} parent links for {want} clusters")]
    ParentShape { level: usize, got: usize, want: usize },
    #[error("cluster {index} at level {level} is not inside its parent")]
    NotRefining { level: usize, index: usize },
    #[error("chain must have exactly one top cluster and singleton leaves")]
    BadEnds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRef {
    pub level: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawChain", into = "RawChain")]
pub struct ClusteringChain {
    /// levels[i] is the scale-i partition; levels.len() is k + 1.
    pub levels: Vec<VertexPartition>,
    /// parents[i][c] is the index at level i + 1 of the cluster containing
    /// cluster c of level i.
    pub parents: Vec<Vec<u32>>,
    /// Strong diameter of each cluster, aligned with levels. Filled during
    /// build, not serialized, empty after deserialization (recompute via
    /// verify_chain).
    pub diameters: Vec<Vec<f64>>,
    /// Measured hop-diameter of each level transition: entry i is the largest
    /// hop-diameter over clusters C at level i + 1 of G[C] with the level-i
    /// clusters inside C contracted. Not serialized.
    pub level_hops: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    k: usize,
    levels: Vec<Vec<Vec<u32>>>,
    parents: Vec<Vec<u32>>,
}

impl TryFrom<RawChain> for ClusteringChain {
    type Error = ChainError;

    fn try_from(raw: RawChain) -> Result<Self, ChainError> {
        if raw.levels.len() != raw.k + 1 || raw.parents.len() != raw.k {
            return Err(ChainError::BadEnds);
        }
        let n: usize = raw.levels[0].iter().map(|c| c.len()).sum();
        let mut levels = Vec::with_capacity(raw.levels.len());
        for clusters in raw.levels {
            levels.push(VertexPartition::from_clusters(n, clusters)?);
        }
        let chain = ClusteringChain {
            levels,
            parents: raw.parents,
            diameters: Vec::new(),
            level_hops: Vec::new(),
        };
        chain.check_structure()?;
        Ok(chain)
    }
}

/// The diameter and hop caches are derived data; two chains are equal when
/// their clusterings and parent links agree.
impl PartialEq for ClusteringChain {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels && self.parents == other.parents
    }
}

impl From<ClusteringChain> for RawChain {
    fn from(chain: ClusteringChain) -> RawChain {
        RawChain {
            k: chain.k(),
            levels: chain
                .levels
                .iter()
                .map(|p| p.clusters().to_vec())
                .collect(),
            parents: chain.parents,
        }
    }
}

impl ClusteringChain {
    pub fn k(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn n(&self) -> usize {
        self.levels[0].clusters().iter().map(|c| c.len()).sum()
    }

    pub fn members(&self, c: ClusterRef) -> Result<&[u32], ChainError> {
        self.levels
            .get(c.level)
            .and_then(|p| p.clusters().get(c.index))
            .map(|v| v.as_slice())
            .ok_or(ChainError::UnknownCluster {
                level: c.level,
                index: c.index,
            })
    }

    pub fn parent(&self, c: ClusterRef) -> Option<ClusterRef> {
        if c.level >= self.k() {
            return None;
        }
        Some(ClusterRef {
            level: c.level + 1,
            index: self.parents[c.level][c.index] as usize,
        })
    }

    /// Largest measured per-transition hop-diameter (the chain's hop bound).
    pub fn hop_bound(&self) -> usize {
        self.level_hops.iter().copied().max().unwrap_or(0)
    }

    /// Graph-free shape checks: one top cluster, singleton leaves, parent
    /// links that are actual set inclusions.
    fn check_structure(&self) -> Result<(), ChainError> {
        let k = self.k();
        if self.levels[k].len() != 1 || self.levels[0].clusters().iter().any(|c| c.len() != 1) {
            return Err(ChainError::BadEnds);
        }
        if self.parents.len() != k {
            return Err(ChainError::BadEnds);
        }
        for i in 0..k {
            if self.parents[i].len() != self.levels[i].len() {
                return Err(ChainError::ParentShape {
                    level: i,
                    got: self.parents[i].len(),
                    want: self.levels[i].len(),
                });
            }
            for (c, cluster) in self.levels[i].clusters().iter().enumerate() {
                let p = self.parents[i][c];
                if p as usize >= self.levels[i + 1].len()
                    || cluster
                        .iter()
                        .any(|&v| self.levels[i + 1].cluster_of(v) != p)
                {
                    return Err(ChainError::NotRefining { level: i, index: c });
                }
            }
        }
        Ok(())
    }
}

/// Clusters taken as balls of the given radius around centers drawn in random
/// order. Each ball lives in the graph induced on the still-unassigned
/// vertices, so every member keeps a path to the center inside its own
/// cluster: strong radius <= radius holds exactly.
fn carve_balls(sub: &WeightedGraph, radius: f64, rng: &mut RandomSource) -> Vec<Vec<u32>> {
    let n = sub.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    rng.shuffle(&mut order);
    let mut unassigned = vec![true; n];
    let mut clusters = Vec::new();
    for &w in &order {
        if !unassigned[w as usize] {
            continue;
        }
        let dist = sub.dijkstra_within(Some(&unassigned), &[(w, 0.0)]);
        let members: Vec<u32> = (0..n as u32)
            .filter(|&v| unassigned[v as usize] && dist[v as usize] <= radius)
            .collect();
        for &v in &members {
            unassigned[v as usize] = false;
        }
        clusters.push(members);
    }
    clusters
}

/// Sample a clustering chain top-down. Level k holds the whole vertex set;
/// each transition partitions every cluster whose diameter still exceeds the
/// next scale 2^i, while clusters already within it are carried unchanged and
/// level 0 is forced to singletons. Oversized clusters split by an
/// epsilon = 1/2 shortcut partition when its net spacing diam/24 can resolve
/// the cluster's metric; below that the net degenerates to singletons, so the
/// transition instead carves random-order balls of radius 2^(i-1), which obeys
/// the same exact diameter bound with gradual granularity.
pub fn build_chain(
    g: &WeightedGraph,
    r: u32,
    rng: &mut RandomSource,
) -> Result<ClusteringChain, ChainError> {
    let metrics = g.metrics()?;
    if metrics.min_distance < 1.0 - 1e-9 {
        return Err(ChainError::NotNormalized(metrics.min_distance));
    }
    let n = g.n();
    if n == 1 {
        return Ok(ClusteringChain {
            levels: vec![VertexPartition::from_clusters(1, vec![vec![0]])?],
            parents: Vec::new(),
            diameters: vec![vec![0.0]],
            level_hops: Vec::new(),
        });
    }
    let k = (metrics.k as usize).max(1);
    let mut levels: Vec<Vec<Vec<u32>>> = vec![Vec::new(); k + 1];
    let mut parents: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut diameters: Vec<Vec<f64>> = vec![Vec::new(); k + 1];
    let mut level_hops: Vec<usize> = vec![0; k];
    levels[k] = vec![(0..n as u32).collect()];
    diameters[k] = vec![metrics.diameter];
    for i in (0..k).rev() {
        let scale = (1u64 << i) as f64;
        let parent_level = std::mem::take(&mut levels[i + 1]);
        for (p, members) in parent_level.iter().enumerate() {
            let children: Vec<Vec<u32>> = if members.len() == 1 {
                vec![members.clone()]
            } else if i == 0 {
                members.iter().map(|&v| vec![v]).collect()
            } else if diameters[i + 1][p] <= scale * (1.0 + 1e-9) {
                vec![members.clone()]
            } else if members.len() == 2 {
                vec![vec![members[0]], vec![members[1]]]
            } else {
                let (sub, map) = g.induced(members)?;
                let m = sub.metrics()?;
                let local = if 0.5 * m.diameter / 12.0 >= m.min_distance {
                    shortcut_partition(&sub, 0.5, r, rng)?
                        .clustering
                        .clusters()
                        .to_vec()
                } else {
                    carve_balls(&sub, scale / 2.0, rng)
                };
                local
                    .iter()
                    .map(|c| c.iter().map(|&v| map[v as usize]).collect())
                    .collect()
            };
            if children.len() > 1 {
                let (sub, map) = g.induced(members)?;
                let local: Vec<Vec<u32>> = children
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|&v| map.binary_search(&v).unwrap() as u32)
                            .collect()
                    })
                    .collect();
                let part = VertexPartition::from_clusters(sub.n(), local)?;
                let quotient = sub.contract_clusters(&part, EdgeLengthMode::Unit)?;
                for c in 0..quotient.n() as u32 {
                    for &h in &quotient.bfs_hops(None, &[c]) {
                        if h != usize::MAX {
                            level_hops[i] = level_hops[i].max(h);
                        }
                    }
                }
            }
            for child in children {
                let d = g.strong_diameter(&child)?;
                levels[i].push(child);
                diameters[i].push(d);
                parents[i].push(p as u32);
            }
        }
        levels[i + 1] = parent_level;
    }
    Ok(ClusteringChain {
        levels: levels
            .into_iter()
            .map(|cs| VertexPartition::from_clusters(n, cs))
            .collect::<Result<_, _>>()?,
        parents,
        diameters,
        level_hops,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub violations: Vec<String>,
    /// Recomputed per-transition quotient hop-diameters, length k.
    pub level_hops: Vec<usize>,
    /// max of level_hops; 0 for a trivial chain.
    pub h_hat: usize,
}

/// Exhaustively check the chain axioms against the graph: shape and
/// refinement, one top cluster covering everything, singleton leaves, strong
/// diameter at most 2^i at every level, and the hop bound h on every
/// contracted cluster quotient. Always reports the measured hop bound.
pub fn verify_chain(g: &WeightedGraph, chain: &ClusteringChain, h: usize) -> ChainReport {
    let mut violations = Vec::new();
    let k = chain.k();
    if let Err(e) = chain.check_structure() {
        violations.push(e.to_string());
        return ChainReport {
            violations,
            level_hops: Vec::new(),
            h_hat: 0,
        };
    }
    if chain.n() != g.n() {
        violations.push(format!(
            "chain covers {} vertices, graph has {}",
            chain.n(),
            g.n()
        ));
        return ChainReport {
            violations,
            level_hops: Vec::new(),
            h_hat: 0,
        };
    }
    for (i, level) in chain.levels.iter().enumerate() {
        let scale = (1u64 << i) as f64;
        for (c, cluster) in level.clusters().iter().enumerate() {
            match g.strong_diameter(cluster) {
                Ok(d) => {
                    if d > scale * (1.0 + 1e-9) {
                        violations.push(format!(
                            "cluster {c} at level {i} has strong diameter {d}, over 2^{i} = {scale}"
                        ));
                    }
                }
                Err(e) => violations.push(format!("cluster {c} at level {i}: {e}")),
            }
        }
    }
    let mut level_hops = vec![0usize; k];
    for i in 0..k {
        for (p, members) in chain.levels[i + 1].clusters().iter().enumerate() {
            let children: Vec<&Vec<u32>> = chain.levels[i]
                .clusters()
                .iter()
                .zip(&chain.parents[i])
                .filter(|(_, &par)| par as usize == p)
                .map(|(c, _)| c)
                .collect();
            if children.len() == 1 {
                continue;
            }
            let hops = match quotient_hop_diameter(g, members, &children) {
                Ok(hops) => hops,
                Err(e) => {
                    violations.push(format!("cluster {p} at level {}: {e}", i + 1));
                    continue;
                }
            };
            level_hops[i] = level_hops[i].max(hops);
            if hops > h {
                violations.push(format!(
                    "cluster {p} at level {} contracts to hop-diameter {hops}, over h = {h}",
                    i + 1
                ));
            }
        }
    }
    let h_hat = level_hops.iter().copied().max().unwrap_or(0);
    ChainReport {
        violations,
        level_hops,
        h_hat,
    }
}

fn quotient_hop_diameter(
    g: &WeightedGraph,
    members: &[u32],
    children: &[&Vec<u32>],
) -> Result<usize, GraphError> {
    let (sub, map) = g.induced(members)?;
    let local: Vec<Vec<u32>> = children
        .iter()
        .map(|c| {
            c.iter()
                .map(|&v| map.binary_search(&v).unwrap() as u32)
                .collect()
        })
        .collect();
    let part = VertexPartition::from_clusters(sub.n(), local)?;
    let quotient = sub.contract_clusters(&part, EdgeLengthMode::Unit)?;
    let mut out = 0usize;
    for c in 0..quotient.n() as u32 {
        for &h in &quotient.bfs_hops(None, &[c]) {
            if h == usize::MAX {
                return Err(GraphError::Disconnected);
            }
            out = out.max(h);
        }
    }
    Ok(out)
}

/// The chain restricted to the clusters inside C, relabeled to 0..|C| in
/// ascending order of original vertex id. The top level of the result is C
/// itself; level heights below scale(C) are preserved.
pub fn subchain(chain: &ClusteringChain, c: ClusterRef) -> Result<ClusteringChain, ChainError> {
    let members = chain.members(c)?.to_vec();
    let relabel = |v: u32| members.binary_search(&v).unwrap() as u32;
    let mut levels = Vec::with_capacity(c.level + 1);
    let mut parents = Vec::with_capacity(c.level);
    let mut diameters = Vec::with_capacity(c.level + 1);
    // kept[i] = original indices of level-i clusters inside C, in order
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); c.level + 1];
    kept[c.level] = vec![c.index];
    for i in (0..c.level).rev() {
        kept[i] = chain.levels[i]
            .clusters()
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                kept[i + 1].contains(&(chain.parents[i][*idx] as usize))
            })
            .map(|(idx, _)| idx)
            .collect();
    }
    for i in 0..=c.level {
        let clusters: Vec<Vec<u32>> = kept[i]
            .iter()
            .map(|&idx| {
                chain.levels[i].clusters()[idx]
                    .iter()
                    .map(|&v| relabel(v))
                    .collect()
            })
            .collect();
        levels.push(VertexPartition::from_clusters(members.len(), clusters)?);
        if !chain.diameters.is_empty() {
            diameters.push(kept[i].iter().map(|&idx| chain.diameters[i][idx]).collect());
        }
        if i < c.level {
            parents.push(
                kept[i]
                    .iter()
                    .map(|&idx| {
                        let p = chain.parents[i][idx] as usize;
                        kept[i + 1].iter().position(|&x| x == p).unwrap() as u32
                    })
                    .collect(),
            );
        }
    }
    Ok(ClusteringChain {
        levels,
        parents,
        diameters,
        level_hops: Vec::new(),
    })
}

/// Smallest scale i such that every level above i keeps u and v together.
/// Equivalently one below the lowest level whose partition has them in a
/// common cluster; always in 0..k.
pub fn split_scale(chain: &ClusteringChain, u: u32, v: u32) -> Result<usize, ChainError> {
    if u == v {
        return Err(ChainError::SameVertex(u));
    }
    for (i, level) in chain.levels.iter().enumerate() {
        if level.cluster_of(u) == level.cluster_of(v) {
            return Ok(i - 1);
        }
    }
    unreachable!("top level holds every vertex pair");
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCutFrequency {
    pub level: usize,
    pub u: u32,
    pub v: u32,
    pub len: f64,
    pub cut_count: u32,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingBetaEstimate {
    pub samples: u32,
    pub k: usize,
    /// max over edges and levels of frequency * 2^level / len.
    pub beta_hat: f64,
    pub table: Vec<LevelCutFrequency>,
}

/// Per-level per-edge cut frequencies over independently seeded chains. An
/// edge is cut at level i when its endpoints sit in different scale-i
/// clusters; the fitted beta is the worst frequency against the len/2^i
/// budget.
pub fn estimate_separating_beta(
    g: &WeightedGraph,
    r: u32,
    samples: u32,
    rng: &mut RandomSource,
) -> Result<SeparatingBetaEstimate, ChainError> {
    assert!(samples >= 1, "need at least one sample");
    let mut k = 0usize;
    let mut counts: Vec<Vec<u32>> = Vec::new();
    for s in 0..samples {
        let mut run_rng = RandomSource::new(rng.next_seed());
        let chain = build_chain(g, r, &mut run_rng)?;
        if s == 0 {
            k = chain.k();
            counts = vec![vec![0; g.edges().len()]; k + 1];
        }
        for (i, level) in chain.levels.iter().enumerate() {
            for (ei, e) in g.edges().iter().enumerate() {
                if level.cluster_of(e.u) != level.cluster_of(e.v) {
                    counts[i][ei] += 1;
                }
            }
        }
    }
    let mut beta_hat: f64 = 0.0;
    let mut table = Vec::new();
    for (i, level_counts) in counts.iter().enumerate() {
        let scale = (1u64 << i) as f64;
        for (ei, &cut_count) in level_counts.iter().enumerate() {
            let e = &g.edges()[ei];
            let frequency = cut_count as f64 / samples as f64;
            beta_hat = beta_hat.max(frequency * scale / e.len);
            table.push(LevelCutFrequency {
                level: i,
                u: e.u,
                v: e.v,
                len: e.len,
                cut_count,
                frequency,
            });
        }
    }
    Ok(SeparatingBetaEstimate {
        samples,
        k,
        beta_hat,
        table,
    })
}
