//! Stochastic balanced cuts over a clustering chain. A cut is a disjoint set
//! of non-root chain clusters; a family of psi cuts is built greedily so that
//! each cut is small, leaves only light components behind, never descends
//! strictly into a protected cluster, and reuses no non-singleton cluster.
//! Sampling uniformly from the family then picks any such cluster with
//! probability at most 1/psi. The same availability bookkeeping yields staged
//! contraction sequences with per-round radius certificates.

use crate::chain::{ChainError, ClusterRef, ClusteringChain};
use crate::gen::{self, GenError};
use crate::graph::{EdgeLengthMode, GraphError, VertexPartition, WeightedGraph};
use crate::rng::RandomSource;
use crate::treewidth::{
    weighted_balanced_separator, SeparatorRequest, SeparatorResult, TreewidthError,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Treewidth(#[from] TreewidthError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("weights length {0} does not match vertex count {1}")]
    WeightsLen(usize, usize),
    #[error("total weight must be positive and finite")]
    BadWeights,
    #[error("chain covers {0} vertices, graph has {1}")]
    ChainMismatch(usize, usize),
    #[error(
        "no balanced separator of size <= {tau_cap} on a {} vertex contraction",
        .quotient.n()
    )]
    SeparatorUnobtainable {
        tau_cap: usize,
        quotient: Box<WeightedGraph>,
        quotient_weights: Vec<f64>,
    },
    #[error("cannot sample from an empty cut family")]
    EmptyFamily,
    #[error("unavailable set must contain the root cluster")]
    RootNotUnavailable,
    #[error("grid contraction needs p >= 2 and q >= 1, got p = {0}, q = {1}")]
    GridParams(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub clusters: Vec<ClusterRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub cluster: ClusterRef,
    pub cut: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationEvent {
    pub cut: usize,
    pub tau_before: usize,
    pub tau_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutFamily {
    pub psi: u32,
    /// Realized size cap: the configured value, possibly doubled by
    /// calibration events when no separator fit.
    pub tau: usize,
    pub conforming: Vec<ClusterRef>,
    pub cuts: Vec<Cut>,
    /// Which non-singleton non-conforming cluster was consumed by which cut.
    pub ledger: Vec<LedgerEntry>,
    pub calibration_events: Vec<CalibrationEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauConfig {
    Fixed(usize),
    Auto { c_tau: f64 },
}

/// Size cap from the measured chain quality: c_tau * h^2 * ceil(log2 Phi) * psi,
/// with the hop bound and the log clamped to at least 1.
pub fn auto_tau(h_hat: usize, aspect_ratio: f64, psi: u32, c_tau: f64) -> usize {
    let h = h_hat.max(1) as f64;
    let log_phi = aspect_ratio.log2().ceil().max(1.0);
    ((c_tau * h * h * log_phi * psi as f64).ceil() as usize).max(1)
}

fn measured_hop_bound(g: &WeightedGraph, chain: &ClusteringChain) -> usize {
    if chain.level_hops.is_empty() && chain.k() > 0 {
        crate::chain::verify_chain(g, chain, usize::MAX).h_hat
    } else {
        chain.hop_bound()
    }
}

/// The highest clusters whose sets are not marked unavailable, found by
/// descending from the root through unavailable clusters. Level-0 singletons
/// are treated as available no matter what, so the descent always bottoms
/// out and the result partitions the vertex set whenever the root set is
/// unavailable.
fn maximally_available(
    chain: &ClusteringChain,
    unavailable: &BTreeSet<Vec<u32>>,
) -> Vec<ClusterRef> {
    let k = chain.k();
    let mut children: Vec<Vec<Vec<usize>>> = Vec::with_capacity(k);
    for i in 0..k {
        let mut per_parent = vec![Vec::new(); chain.levels[i + 1].len()];
        for (c, &p) in chain.parents[i].iter().enumerate() {
            per_parent[p as usize].push(c);
        }
        children.push(per_parent);
    }
    let mut out = Vec::new();
    let mut stack = vec![ClusterRef { level: k, index: 0 }];
    while let Some(r) = stack.pop() {
        let set = &chain.levels[r.level].clusters()[r.index];
        if r.level == 0 || !unavailable.contains(set.as_slice()) {
            out.push(r);
        } else {
            for &c in children[r.level - 1][r.index].iter().rev() {
                stack.push(ClusterRef { level: r.level - 1, index: c });
            }
        }
    }
    out
}

fn resolve_sets(
    chain: &ClusteringChain,
    refs: &[ClusterRef],
) -> Result<BTreeSet<Vec<u32>>, ChainError> {
    refs.iter()
        .map(|&r| chain.members(r).map(<[u32]>::to_vec))
        .collect()
}

/// Greedy family construction: while fewer than psi cuts exist, contract the
/// maximally available clusters (with the root and all consumed non-singleton
/// non-conforming clusters unavailable), find a weight-balanced separator of
/// at most tau contracted vertices, and lift it back to clusters. A failed
/// separator search doubles tau up to tau_cap, recording a calibration event.
pub fn build_cut_family(
    g: &WeightedGraph,
    chain: &ClusteringChain,
    weights: &[f64],
    conforming: &[ClusterRef],
    psi: u32,
    tau: TauConfig,
    tau_cap: usize,
) -> Result<CutFamily, CutError> {
    if weights.len() != g.n() {
        return Err(CutError::WeightsLen(weights.len(), g.n()));
    }
    if chain.n() != g.n() {
        return Err(CutError::ChainMismatch(chain.n(), g.n()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
        return Err(CutError::BadWeights);
    }
    let x_sets = resolve_sets(chain, conforming)?;
    let mut tau_now = match tau {
        TauConfig::Fixed(t) => t.max(1),
        TauConfig::Auto { c_tau } => {
            let metrics = g.metrics()?;
            auto_tau(measured_hop_bound(g, chain), metrics.aspect_ratio, psi, c_tau)
        }
    };
    let root_set = chain.levels[chain.k()].clusters()[0].clone();
    let mut used: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut cuts = Vec::new();
    let mut ledger = Vec::new();
    let mut calibration_events = Vec::new();
    for cut_index in 0..psi as usize {
        let mut unavailable = used.clone();
        unavailable.insert(root_set.clone());
        let s_refs = maximally_available(chain, &unavailable);
        let clusters: Vec<Vec<u32>> = s_refs
            .iter()
            .map(|&r| chain.members(r).unwrap().to_vec())
            .collect();
        let quotient_weights: Vec<f64> = clusters
            .iter()
            .map(|c| c.iter().map(|&v| weights[v as usize]).sum())
            .collect();
        let part = VertexPartition::from_clusters(g.n(), clusters)?;
        let quotient = g.contract_clusters(&part, EdgeLengthMode::Unit)?;
        let separator = loop {
            let req = SeparatorRequest {
                weights: &quotient_weights,
                cap: tau_now,
                balance: 0.5,
            };
            match weighted_balanced_separator(&quotient, &req)? {
                SeparatorResult::Found(s) => break s,
                SeparatorResult::NotFound => {
                    if tau_now >= tau_cap {
                        return Err(CutError::SeparatorUnobtainable {
                            tau_cap,
                            quotient: Box::new(quotient),
                            quotient_weights,
                        });
                    }
                    let next = (tau_now * 2).min(tau_cap);
                    calibration_events.push(CalibrationEvent {
                        cut: cut_index,
                        tau_before: tau_now,
                        tau_after: next,
                    });
                    tau_now = next;
                }
            }
        };
        let cut = Cut {
            clusters: separator.iter().map(|&v| s_refs[v as usize]).collect(),
        };
        for &r in &cut.clusters {
            let set = chain.members(r).unwrap();
            if set.len() > 1 && !x_sets.contains(set) {
                used.insert(set.to_vec());
                ledger.push(LedgerEntry { cluster: r, cut: cut_index });
            }
        }
        cuts.push(cut);
    }
    Ok(CutFamily {
        psi,
        tau: tau_now,
        conforming: conforming.to_vec(),
        cuts,
        ledger,
        calibration_events,
    })
}

pub fn sample_cut(family: &CutFamily, rng: &mut RandomSource) -> Result<Cut, CutError> {
    if family.cuts.is_empty() {
        return Err(CutError::EmptyFamily);
    }
    Ok(family.cuts[rng.pick_index(family.cuts.len())].clone())
}

/// Check one cut against the four definitional properties: clusters belong to
/// the chain and none is the root (respecting), removing them leaves only
/// components of weight at most half the total (balanced), none sits strictly
/// inside a protected cluster (conforming), and the size cap holds.
pub fn verify_cut(
    g: &WeightedGraph,
    chain: &ClusteringChain,
    cut: &Cut,
    weights: &[f64],
    conforming: &[ClusterRef],
    tau: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    if weights.len() != g.n() {
        out.push(format!(
            "weights cover {} vertices, graph has {}",
            weights.len(),
            g.n()
        ));
        return out;
    }
    let mut sets: Vec<&[u32]> = Vec::new();
    for (i, &r) in cut.clusters.iter().enumerate() {
        match chain.members(r) {
            Ok(set) => {
                if set.len() == g.n() {
                    out.push(format!("cut cluster {i} is the root cluster"));
                }
                sets.push(set);
            }
            Err(e) => out.push(format!("cut cluster {i}: {e}")),
        }
    }
    let mut seen = vec![false; g.n()];
    for set in &sets {
        for &v in *set {
            if seen[v as usize] {
                out.push(format!("vertex {v} covered by two cut clusters"));
            }
            seen[v as usize] = true;
        }
    }
    let x_sets: Vec<&[u32]> = conforming
        .iter()
        .filter_map(|&r| chain.members(r).ok())
        .collect();
    for (i, set) in sets.iter().enumerate() {
        for x in &x_sets {
            if set.len() < x.len() && set.iter().all(|v| x.binary_search(v).is_ok()) {
                out.push(format!(
                    "cut cluster {i} sits strictly inside a protected cluster"
                ));
            }
        }
    }
    let removed: Vec<u32> = (0..g.n() as u32).filter(|&v| seen[v as usize]).collect();
    let total: f64 = weights.iter().sum();
    for comp in g.connected_components(&removed) {
        let w: f64 = comp.iter().map(|&v| weights[v as usize]).sum();
        if w > total / 2.0 + 1e-9 * total.abs() {
            out.push(format!(
                "component of {} vertices weighs {w}, over half of {total}",
                comp.len()
            ));
        }
    }
    if cut.clusters.len() > tau {
        out.push(format!(
            "cut has {} clusters, over the cap {tau}",
            cut.clusters.len()
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSequence {
    /// Stated bound on the total number of contracted subgraphs.
    pub a: usize,
    pub b: usize,
    /// Hop-radius bound for every contracted subgraph.
    pub c: usize,
    /// rounds[i] lists the groups contracted in round i + 1, as vertex ids of
    /// the graph produced by the previous round.
    pub rounds: Vec<Vec<Vec<u32>>>,
}

/// Contract each group to one vertex, leaving other vertices alone. New ids
/// follow the groups in the order given, then the untouched vertices
/// ascending. Returns the quotient and the old-to-new map.
fn contract_groups(
    g: &WeightedGraph,
    groups: &[Vec<u32>],
) -> Result<(WeightedGraph, Vec<u32>), GraphError> {
    let mut in_group = vec![false; g.n()];
    let mut clusters: Vec<Vec<u32>> = Vec::with_capacity(groups.len());
    for group in groups {
        for &v in group {
            if v as usize >= g.n() {
                return Err(GraphError::VertexOutOfRange(v, g.n()));
            }
            in_group[v as usize] = true;
        }
        clusters.push(group.clone());
    }
    for v in 0..g.n() as u32 {
        if !in_group[v as usize] {
            clusters.push(vec![v]);
        }
    }
    let part = VertexPartition::from_clusters(g.n(), clusters)?;
    let quotient = g.contract_clusters(&part, EdgeLengthMode::MinCrossing)?;
    let map = (0..g.n() as u32).map(|v| part.cluster_of(v)).collect();
    Ok((quotient, map))
}

fn hop_radius_within(g: &WeightedGraph, group: &[u32]) -> Option<usize> {
    let mut mask = vec![false; g.n()];
    for &v in group {
        mask[v as usize] = true;
    }
    let mut best: Option<usize> = None;
    for &center in group {
        let hops = g.bfs_hops(Some(&mask), &[center]);
        let ecc = group.iter().map(|&v| hops[v as usize]).max().unwrap_or(0);
        if ecc != usize::MAX && best.map_or(true, |b| ecc < b) {
            best = Some(ecc);
        }
    }
    best
}

/// Stage the chain's unavailable clusters into rounds: first contract the
/// maximally available clusters into single vertices (that quotient is the
/// sequence's starting graph, returned alongside), then round i contracts
/// every still-uncontracted unavailable scale-i cluster. Each such group is
/// exactly the cluster's scale-(i-1) quotient, so its hop radius is covered
/// by the chain's measured hop bound.
pub fn contraction_sequence_from_chain(
    g: &WeightedGraph,
    chain: &ClusteringChain,
    unavailable: &BTreeSet<Vec<u32>>,
) -> Result<(WeightedGraph, ContractionSequence), CutError> {
    if chain.n() != g.n() {
        return Err(CutError::ChainMismatch(chain.n(), g.n()));
    }
    let k = chain.k();
    let root_set = &chain.levels[k].clusters()[0];
    if !unavailable.contains(root_set.as_slice()) {
        return Err(CutError::RootNotUnavailable);
    }
    let s_refs = maximally_available(chain, unavailable);
    let clusters: Vec<Vec<u32>> = s_refs
        .iter()
        .map(|&r| chain.members(r).unwrap().to_vec())
        .collect();
    let part = VertexPartition::from_clusters(g.n(), clusters.clone())?;
    let start = g.contract_clusters(&part, EdgeLengthMode::MinCrossing)?;
    // representative original vertex per current vertex
    let mut reps: Vec<u32> = clusters.iter().map(|c| c[0]).collect();
    let mut cur = start.clone();
    let mut contracted: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut rounds = Vec::with_capacity(k);
    let mut a = 0usize;
    for i in 1..=k {
        let level = &chain.levels[i];
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let mut group_of: Vec<Option<usize>> = vec![None; level.len()];
        for (idx, cluster) in level.clusters().iter().enumerate() {
            if unavailable.contains(cluster.as_slice()) && !contracted.contains(cluster.as_slice())
            {
                group_of[idx] = Some(groups.len());
                groups.push(Vec::new());
            }
        }
        for (vid, &rep) in reps.iter().enumerate() {
            let idx = level.cluster_of(rep) as usize;
            if let Some(gi) = group_of[idx] {
                groups[gi].push(vid as u32);
            }
        }
        // clusters fully hidden inside a coarser available cluster came up
        // empty; they were never separate vertices, so drop them
        let mut kept = Vec::with_capacity(groups.len());
        for (idx, gi) in group_of.iter().enumerate() {
            if let Some(gi) = *gi {
                if !groups[gi].is_empty() {
                    kept.push(groups[gi].clone());
                    contracted.insert(level.clusters()[idx].clone());
                }
            }
        }
        a += kept.len();
        let (next, map) = contract_groups(&cur, &kept)?;
        let mut next_reps = vec![u32::MAX; next.n()];
        for (vid, &rep) in reps.iter().enumerate() {
            let nv = map[vid] as usize;
            if next_reps[nv] == u32::MAX {
                next_reps[nv] = rep;
            }
        }
        reps = next_reps;
        cur = next;
        rounds.push(kept);
    }
    let seq = ContractionSequence {
        a,
        b: k,
        c: measured_hop_bound(g, chain),
        rounds,
    };
    Ok((start, seq))
}

/// Replay a sequence from its starting graph, checking that every round's
/// groups are disjoint, in range, connected, and of hop radius at most c,
/// that the rounds end at a single vertex, and that the group count stays
/// within the stated total.
pub fn verify_contraction_sequence(g: &WeightedGraph, seq: &ContractionSequence) -> Vec<String> {
    let mut out = Vec::new();
    if seq.rounds.len() != seq.b {
        out.push(format!(
            "{} rounds recorded, b = {}",
            seq.rounds.len(),
            seq.b
        ));
    }
    let mut cur = g.clone();
    let mut total_groups = 0usize;
    for (ri, groups) in seq.rounds.iter().enumerate() {
        let round = ri + 1;
        let mut seen = vec![false; cur.n()];
        let mut bad_round = false;
        for (gi, group) in groups.iter().enumerate() {
            for &v in group {
                if v as usize >= cur.n() {
                    out.push(format!("round {round} group {gi}: vertex {v} out of range"));
                    bad_round = true;
                } else if seen[v as usize] {
                    out.push(format!(
                        "round {round}: vertex {v} appears in two groups"
                    ));
                    bad_round = true;
                } else {
                    seen[v as usize] = true;
                }
            }
            if bad_round {
                continue;
            }
            match hop_radius_within(&cur, group) {
                Some(radius) => {
                    if radius > seq.c {
                        out.push(format!(
                            "round {round} group {gi} has hop radius {radius}, over c = {}",
                            seq.c
                        ));
                    }
                }
                None => out.push(format!("round {round} group {gi} is disconnected")),
            }
        }
        if bad_round {
            return out;
        }
        total_groups += groups.len();
        match contract_groups(&cur, groups) {
            Ok((next, _)) => cur = next,
            Err(e) => {
                out.push(format!("round {round} cannot be applied: {e}"));
                return out;
            }
        }
    }
    if cur.n() != 1 {
        out.push(format!("sequence ends with {} vertices, not 1", cur.n()));
    }
    if total_groups > seq.a {
        out.push(format!(
            "{total_groups} groups contracted, over the stated total a = {}",
            seq.a
        ));
    }
    out
}

/// The pq x pq unit grid together with a radius-1 contraction schedule: plant
/// a p x p lattice of seeds spaced q apart, absorb neighborhoods around the
/// seeds round by round until only the p^2 seed blobs remain, then halve the
/// blob lattice with domino contractions until one vertex is left.
pub fn grid_contraction_sequence(
    p: usize,
    q: usize,
) -> Result<(WeightedGraph, ContractionSequence), CutError> {
    if p < 2 || q < 1 {
        return Err(CutError::GridParams(p, q));
    }
    let side = p * q;
    let g = gen::grid(side, side, 1.0)?;
    let off = q / 2;
    // current ids of the seed blobs, row-major over the p x p lattice
    let mut blobs: Vec<u32> = (0..p)
        .flat_map(|i| (0..p).map(move |j| ((i * q + off) * side + (j * q + off)) as u32))
        .collect();
    let mut cur = g.clone();
    let mut rounds: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut a = 0usize;
    while cur.n() > p * p {
        let mut is_blob = vec![false; cur.n()];
        for &b in &blobs {
            is_blob[b as usize] = true;
        }
        let mut claimed = vec![false; cur.n()];
        let mut groups: Vec<Vec<u32>> = Vec::with_capacity(blobs.len());
        for &b in &blobs {
            let mut group = vec![b];
            for &(w, _) in cur.neighbors(b) {
                if !is_blob[w as usize] && !claimed[w as usize] {
                    claimed[w as usize] = true;
                    group.push(w);
                }
            }
            group.sort_unstable();
            groups.push(group);
        }
        a += groups.len();
        let (next, map) = contract_groups(&cur, &groups)?;
        assert!(next.n() < cur.n(), "absorption round made no progress");
        blobs = blobs.iter().map(|&b| map[b as usize]).collect();
        cur = next;
        rounds.push(groups);
    }
    // blobs now tile the whole grid; halve the lattice one axis at a time
    let mut width = p;
    let mut height = p;
    let at = |lattice: &[u32], i: usize, j: usize, w: usize| lattice[i * w + j];
    while width > 1 || height > 1 {
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let mut next_blobs: Vec<u32> = Vec::new();
        if width > 1 {
            for i in 0..height {
                for j in (0..width).step_by(2) {
                    if j + 1 < width {
                        let mut pair =
                            vec![at(&blobs, i, j, width), at(&blobs, i, j + 1, width)];
                        pair.sort_unstable();
                        groups.push(pair);
                    } else {
                        groups.push(vec![at(&blobs, i, j, width)]);
                    }
                }
            }
            width = width.div_ceil(2);
        } else {
            for i in (0..height).step_by(2) {
                if i + 1 < height {
                    let mut pair = vec![at(&blobs, i, 0, 1), at(&blobs, i + 1, 0, 1)];
                    pair.sort_unstable();
                    groups.push(pair);
                } else {
                    groups.push(vec![at(&blobs, i, 0, 1)]);
                }
            }
            height = height.div_ceil(2);
        }
        a += groups.len();
        let (next, map) = contract_groups(&cur, &groups)?;
        for group in &groups {
            next_blobs.push(map[group[0] as usize]);
        }
        blobs = next_blobs;
        cur = next;
        rounds.push(groups);
    }
    let seq = ContractionSequence {
        a,
        b: rounds.len(),
        c: 1,
        rounds,
    };
    Ok((g, seq))
}

/// Greedy maximal set of vertices with pairwise hop distance strictly above
/// the spacing, scanned in id order. Maximality puts every vertex within the
/// spacing of the result.
pub fn net_points(g: &WeightedGraph, spacing: f64) -> Vec<u32> {
    let mut chosen: Vec<u32> = Vec::new();
    let mut covered_within = vec![usize::MAX; g.n()];
    for v in 0..g.n() as u32 {
        if (covered_within[v as usize] as f64) <= spacing {
            continue;
        }
        chosen.push(v);
        for (u, h) in g.bfs_hops(None, &[v]).into_iter().enumerate() {
            covered_within[u] = covered_within[u].min(h);
        }
    }
    chosen
}
