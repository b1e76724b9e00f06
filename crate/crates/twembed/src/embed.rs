//! Recursive embedding of a weighted graph into a low-treewidth host. Each
//! call embeds a terminal set living inside one chain cluster: small terminal
//! sets become exact-distance cliques, larger ones are split by a sampled
//! balanced cut, recursing into the cut clusters (one scale down) and into
//! the leftover components (boundary shrinks). Gluing the recursive pieces at
//! a root bag of cluster representatives keeps every bag small, and all added
//! edges carry exact source distances so the host never contracts.

use crate::chain::{build_chain, subchain, verify_chain, ChainError, ClusterRef, ClusteringChain};
use crate::cut::{
    auto_tau, build_cut_family, sample_cut, CalibrationEvent, CutError, TauConfig,
};
use crate::graph::{Edge, GraphError, WeightedGraph};
use crate::rng::RandomSource;
use crate::treewidth::{verify_tree_decomposition, TreeDecomposition};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("chain covers {0} vertices, graph has {1}")]
    ChainMismatch(usize, usize),
    #[error("psi must be positive")]
    BadPsi,
    #[error("cut sampling failed at depth {depth} with {terminals} terminals")]
    CutFailure {
        depth: usize,
        terminals: usize,
        #[source]
        source: Box<CutError>,
    },
    #[error("recursion reached depth {depth}, potential bound is {bound}")]
    DepthExceeded { depth: usize, bound: usize },
    #[error("a boundary cluster is not a cluster of the current piece")]
    BoundaryClusterLost,
    #[error("distortion needs at least one embedding result")]
    NoResults,
}

/// One invocation of the embedding recursion, in original vertex ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedCall {
    pub terminals: Vec<u32>,
    /// Vertices of the piece, the chain cluster the call works inside.
    pub piece: Vec<u32>,
    pub scale: usize,
    pub boundary_terminals: Vec<u32>,
    /// Clusters consumed by cuts of earlier calls, each holding exactly one
    /// boundary terminal (its representative).
    pub boundary_clusters: Vec<Vec<u32>>,
    pub depth: usize,
    pub potential: f64,
}

impl EmbedCall {
    pub fn potential(terminals: usize, scale: usize, boundary: usize, tau: usize) -> f64 {
        5.0 * (terminals.max(1) as f64).log2() + scale as f64 + boundary as f64 / tau.max(1) as f64
    }

    pub fn validate(&self, tau: usize) -> Vec<String> {
        let mut out = Vec::new();
        let t: BTreeSet<u32> = self.terminals.iter().copied().collect();
        let p: BTreeSet<u32> = self.piece.iter().copied().collect();
        if !t.iter().all(|v| p.contains(v)) {
            out.push("terminals leave the piece".to_string());
        }
        if !self.boundary_terminals.iter().all(|v| t.contains(v)) {
            out.push("boundary terminals are not all terminals".to_string());
        }
        for (i, cluster) in self.boundary_clusters.iter().enumerate() {
            let held = cluster
                .iter()
                .filter(|v| self.boundary_terminals.binary_search(v).is_ok())
                .count();
            if held != 1 {
                out.push(format!(
                    "boundary cluster {i} holds {held} boundary terminals, expected 1"
                ));
            }
        }
        let want = Self::potential(
            self.terminals.len(),
            self.scale,
            self.boundary_terminals.len(),
            tau,
        );
        if (self.potential - want).abs() > 1e-9 {
            out.push(format!("potential {} does not match {want}", self.potential));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub parent: Option<usize>,
    pub depth: usize,
    pub terminals: usize,
    pub boundary_terminals: usize,
    pub scale: usize,
    pub potential: f64,
    pub base_case: bool,
    /// Whether the cut balanced the boundary terminals instead of all
    /// terminals.
    pub cut_from_boundary: bool,
    pub cut_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCutRecord {
    pub call: usize,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedStats {
    /// Size cap governing base-case thresholds, the potential, and every cut
    /// in the run. Starts at the configured value and is raised by restarts
    /// when a separator needs more clusters.
    pub tau: usize,
    /// Largest sampled cut size across all calls; at most tau.
    pub tau_realized: usize,
    /// Top-level restarts taken before every cut fit under tau. Each restart
    /// reruns the whole recursion with the larger cap, so the potential
    /// argument stays consistent across the final trace.
    pub tau_restarts: usize,
    pub psi: u32,
    pub depth: usize,
    pub width: usize,
    pub n_calls: usize,
    pub base_calls: usize,
    pub root_potential: f64,
    pub trace: Vec<TraceEntry>,
    pub sampled_cuts: Vec<SampledCutRecord>,
    pub calibration_events: Vec<CalibrationEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub host: WeightedGraph,
    pub decomposition: TreeDecomposition,
    pub stats: EmbedStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedOptions {
    pub r: u32,
    pub psi: u32,
    pub tau: TauConfig,
    pub tau_cap: usize,
}

struct Piece {
    graph: WeightedGraph,
    chain: ClusteringChain,
    /// local id -> original id, ascending
    to_global: Vec<u32>,
}

/// Outcome of one recursion attempt at a fixed tau. A separator wider than
/// tau aborts the attempt so the caller can rerun everything at the realized
/// width; mixing caps within one run would let the boundary potential term
/// grow faster than the recursion shrinks it.
enum Attempt {
    Raise(usize),
    Fail(EmbedError),
}

impl<E: Into<EmbedError>> From<E> for Attempt {
    fn from(e: E) -> Self {
        Attempt::Fail(e.into())
    }
}

struct Ctx<'a> {
    dist: &'a [Vec<f64>],
    tau: usize,
    tau_cap: usize,
    psi: u32,
    depth_bound: usize,
    host_edges: BTreeMap<(u32, u32), f64>,
    bags: Vec<BTreeSet<u32>>,
    bag_edges: Vec<(usize, usize)>,
    trace: Vec<TraceEntry>,
    sampled_cuts: Vec<SampledCutRecord>,
    calibration_events: Vec<CalibrationEvent>,
    tau_realized: usize,
    base_calls: usize,
}

impl Ctx<'_> {
    fn add_host_edge(&mut self, u: u32, v: u32, w: f64) {
        let key = (u.min(v), u.max(v));
        self.host_edges.entry(key).or_insert(w);
    }
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b.iter()).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn find_cluster_ref(chain: &ClusteringChain, local_set: &[u32]) -> Option<ClusterRef> {
    for level in 0..=chain.k() {
        let index = chain.levels[level].cluster_of(local_set[0]) as usize;
        if chain.levels[level].clusters()[index] == local_set {
            return Some(ClusterRef { level, index });
        }
    }
    None
}

/// Sample a clustering chain for `g` and run the embedding recursion on the
/// full vertex set.
pub fn embed(
    g: &WeightedGraph,
    opts: &EmbedOptions,
    rng: &mut RandomSource,
) -> Result<EmbeddingResult, EmbedError> {
    let chain = build_chain(g, opts.r, rng)?;
    embed_with_chain(g, &chain, opts, rng)
}

/// Run the recursion against a fixed, already-sampled chain.
pub fn embed_with_chain(
    g: &WeightedGraph,
    chain: &ClusteringChain,
    opts: &EmbedOptions,
    rng: &mut RandomSource,
) -> Result<EmbeddingResult, EmbedError> {
    if chain.n() != g.n() {
        return Err(EmbedError::ChainMismatch(chain.n(), g.n()));
    }
    if opts.psi == 0 {
        return Err(EmbedError::BadPsi);
    }
    let metrics = g.metrics()?;
    let mut tau = match opts.tau {
        TauConfig::Fixed(t) => t.max(1),
        TauConfig::Auto { c_tau } => {
            let h_hat = if chain.level_hops.is_empty() && chain.k() > 0 {
                verify_chain(g, chain, usize::MAX).h_hat
            } else {
                chain.hop_bound()
            };
            auto_tau(h_hat, metrics.aspect_ratio, opts.psi, c_tau)
        }
    };
    let tau_cap = opts.tau_cap.max(tau);
    let dist: Vec<Vec<f64>> = (0..g.n() as u32).map(|v| g.dijkstra(v)).collect();
    let mut restarts = 0;
    loop {
        match attempt_embed(g, chain, &dist, tau, tau_cap, opts.psi, rng) {
            Ok(mut result) => {
                result.stats.tau_restarts = restarts;
                return Ok(result);
            }
            Err(Attempt::Raise(t)) => {
                debug_assert!(t > tau && t <= tau_cap);
                tau = t;
                restarts += 1;
            }
            Err(Attempt::Fail(e)) => return Err(e),
        }
    }
}

fn attempt_embed(
    g: &WeightedGraph,
    chain: &ClusteringChain,
    dist: &[Vec<f64>],
    tau: usize,
    tau_cap: usize,
    psi: u32,
    rng: &mut RandomSource,
) -> Result<EmbeddingResult, Attempt> {
    let root_potential = EmbedCall::potential(g.n(), chain.k(), 0, tau);
    let mut ctx = Ctx {
        dist,
        tau,
        tau_cap,
        psi,
        depth_bound: root_potential.ceil() as usize + 1,
        host_edges: BTreeMap::new(),
        bags: Vec::new(),
        bag_edges: Vec::new(),
        trace: Vec::new(),
        sampled_cuts: Vec::new(),
        calibration_events: Vec::new(),
        tau_realized: 0,
        base_calls: 0,
    };
    let all: Vec<u32> = (0..g.n() as u32).collect();
    let piece = Piece {
        graph: g.clone(),
        chain: chain.clone(),
        to_global: all.clone(),
    };
    let call = EmbedCall {
        terminals: all.clone(),
        piece: all,
        scale: chain.k(),
        boundary_terminals: Vec::new(),
        boundary_clusters: Vec::new(),
        depth: 0,
        potential: root_potential,
    };
    embed_rec(&mut ctx, &piece, &call, None, rng)?;
    let edges: Vec<Edge> = ctx
        .host_edges
        .iter()
        .map(|(&(u, v), &len)| Edge { u, v, len })
        .collect();
    let host = WeightedGraph::new(g.n(), edges)?;
    let decomposition = TreeDecomposition {
        bags: ctx.bags.iter().map(|b| b.iter().copied().collect()).collect(),
        edges: ctx.bag_edges,
        root: 0,
    };
    let stats = EmbedStats {
        tau,
        tau_realized: ctx.tau_realized,
        tau_restarts: 0,
        psi,
        depth: ctx.trace.iter().map(|t| t.depth).max().unwrap_or(0),
        width: decomposition.width(),
        n_calls: ctx.trace.len(),
        base_calls: ctx.base_calls,
        root_potential,
        trace: ctx.trace,
        sampled_cuts: ctx.sampled_cuts,
        calibration_events: ctx.calibration_events,
    };
    Ok(EmbeddingResult {
        host,
        decomposition,
        stats,
    })
}

fn embed_rec(
    ctx: &mut Ctx,
    piece: &Piece,
    call: &EmbedCall,
    parent_trace: Option<usize>,
    rng: &mut RandomSource,
) -> Result<usize, Attempt> {
    debug_assert!(call.validate(ctx.tau).is_empty(), "{:?}", call.validate(ctx.tau));
    if call.depth > ctx.depth_bound {
        return Err(EmbedError::DepthExceeded {
            depth: call.depth,
            bound: ctx.depth_bound,
        }
        .into());
    }
    let trace_idx = ctx.trace.len();
    ctx.trace.push(TraceEntry {
        parent: parent_trace,
        depth: call.depth,
        terminals: call.terminals.len(),
        boundary_terminals: call.boundary_terminals.len(),
        scale: call.scale,
        potential: call.potential,
        base_case: false,
        cut_from_boundary: false,
        cut_clusters: 0,
    });

    if call.terminals.len() <= 4 * ctx.tau {
        ctx.trace[trace_idx].base_case = true;
        ctx.base_calls += 1;
        for (i, &u) in call.terminals.iter().enumerate() {
            for &v in &call.terminals[i + 1..] {
                ctx.add_host_edge(u, v, ctx.dist[u as usize][v as usize]);
            }
        }
        let bag_idx = ctx.bags.len();
        ctx.bags.push(call.terminals.iter().copied().collect());
        return Ok(bag_idx);
    }

    let from_boundary = call.boundary_terminals.len() > 4 * ctx.tau;
    let s = if from_boundary {
        &call.boundary_terminals
    } else {
        &call.terminals
    };
    let mut weights = vec![0.0; piece.graph.n()];
    for &v in s {
        let local = piece.to_global.binary_search(&v).expect("terminal in piece");
        weights[local] = 1.0;
    }
    let mut conforming = Vec::with_capacity(call.boundary_clusters.len());
    for cluster in &call.boundary_clusters {
        let local: Vec<u32> = cluster
            .iter()
            .map(|v| piece.to_global.binary_search(v).map(|i| i as u32))
            .collect::<Result<_, _>>()
            .map_err(|_| EmbedError::BoundaryClusterLost)?;
        conforming
            .push(find_cluster_ref(&piece.chain, &local).ok_or(EmbedError::BoundaryClusterLost)?);
    }
    let wrap = |source: CutError| EmbedError::CutFailure {
        depth: call.depth,
        terminals: call.terminals.len(),
        source: Box::new(source),
    };
    let family = build_cut_family(
        &piece.graph,
        &piece.chain,
        &weights,
        &conforming,
        ctx.psi,
        TauConfig::Fixed(ctx.tau),
        ctx.tau_cap,
    )
    .map_err(wrap)?;
    if family.tau > ctx.tau {
        return Err(Attempt::Raise(family.tau));
    }
    ctx.calibration_events.extend(family.calibration_events.iter().copied());
    let cut = sample_cut(&family, rng).map_err(wrap)?;
    ctx.tau_realized = ctx.tau_realized.max(cut.clusters.len());
    ctx.trace[trace_idx].cut_from_boundary = from_boundary;
    ctx.trace[trace_idx].cut_clusters = cut.clusters.len();

    struct CutPart {
        r: ClusterRef,
        local: Vec<u32>,
        global: Vec<u32>,
        terminals: Vec<u32>,
        boundary: Vec<u32>,
    }
    let parts: Vec<CutPart> = cut
        .clusters
        .iter()
        .map(|&r| {
            let local = piece.chain.members(r).unwrap().to_vec();
            let global: Vec<u32> = local.iter().map(|&l| piece.to_global[l as usize]).collect();
            let terminals = intersect_sorted(&call.terminals, &global);
            let boundary = intersect_sorted(&call.boundary_terminals, &global);
            CutPart { r, local, global, terminals, boundary }
        })
        .collect();
    ctx.sampled_cuts.push(SampledCutRecord {
        call: trace_idx,
        cluster_sizes: parts.iter().map(|p| p.global.len()).collect(),
    });
    // one representative terminal per cut cluster that holds any
    let reps: Vec<u32> = parts
        .iter()
        .filter(|p| !p.terminals.is_empty())
        .map(|p| p.terminals[0])
        .collect();

    let root_idx = ctx.bags.len();
    let mut root_bag: BTreeSet<u32> = reps.iter().copied().collect();
    root_bag.extend(call.boundary_terminals.iter().copied());
    ctx.bags.push(root_bag);

    for part in &parts {
        if part.terminals.is_empty() {
            continue;
        }
        let v_c = part.terminals[0];
        for &u in &part.terminals {
            if u != v_c {
                ctx.add_host_edge(v_c, u, ctx.dist[v_c as usize][u as usize]);
            }
        }
        let child_boundary_clusters: Vec<Vec<u32>> = call
            .boundary_clusters
            .iter()
            .filter(|cluster| {
                cluster
                    .iter()
                    .any(|v| part.boundary.binary_search(v).is_ok())
            })
            .cloned()
            .collect();
        let (sub_graph, _) = piece.graph.induced(&part.local)?;
        let sub_chain = subchain(&piece.chain, part.r)?;
        let sub_piece = Piece {
            graph: sub_graph,
            chain: sub_chain,
            to_global: part.global.clone(),
        };
        let child = EmbedCall {
            terminals: part.terminals.clone(),
            piece: part.global.clone(),
            scale: part.r.level,
            boundary_terminals: part.boundary.clone(),
            boundary_clusters: child_boundary_clusters,
            depth: call.depth + 1,
            potential: EmbedCall::potential(
                part.terminals.len(),
                part.r.level,
                part.boundary.len(),
                ctx.tau,
            ),
        };
        let first_child_bag = ctx.bags.len();
        let child_root = embed_rec(ctx, &sub_piece, &child, Some(trace_idx), rng)?;
        for bag in &mut ctx.bags[first_child_bag..] {
            bag.insert(v_c);
        }
        ctx.bag_edges.push((root_idx, child_root));
    }

    let removed: Vec<u32> = parts.iter().flat_map(|p| p.local.iter().copied()).collect();
    let rep_clusters: Vec<Vec<u32>> = parts
        .iter()
        .filter(|p| !p.terminals.is_empty())
        .map(|p| p.global.clone())
        .collect();
    for comp in piece.graph.connected_components(&removed) {
        let comp_global: Vec<u32> = comp.iter().map(|&l| piece.to_global[l as usize]).collect();
        let terminals = union_sorted(&intersect_sorted(&call.terminals, &comp_global), &reps);
        if terminals.is_empty() {
            continue;
        }
        let boundary = union_sorted(
            &intersect_sorted(&call.boundary_terminals, &comp_global),
            &reps,
        );
        let mut boundary_clusters = rep_clusters.clone();
        for cluster in &call.boundary_clusters {
            let rep = cluster
                .iter()
                .find(|v| call.boundary_terminals.binary_search(v).is_ok())
                .expect("boundary cluster holds its representative");
            if boundary.binary_search(rep).is_ok() {
                boundary_clusters.push(cluster.clone());
            }
        }
        let child = EmbedCall {
            terminals: terminals.clone(),
            piece: call.piece.clone(),
            scale: call.scale,
            boundary_terminals: boundary.clone(),
            boundary_clusters,
            depth: call.depth + 1,
            potential: EmbedCall::potential(terminals.len(), call.scale, boundary.len(), ctx.tau),
        };
        let child_root = embed_rec(ctx, piece, &child, Some(trace_idx), rng)?;
        ctx.bag_edges.push((root_idx, child_root));
    }
    Ok(root_idx)
}

/// Exact post-hoc checks: the decomposition is valid for the host, the width
/// stays within 6 tau plus the measured depth, no pairwise distance shrinks,
/// the recursion depth stays within the root potential, every recursion edge
/// drops the potential by at least 1, and no call sees more than 5 tau
/// boundary terminals.
pub fn verify_embedding(
    g: &WeightedGraph,
    result: &EmbeddingResult,
    tau: usize,
) -> Result<Vec<String>, EmbedError> {
    let mut out = Vec::new();
    if result.host.n() != g.n() {
        out.push(format!(
            "host has {} vertices, source has {}",
            result.host.n(),
            g.n()
        ));
        return Ok(out);
    }
    out.extend(verify_tree_decomposition(&result.host, &result.decomposition));
    let width = result.decomposition.width();
    if width > 6 * tau + result.stats.depth {
        out.push(format!(
            "width {width} exceeds 6*{tau} + depth {}",
            result.stats.depth
        ));
    }
    for u in 0..g.n() as u32 {
        let hd = result.host.dijkstra(u);
        let gd = g.dijkstra(u);
        for v in (u + 1)..g.n() as u32 {
            if hd[v as usize] < gd[v as usize] * (1.0 - 1e-9) {
                out.push(format!(
                    "distance ({u}, {v}) contracted: {} < {}",
                    hd[v as usize], gd[v as usize]
                ));
            }
        }
    }
    let metrics = g.metrics()?;
    let depth_bound = 5.0 * (g.n().max(1) as f64).log2() + metrics.k as f64;
    if result.stats.depth as f64 > depth_bound + 1e-9 {
        out.push(format!(
            "recursion depth {} exceeds {depth_bound}",
            result.stats.depth
        ));
    }
    for (i, entry) in result.stats.trace.iter().enumerate() {
        if let Some(p) = entry.parent {
            let parent = &result.stats.trace[p];
            if entry.potential > parent.potential - 1.0 + 1e-9 {
                out.push(format!(
                    "call {i} potential {} dropped less than 1 from {}",
                    entry.potential, parent.potential
                ));
            }
        }
        if entry.boundary_terminals > 5 * tau {
            out.push(format!(
                "call {i} has {} boundary terminals, over 5*{tau}",
                entry.boundary_terminals
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSpec {
    Edges,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistortion {
    pub u: u32,
    pub v: u32,
    pub base: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionStats {
    pub pairs: usize,
    pub results: usize,
    /// Max over pairs of the mean host/source distance ratio.
    pub expected_distortion: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub table: Vec<PairDistortion>,
}

/// Host-over-source distance ratios, aggregated per pair across results.
pub fn measure_distortion(
    g: &WeightedGraph,
    results: &[EmbeddingResult],
    spec: PairSpec,
) -> Result<DistortionStats, EmbedError> {
    if results.is_empty() {
        return Err(EmbedError::NoResults);
    }
    let pairs: Vec<(u32, u32)> = match spec {
        PairSpec::Edges => g.edges().iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect(),
        PairSpec::AllPairs => (0..g.n() as u32)
            .flat_map(|u| ((u + 1)..g.n() as u32).map(move |v| (u, v)))
            .collect(),
    };
    let sources: BTreeSet<u32> = pairs.iter().map(|&(u, _)| u).collect();
    let mut base_rows: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut host_rows: Vec<BTreeMap<u32, Vec<f64>>> = vec![BTreeMap::new(); results.len()];
    for &u in &sources {
        base_rows.insert(u, g.dijkstra(u));
        for (rows, result) in host_rows.iter_mut().zip(results) {
            rows.insert(u, result.host.dijkstra(u));
        }
    }
    let mut table = Vec::with_capacity(pairs.len());
    let mut max_ratio: f64 = 1.0;
    for &(u, v) in &pairs {
        let base = base_rows[&u][v as usize];
        let mut sum = 0.0;
        let mut pair_max: f64 = 0.0;
        for rows in &host_rows {
            let ratio = rows[&u][v as usize] / base;
            sum += ratio;
            pair_max = pair_max.max(ratio);
        }
        max_ratio = max_ratio.max(pair_max);
        table.push(PairDistortion {
            u,
            v,
            base,
            mean_ratio: sum / results.len() as f64,
            max_ratio: pair_max,
        });
    }
    let expected_distortion = table
        .iter()
        .map(|p| p.mean_ratio)
        .fold(1.0f64, f64::max);
    let mean_ratio = if table.is_empty() {
        1.0
    } else {
        table.iter().map(|p| p.mean_ratio).sum::<f64>() / table.len() as f64
    };
    Ok(DistortionStats {
        pairs: pairs.len(),
        results: results.len(),
        expected_distortion,
        mean_ratio,
        max_ratio,
        table,
    })
}
