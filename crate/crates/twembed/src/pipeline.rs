//! Experiment plumbing: graph sources, the tagged artifact envelope the CLI
//! reads and writes, verification dispatch by artifact kind, and the
//! seed-sweep driver that runs chain sampling, embedding, verification, and
//! distortion measurement end to end.

use crate::chain::{build_chain, verify_chain, ClusteringChain};
use crate::cops::{verify_cop_decomposition, CopDecomposition};
use crate::cut::{
    verify_contraction_sequence, verify_cut, ContractionSequence, CutFamily, TauConfig,
};
use crate::embed::{
    embed_with_chain, measure_distortion, verify_embedding, DistortionStats, EmbedError,
    EmbedOptions, EmbeddingResult, PairSpec,
};
use crate::gen::{self, GenError};
use crate::graph::{GraphError, WeightedGraph};
use crate::rng::RandomSource;
use crate::shortcut::{verify_shortcut_partition, ShortcutPartition};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact kind '{0}' needs a graph to verify against")]
    MissingGraph(&'static str),
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Everything a verifier needs beyond the source graph travels inside the
/// artifact, under a `kind` tag for dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Chain {
        chain: ClusteringChain,
    },
    Cop {
        cop: CopDecomposition,
    },
    Shortcut {
        partition: ShortcutPartition,
    },
    CutFamily {
        chain: ClusteringChain,
        weights: Vec<f64>,
        family: CutFamily,
    },
    Embedding {
        result: EmbeddingResult,
    },
    /// Carries its own starting graph: sequences usually begin at a quotient,
    /// not at the source graph.
    Sequence {
        start: WeightedGraph,
        sequence: ContractionSequence,
    },
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Chain { .. } => "chain",
            Artifact::Cop { .. } => "cop",
            Artifact::Shortcut { .. } => "shortcut",
            Artifact::CutFamily { .. } => "cut_family",
            Artifact::Embedding { .. } => "embedding",
            Artifact::Sequence { .. } => "sequence",
        }
    }
}

/// Dispatch to the matching verifier. `g` is the source graph; only the
/// sequence kind can do without it.
pub fn verify_artifact(
    artifact: &Artifact,
    g: Option<&WeightedGraph>,
) -> Result<Vec<String>, PipelineError> {
    let need_graph = || g.ok_or(PipelineError::MissingGraph(artifact.kind()));
    match artifact {
        Artifact::Chain { chain } => {
            let h = if chain.level_hops.is_empty() {
                usize::MAX
            } else {
                chain.hop_bound()
            };
            Ok(verify_chain(need_graph()?, chain, h).violations)
        }
        Artifact::Cop { cop } => Ok(verify_cop_decomposition(need_graph()?, cop)),
        Artifact::Shortcut { partition } => {
            Ok(verify_shortcut_partition(need_graph()?, partition))
        }
        Artifact::CutFamily {
            chain,
            weights,
            family,
        } => {
            let g = need_graph()?;
            let mut out = Vec::new();
            for (i, cut) in family.cuts.iter().enumerate() {
                for v in verify_cut(g, chain, cut, weights, &family.conforming, family.tau) {
                    out.push(format!("cut {i}: {v}"));
                }
            }
            let conforming: BTreeSet<Vec<u32>> = family
                .conforming
                .iter()
                .filter_map(|&r| chain.members(r).ok().map(<[u32]>::to_vec))
                .collect();
            let mut used = BTreeSet::new();
            for (i, cut) in family.cuts.iter().enumerate() {
                for &r in &cut.clusters {
                    if let Ok(set) = chain.members(r) {
                        if set.len() > 1
                            && !conforming.contains(set)
                            && !used.insert(set.to_vec())
                        {
                            out.push(format!("cut {i}: cluster set reused across cuts"));
                        }
                    }
                }
            }
            Ok(out)
        }
        Artifact::Embedding { result } => {
            Ok(verify_embedding(need_graph()?, result, result.stats.tau)?)
        }
        Artifact::Sequence { start, sequence } => {
            Ok(verify_contraction_sequence(start, sequence))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GraphSource {
    File { path: String },
    Generator { spec: String },
}

pub fn load_graph(source: &GraphSource, seed: u64) -> Result<WeightedGraph, PipelineError> {
    match source {
        GraphSource::File { path } => Ok(serde_json::from_str(&fs::read_to_string(path)?)?),
        GraphSource::Generator { spec } => Ok(gen::from_spec(spec, seed)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub seeds: u32,
    pub base_seed: u64,
    pub r: u32,
    pub psi: u32,
    pub tau: TauConfig,
    pub tau_cap: usize,
    pub pairs: PairSpec,
    /// Echoed into outputs for runs that also exercised the partition and
    /// decomposition subcommands; the sweep itself does not consume them.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// 0 lets the thread pool pick its own width.
    pub jobs: usize,
    pub out_json: Option<String>,
    pub out_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub error: Option<String>,
    pub chain_k: usize,
    pub h_hat: usize,
    pub chain_violations: usize,
    pub embed_violations: usize,
    pub width: usize,
    pub depth: usize,
    pub n_calls: usize,
    pub base_calls: usize,
    pub tau: usize,
    pub tau_realized: usize,
    pub tau_restarts: usize,
    pub calibration_events: usize,
}

impl SeedRecord {
    fn empty(seed: u64) -> Self {
        SeedRecord {
            seed,
            error: None,
            chain_k: 0,
            h_hat: 0,
            chain_violations: 0,
            embed_violations: 0,
            width: 0,
            depth: 0,
            n_calls: 0,
            base_calls: 0,
            tau: 0,
            tau_realized: 0,
            tau_restarts: 0,
            calibration_events: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub successes: usize,
    pub failures: usize,
    pub width_max: usize,
    pub width_mean: f64,
    pub depth_max: usize,
    pub depth_mean: f64,
    pub h_hat_max: usize,
    pub beta_hat: f64,
    pub total_tau_restarts: usize,
    pub total_calibration_events: usize,
    pub expected_distortion: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub config: ExperimentConfig,
    pub n: usize,
    pub m: usize,
    pub records: Vec<SeedRecord>,
    pub summary: Summary,
    pub distortion: Option<DistortionStats>,
}

fn run_seed(
    g: &WeightedGraph,
    cfg: &ExperimentConfig,
    seed: u64,
) -> (SeedRecord, Option<(ClusteringChain, EmbeddingResult)>) {
    let mut record = SeedRecord::empty(seed);
    let mut rng = RandomSource::new(seed);
    let chain = match build_chain(g, cfg.r, &mut rng) {
        Ok(c) => c,
        Err(e) => {
            record.error = Some(e.to_string());
            return (record, None);
        }
    };
    let chain_report = verify_chain(g, &chain, usize::MAX);
    record.chain_k = chain.k();
    record.h_hat = chain_report.h_hat;
    record.chain_violations = chain_report.violations.len();
    let opts = EmbedOptions {
        r: cfg.r,
        psi: cfg.psi,
        tau: cfg.tau,
        tau_cap: cfg.tau_cap,
    };
    let result = match embed_with_chain(g, &chain, &opts, &mut rng) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return (record, None);
        }
    };
    record.width = result.stats.width;
    record.depth = result.stats.depth;
    record.n_calls = result.stats.n_calls;
    record.base_calls = result.stats.base_calls;
    record.tau = result.stats.tau;
    record.tau_realized = result.stats.tau_realized;
    record.tau_restarts = result.stats.tau_restarts;
    record.calibration_events = result.stats.calibration_events.len();
    match verify_embedding(g, &result, result.stats.tau) {
        Ok(report) => record.embed_violations = report.len(),
        Err(e) => {
            record.error = Some(e.to_string());
            return (record, None);
        }
    }
    (record, Some((chain, result)))
}

/// Largest separation coefficient consistent with the sampled chains: for
/// every edge and scale below the top, the fraction of chains cutting the
/// edge at that scale, rescaled by 2^i over the edge length.
fn beta_from_chains(g: &WeightedGraph, chains: &[&ClusteringChain]) -> f64 {
    let mut beta: f64 = 0.0;
    for e in g.edges() {
        let levels = chains.iter().map(|c| c.k()).min().unwrap_or(0);
        for i in 0..levels {
            let cut = chains
                .iter()
                .filter(|c| c.levels[i].cluster_of(e.u) != c.levels[i].cluster_of(e.v))
                .count();
            let freq = cut as f64 / chains.len() as f64;
            beta = beta.max(freq * (1u64 << i) as f64 / e.len);
        }
    }
    beta
}

/// Run the configured number of seeds (in parallel when `jobs` allows),
/// collect per-seed records sorted by seed, aggregate chain and embedding
/// quality, and write the JSON and CSV outputs if paths are configured. A
/// seed that fails is recorded with its error and the sweep continues.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<MetricsBundle, PipelineError> {
    if cfg.psi == 0 {
        return Err(PipelineError::BadConfig("psi must be positive".into()));
    }
    if cfg.tau_cap == 0 {
        return Err(PipelineError::BadConfig("tau cap must be positive".into()));
    }
    let raw = load_graph(&cfg.graph, cfg.base_seed)?;
    let (g, _) = raw.normalize()?;
    let seeds: Vec<u64> = (0..cfg.seeds)
        .map(|i| cfg.base_seed.wrapping_add(i as u64))
        .collect();
    let run_all = || {
        seeds
            .par_iter()
            .map(|&seed| run_seed(&g, cfg, seed))
            .collect::<Vec<_>>()
    };
    let mut outcomes = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| PipelineError::BadConfig(e.to_string()))?
            .install(run_all)
    } else {
        run_all()
    };
    outcomes.sort_by_key(|(record, _)| record.seed);
    let records: Vec<SeedRecord> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let chains: Vec<&ClusteringChain> = outcomes
        .iter()
        .filter_map(|(_, s)| s.as_ref().map(|(c, _)| c))
        .collect();
    let results: Vec<EmbeddingResult> = outcomes
        .iter()
        .filter_map(|(_, s)| s.as_ref().map(|(_, r)| r.clone()))
        .collect();
    let distortion = if results.is_empty() {
        None
    } else {
        Some(measure_distortion(&g, &results, cfg.pairs)?)
    };
    let ok: Vec<&SeedRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let mean = |f: &dyn Fn(&SeedRecord) -> usize| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|r| f(r) as f64).sum::<f64>() / ok.len() as f64
        }
    };
    let summary = Summary {
        successes: ok.len(),
        failures: records.len() - ok.len(),
        width_max: ok.iter().map(|r| r.width).max().unwrap_or(0),
        width_mean: mean(&|r| r.width),
        depth_max: ok.iter().map(|r| r.depth).max().unwrap_or(0),
        depth_mean: mean(&|r| r.depth),
        h_hat_max: ok.iter().map(|r| r.h_hat).max().unwrap_or(0),
        beta_hat: if chains.is_empty() {
            0.0
        } else {
            beta_from_chains(&g, &chains)
        },
        total_tau_restarts: records.iter().map(|r| r.tau_restarts).sum(),
        total_calibration_events: records.iter().map(|r| r.calibration_events).sum(),
        expected_distortion: distortion.as_ref().map_or(1.0, |d| d.expected_distortion),
        max_ratio: distortion.as_ref().map_or(1.0, |d| d.max_ratio),
    };
    let bundle = MetricsBundle {
        config: cfg.clone(),
        n: g.n(),
        m: g.edges().len(),
        records,
        summary,
        distortion,
    };
    if let Some(path) = &cfg.out_json {
        fs::write(path, format!("{}\n", serde_json::to_string_pretty(&bundle)?))?;
    }
    if let Some(path) = &cfg.out_csv {
        fs::write(path, records_csv(&bundle.records))?;
    }
    Ok(bundle)
}

pub fn records_csv(records: &[SeedRecord]) -> String {
    let mut out = String::from(
        "seed,error,chain_k,h_hat,chain_violations,embed_violations,width,depth,\
         n_calls,base_calls,tau,tau_realized,tau_restarts,calibration_events\n",
    );
    for r in records {
        let error = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace('\n', " ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            error,
            r.chain_k,
            r.h_hat,
            r.chain_violations,
            r.embed_violations,
            r.width,
            r.depth,
            r.n_calls,
            r.base_calls,
            r.tau,
            r.tau_realized,
            r.tau_restarts,
            r.calibration_events,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::grid_contraction_sequence;
    use crate::graph::Edge;

    fn grid_config(seeds: u32) -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSource::Generator {
                spec: "grid:5,5,1".into(),
            },
            seeds,
            base_seed: 100,
            r: 5,
            psi: 3,
            tau: TauConfig::Fixed(2),
            tau_cap: 64,
            pairs: PairSpec::Edges,
            epsilon: None,
            delta: None,
            jobs: 1,
            out_json: None,
            out_csv: None,
        }
    }

    #[test]
    fn single_vertex_run_is_all_trivial() {
        let mut cfg = grid_config(2);
        cfg.graph = GraphSource::Generator { spec: "path:1".into() };
        let bundle = run_pipeline(&cfg).unwrap();
        assert_eq!(bundle.n, 1);
        assert_eq!(bundle.summary.failures, 0);
        assert_eq!(bundle.summary.width_max, 0);
        assert_eq!(bundle.summary.expected_distortion, 1.0);
        assert!(bundle
            .records
            .iter()
            .all(|r| r.chain_violations == 0 && r.embed_violations == 0));
    }

    #[test]
    fn zero_seeds_is_an_empty_bundle() {
        let bundle = run_pipeline(&grid_config(0)).unwrap();
        assert!(bundle.records.is_empty());
        assert!(bundle.distortion.is_none());
        assert_eq!(bundle.summary.successes, 0);
        assert_eq!(bundle.summary.beta_hat, 0.0);
    }

    #[test]
    fn grid_sweep_records_and_aggregates() {
        let bundle = run_pipeline(&grid_config(5)).unwrap();
        assert_eq!(bundle.records.len(), 5);
        let seeds: Vec<u64> = bundle.records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103, 104]);
        assert_eq!(bundle.summary.failures, 0);
        assert!(bundle.summary.width_max >= 1);
        assert!(bundle.summary.beta_hat >= 1.0, "every unit edge is cut at scale 0");
        let d = bundle.distortion.as_ref().unwrap();
        assert!(d.expected_distortion >= 1.0);
        assert!(d.max_ratio.is_finite());
        for r in &bundle.records {
            assert!(r.error.is_none());
            assert_eq!(r.chain_violations, 0);
            assert_eq!(r.embed_violations, 0);
        }
    }

    #[test]
    fn identical_config_reproduces_identical_outputs() {
        let a = run_pipeline(&grid_config(3)).unwrap();
        let b = run_pipeline(&grid_config(3)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(records_csv(&a.records), records_csv(&b.records));
        let mut parallel = grid_config(3);
        parallel.jobs = 3;
        let c = run_pipeline(&parallel).unwrap();
        assert_eq!(a.records, c.records);
    }

    #[test]
    fn per_seed_failures_are_recorded_and_the_run_continues() {
        // complete graph on 5 vertices: with tau capped at 1 no balanced
        // separator exists once the recursion needs a cut
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k5.json");
        let mut edges = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                edges.push(Edge { u, v, len: 1.0 });
            }
        }
        let k5 = WeightedGraph::new(5, edges).unwrap();
        fs::write(&path, serde_json::to_string(&k5).unwrap()).unwrap();
        let mut cfg = grid_config(2);
        cfg.graph = GraphSource::File {
            path: path.to_string_lossy().into_owned(),
        };
        cfg.tau = TauConfig::Fixed(1);
        cfg.tau_cap = 1;
        cfg.psi = 1;
        let bundle = run_pipeline(&cfg).unwrap();
        assert_eq!(bundle.summary.failures, 2);
        for r in &bundle.records {
            let err = r.error.as_ref().expect("seed should fail");
            assert!(err.contains("cut sampling failed"), "{err}");
        }
    }

    #[test]
    fn output_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = grid_config(2);
        cfg.out_json = Some(dir.path().join("out.json").to_string_lossy().into_owned());
        cfg.out_csv = Some(dir.path().join("out.csv").to_string_lossy().into_owned());
        let bundle = run_pipeline(&cfg).unwrap();
        let json = fs::read_to_string(cfg.out_json.as_ref().unwrap()).unwrap();
        let parsed: MetricsBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, bundle);
        let csv = fs::read_to_string(cfg.out_csv.as_ref().unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("seed,error,chain_k"));
    }

    #[test]
    fn artifacts_verify_and_round_trip() {
        let g = gen::grid(4, 4, 1.0).unwrap();
        let mut rng = RandomSource::new(7);
        let chain = build_chain(&g, 5, &mut rng).unwrap();
        let weights = vec![1.0; 16];
        let family = crate::cut::build_cut_family(
            &g,
            &chain,
            &weights,
            &[],
            2,
            TauConfig::Fixed(2),
            64,
        )
        .unwrap();
        let result = embed_with_chain(
            &g,
            &chain,
            &EmbedOptions {
                r: 5,
                psi: 2,
                tau: TauConfig::Fixed(2),
                tau_cap: 64,
            },
            &mut rng,
        )
        .unwrap();
        let (start, sequence) = grid_contraction_sequence(2, 2).unwrap();
        let artifacts = vec![
            Artifact::Chain { chain: chain.clone() },
            Artifact::CutFamily {
                chain: chain.clone(),
                weights,
                family,
            },
            Artifact::Embedding { result },
            Artifact::Sequence { start, sequence },
        ];
        for artifact in &artifacts {
            let report = verify_artifact(artifact, Some(&g)).unwrap();
            assert!(report.is_empty(), "{}: {report:?}", artifact.kind());
            let json = serde_json::to_string(artifact).unwrap();
            assert!(json.contains(&format!("\"kind\":\"{}\"", artifact.kind())));
            let back: Artifact = serde_json::from_str(&json).unwrap();
            assert_eq!(&back, artifact);
        }
        // graph is mandatory except for sequences
        assert!(matches!(
            verify_artifact(&artifacts[0], None),
            Err(PipelineError::MissingGraph("chain"))
        ));
        assert!(verify_artifact(&artifacts[3], None).unwrap().is_empty());
    }

    #[test]
    fn tampered_chain_artifact_fails_verification() {
        let g = gen::grid(4, 4, 1.0).unwrap();
        let chain = build_chain(&g, 5, &mut RandomSource::new(3)).unwrap();
        let artifact = Artifact::Chain { chain };
        let mut val = serde_json::to_value(&artifact).unwrap();
        // merge everything into one giant scale-1 cluster: breaks the
        // diameter bound
        let all: Vec<u32> = (0..16).collect();
        val["chain"]["levels"][1] = serde_json::json!([all]);
        val["chain"]["parents"][0] = serde_json::json!(vec![0u32; 16]);
        val["chain"]["parents"][1] = serde_json::json!(vec![0u32; 1]);
        match serde_json::from_value::<Artifact>(val) {
            Ok(tampered) => {
                let report = verify_artifact(&tampered, Some(&g)).unwrap();
                assert!(!report.is_empty());
            }
            Err(_) => {
                // parse-level rejection is equally acceptable
            }
        }
    }
}
