use std::collections::BTreeSet;
use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twembed::chain::build_chain;
use twembed::cops::build_cop_decomposition;
use twembed::cut::{
    build_cut_family, contraction_sequence_from_chain, grid_contraction_sequence, TauConfig,
};
use twembed::embed::{embed, EmbedOptions, PairSpec};
use twembed::gen;
use twembed::graph::WeightedGraph;
use twembed::pipeline::{
    load_graph, records_csv, run_pipeline, verify_artifact, Artifact, ExperimentConfig,
    GraphSource,
};
use twembed::rng::RandomSource;
use twembed::shortcut::shortcut_partition;

/// Stochastic embeddings of edge-weighted graphs into low-treewidth hosts,
/// with verifiers for every construction and a multi-seed measurement harness.
#[derive(Parser)]
#[command(name = "twembed", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph from a spec and write it as JSON.
    Gen {
        /// Generator spec: grid:ROWS,COLS,LEN | path:N | star:N | random_planar:N.
        #[arg(long, value_name = "SPEC")]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Build a hierarchical clustering chain artifact.
    Chain {
        #[command(flatten)]
        graph: GraphArgs,
        /// Minor-freeness parameter (grids and planar graphs need 5).
        #[arg(long, default_value_t = 5)]
        r: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Build a buffered cop decomposition artifact.
    Cops {
        #[command(flatten)]
        graph: GraphArgs,
        /// Target scale: supernode radius at most 4*delta, buffer delta/r.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 5)]
        r: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Build a shortcut partition artifact.
    Shortcut {
        #[command(flatten)]
        graph: GraphArgs,
        /// Cluster diameter bound as a fraction of the graph diameter, in (0, 1].
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 5)]
        r: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Build a stochastic balanced cut family artifact over unit vertex weights.
    Cut {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 5)]
        r: u32,
        /// Number of cuts in the family; sampling hits a fixed cluster with
        /// probability at most 1/psi.
        #[arg(long, default_value_t = 4)]
        psi: u32,
        /// Separator size cap: an integer, or auto:C to derive it from the
        /// chain quality (auto alone uses C = 1).
        #[arg(long, default_value = "auto", value_parser = parse_tau)]
        tau: TauConfig,
        /// Hard ceiling for adaptive tau doubling.
        #[arg(long, default_value_t = 4096)]
        tau_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
        /// Also write the contraction sequence of the family's final
        /// availability state to this file.
        #[arg(long, value_name = "FILE")]
        sequence_out: Option<String>,
        /// Emit the p*q-spaced grid contraction sequence instead of a cut
        /// family; no input graph is read.
        #[arg(long, value_name = "P,Q", value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
    },
    /// Embed a graph into a low-treewidth host and write the result artifact.
    Embed {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 5)]
        r: u32,
        #[arg(long, default_value_t = 4)]
        psi: u32,
        #[arg(long, default_value = "auto", value_parser = parse_tau)]
        tau: TauConfig,
        #[arg(long, default_value_t = 4096)]
        tau_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Check an artifact against its definitional properties; exit 1 on any
    /// violation.
    Verify {
        /// Artifact JSON file produced by chain, cops, shortcut, cut, or embed.
        #[arg(long, value_name = "FILE")]
        artifact: String,
        /// The graph the artifact was built from; required for every kind
        /// except contraction sequences, which carry their starting graph.
        #[arg(long, value_name = "FILE")]
        graph: Option<String>,
    },
    /// Run a multi-seed embedding sweep and aggregate width, depth, and
    /// distortion metrics.
    Sweep {
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of seeds, run at base_seed, base_seed + 1, ...
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        /// Base seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        r: u32,
        #[arg(long, default_value_t = 4)]
        psi: u32,
        #[arg(long, default_value = "auto", value_parser = parse_tau)]
        tau: TauConfig,
        #[arg(long, default_value_t = 4096)]
        tau_cap: usize,
        /// Vertex pairs measured for distortion.
        #[arg(long, value_enum, default_value_t = PairsArg::Edges)]
        pairs: PairsArg,
        /// Echoed into the output for provenance; the sweep itself does not
        /// consume them.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Worker threads; 0 lets the pool pick.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Layout of the report written to --out / stdout.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
        /// Also write the full JSON bundle here.
        #[arg(long, value_name = "FILE")]
        out_json: Option<String>,
        /// Also write the per-seed CSV here.
        #[arg(long, value_name = "FILE")]
        out_csv: Option<String>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Graph JSON file.
    #[arg(long, value_name = "FILE", conflicts_with = "spec")]
    graph: Option<String>,
    /// Generator spec: grid:ROWS,COLS,LEN | path:N | star:N | random_planar:N.
    #[arg(long, value_name = "SPEC")]
    spec: Option<String>,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource, Box<dyn Error>> {
        match (&self.graph, &self.spec) {
            (Some(path), None) => Ok(GraphSource::File { path: path.clone() }),
            (None, Some(spec)) => Ok(GraphSource::Generator { spec: spec.clone() }),
            _ => Err("pass exactly one of --graph or --spec".into()),
        }
    }

    /// Load and rescale so the smallest positive distance is 1, the form every
    /// builder expects. Verify applies the same rescaling, so artifacts check
    /// out against the file they were built from.
    fn load_normalized(&self, seed: u64) -> Result<WeightedGraph, Box<dyn Error>> {
        let g = load_graph(&self.source()?, seed)?;
        let (g, _) = g.normalize()?;
        Ok(g)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    /// Endpoints of every edge.
    Edges,
    /// All vertex pairs.
    All,
}

impl From<PairsArg> for PairSpec {
    fn from(p: PairsArg) -> Self {
        match p {
            PairsArg::Edges => PairSpec::Edges,
            PairsArg::All => PairSpec::AllPairs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_tau(s: &str) -> Result<TauConfig, String> {
    if s == "auto" {
        return Ok(TauConfig::Auto { c_tau: 1.0 });
    }
    if let Some(c) = s.strip_prefix("auto:") {
        let c_tau: f64 = c.parse().map_err(|_| format!("bad tau constant {c:?}"))?;
        if !(c_tau > 0.0 && c_tau.is_finite()) {
            return Err("tau constant must be positive and finite".into());
        }
        return Ok(TauConfig::Auto { c_tau });
    }
    let t: usize = s
        .parse()
        .map_err(|_| format!("tau must be an integer or auto:C, got {s:?}"))?;
    if t == 0 {
        return Err("tau must be at least 1".into());
    }
    Ok(TauConfig::Fixed(t))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s.split_once(',').ok_or("expected P,Q")?;
    let p = p.trim().parse().map_err(|_| format!("bad P {p:?}"))?;
    let q = q.trim().parse().map_err(|_| format!("bad Q {q:?}"))?;
    Ok((p, q))
}

fn pretty<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn emit(out: Option<&str>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.cmd {
        Cmd::Gen { spec, seed, out } => {
            let g = gen::from_spec(&spec, seed)?;
            emit(out.as_deref(), &pretty(&g)?)?;
        }
        Cmd::Chain {
            graph,
            r,
            seed,
            out,
        } => {
            let g = graph.load_normalized(seed)?;
            let mut rng = RandomSource::new(seed);
            let chain = build_chain(&g, r, &mut rng)?;
            emit(out.as_deref(), &pretty(&Artifact::Chain { chain })?)?;
        }
        Cmd::Cops {
            graph,
            delta,
            r,
            seed,
            out,
        } => {
            let g = graph.load_normalized(seed)?;
            let cop = build_cop_decomposition(&g, delta, r, seed)?;
            emit(out.as_deref(), &pretty(&Artifact::Cop { cop })?)?;
        }
        Cmd::Shortcut {
            graph,
            epsilon,
            r,
            seed,
            out,
        } => {
            let g = graph.load_normalized(seed)?;
            let mut rng = RandomSource::new(seed);
            let partition = shortcut_partition(&g, epsilon, r, &mut rng)?;
            emit(out.as_deref(), &pretty(&Artifact::Shortcut { partition })?)?;
        }
        Cmd::Cut {
            graph,
            r,
            psi,
            tau,
            tau_cap,
            seed,
            out,
            sequence_out,
            grid,
        } => {
            if let Some((p, q)) = grid {
                let (start, sequence) = grid_contraction_sequence(p, q)?;
                emit(out.as_deref(), &pretty(&Artifact::Sequence { start, sequence })?)?;
                return Ok(ExitCode::SUCCESS);
            }
            let g = graph.load_normalized(seed)?;
            let mut rng = RandomSource::new(seed);
            let chain = build_chain(&g, r, &mut rng)?;
            let weights = vec![1.0; g.n()];
            let family = build_cut_family(&g, &chain, &weights, &[], psi, tau, tau_cap)?;
            if let Some(path) = sequence_out {
                let mut unavailable: BTreeSet<Vec<u32>> = BTreeSet::new();
                for entry in &family.ledger {
                    unavailable.insert(chain.members(entry.cluster)?.to_vec());
                }
                unavailable.insert((0..g.n() as u32).collect());
                let (start, sequence) = contraction_sequence_from_chain(&g, &chain, &unavailable)?;
                fs::write(path, pretty(&Artifact::Sequence { start, sequence })?)?;
            }
            emit(
                out.as_deref(),
                &pretty(&Artifact::CutFamily {
                    chain,
                    weights,
                    family,
                })?,
            )?;
        }
        Cmd::Embed {
            graph,
            r,
            psi,
            tau,
            tau_cap,
            seed,
            out,
        } => {
            let g = graph.load_normalized(seed)?;
            let mut rng = RandomSource::new(seed);
            let opts = EmbedOptions {
                r,
                psi,
                tau,
                tau_cap,
            };
            let result = embed(&g, &opts, &mut rng)?;
            emit(out.as_deref(), &pretty(&Artifact::Embedding { result })?)?;
        }
        Cmd::Verify { artifact, graph } => {
            let artifact: Artifact = serde_json::from_str(&fs::read_to_string(&artifact)?)?;
            let g = match graph {
                Some(path) => {
                    let raw: WeightedGraph = serde_json::from_str(&fs::read_to_string(&path)?)?;
                    Some(raw.normalize()?.0)
                }
                None => None,
            };
            let violations = verify_artifact(&artifact, g.as_ref())?;
            if violations.is_empty() {
                println!("ok: {} artifact verifies", artifact.kind());
                return Ok(ExitCode::SUCCESS);
            }
            for v in &violations {
                println!("violation: {v}");
            }
            return Ok(ExitCode::from(1));
        }
        Cmd::Sweep {
            graph,
            seeds,
            seed,
            r,
            psi,
            tau,
            tau_cap,
            pairs,
            epsilon,
            delta,
            jobs,
            format,
            out,
            out_json,
            out_csv,
        } => {
            let cfg = ExperimentConfig {
                graph: graph.source()?,
                seeds,
                base_seed: seed,
                r,
                psi,
                tau,
                tau_cap,
                pairs: pairs.into(),
                epsilon,
                delta,
                jobs,
                out_json,
                out_csv,
            };
            let bundle = run_pipeline(&cfg)?;
            let text = match format {
                Format::Json => pretty(&bundle)?,
                Format::Csv => records_csv(&bundle.records),
            };
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
