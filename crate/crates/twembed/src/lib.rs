//! Stochastic embeddings of edge-weighted graphs into low-treewidth host graphs.
//!
//! The pipeline: normalize a graph, build a hierarchical clustering chain from
//! repeated shortcut partitions (which in turn ride on buffered cop
//! decompositions), then run a divide-and-conquer embedding that cuts pieces
//! with stochastic balanced cuts and glues base-case cliques into a host graph
//! with a tree decomposition. Every structure has a verifier that checks its
//! definitional properties on concrete instances, and the top-level harness
//! measures cut frequencies, distortion, width, and depth over seed sweeps.

pub mod chain;
pub mod cops;
pub mod cut;
pub mod embed;
pub mod gen;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod shortcut;
pub mod treewidth;
