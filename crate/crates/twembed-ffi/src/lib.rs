//! C ABI over the embedding library. Graphs and embedding results live
//! behind opaque handles, every fallible call returns a [`TwStatus`], and the
//! most recent failure message is kept per thread for [`tw_last_error`].
//!
//! Strings returned through out-parameters are heap allocations owned by the
//! caller; release them with [`tw_string_free`]. Handles are released with
//! their matching `_free` function. All functions tolerate null handle
//! arguments by returning [`TwStatus::NullArgument`] rather than crashing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use twembed::cut::TauConfig;
use twembed::embed::{embed, verify_embedding, EmbedOptions, EmbeddingResult};
use twembed::gen;
use twembed::graph::WeightedGraph;
use twembed::rng::RandomSource;

/// Edge-weighted graph handle.
pub struct TwGraph(WeightedGraph);

/// Embedding outcome handle: host graph, tree decomposition, and run stats.
pub struct TwEmbedding(EmbeddingResult);

/// Result of every fallible call. Non-zero values leave a human-readable
/// message retrievable via `tw_last_error` on the same thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON or spec text could not be parsed.
    ParseFailed = 3,
    /// Graph construction, embedding, or verification machinery failed.
    BuildFailed = 4,
    /// Verification ran and found property violations.
    Violations = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn fail(status: TwStatus, msg: &str) -> TwStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> TwStatus) -> TwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TwStatus::Panic, "internal panic caught at the C boundary"),
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn tw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, TwStatus> {
    if ptr.is_null() {
        return Err(fail(TwStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(TwStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn write_string(text: String, out: *mut *mut c_char) -> TwStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(_) => return fail(TwStatus::BuildFailed, "output contained a NUL byte"),
    };
    unsafe { *out = c.into_raw() };
    TwStatus::Ok
}

/// Parse a graph from its JSON form.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to a writable
/// pointer slot. On `Ok` the slot owns a new handle; free it with
/// `tw_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_from_json(
    json: *const c_char,
    out: *mut *mut TwGraph,
) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return fail(TwStatus::NullArgument, "out pointer is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match serde_json::from_str::<WeightedGraph>(text) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(TwGraph(g)));
                TwStatus::Ok
            }
            Err(e) => fail(TwStatus::ParseFailed, &format!("bad graph JSON: {e}")),
        }
    })
}

/// Build a graph from a generator spec such as `grid:4,4,1` or
/// `random_planar:64`.
///
/// # Safety
/// `spec` must point to a NUL-terminated string and `out` to a writable
/// pointer slot. On `Ok` the slot owns a new handle; free it with
/// `tw_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_generate(
    spec: *const c_char,
    seed: u64,
    out: *mut *mut TwGraph,
) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return fail(TwStatus::NullArgument, "out pointer is null");
        }
        let text = match read_str(spec) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match gen::from_spec(text, seed) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(TwGraph(g)));
                TwStatus::Ok
            }
            Err(e) => fail(TwStatus::BuildFailed, &e.to_string()),
        }
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_n(g: *const TwGraph) -> usize {
    if g.is_null() {
        return 0;
    }
    (*g).0.n()
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_m(g: *const TwGraph) -> usize {
    if g.is_null() {
        return 0;
    }
    (*g).0.edges().len()
}

/// Serialize a graph to JSON.
///
/// # Safety
/// `g` must be a live handle and `out` a writable pointer slot. On `Ok` the
/// slot owns a new string; free it with `tw_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_to_json(g: *const TwGraph, out: *mut *mut c_char) -> TwStatus {
    guard(|| {
        if g.is_null() || out.is_null() {
            return fail(TwStatus::NullArgument, "graph or out pointer is null");
        }
        match serde_json::to_string(&(*g).0) {
            Ok(text) => write_string(text, out),
            Err(e) => fail(TwStatus::BuildFailed, &e.to_string()),
        }
    })
}

/// Release a graph handle. Null is a no-op.
///
/// # Safety
/// `g` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tw_graph_free(g: *mut TwGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string pointer returned by this library, not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn tw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Embed a graph into a low-treewidth host. The input is rescaled so its
/// smallest positive distance is 1 before embedding. `tau` of 0 derives the
/// cap from the sampled chain quality; any other value fixes it.
///
/// # Safety
/// `g` must be a live graph handle and `out` a writable pointer slot. On
/// `Ok` the slot owns a new handle; free it with `tw_embedding_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_embed(
    g: *const TwGraph,
    r: u32,
    psi: u32,
    tau: usize,
    tau_cap: usize,
    seed: u64,
    out: *mut *mut TwEmbedding,
) -> TwStatus {
    guard(|| {
        if g.is_null() || out.is_null() {
            return fail(TwStatus::NullArgument, "graph or out pointer is null");
        }
        let normalized = match (*g).0.normalize() {
            Ok((n, _)) => n,
            Err(e) => return fail(TwStatus::BuildFailed, &e.to_string()),
        };
        let opts = EmbedOptions {
            r,
            psi,
            tau: if tau == 0 {
                TauConfig::Auto { c_tau: 1.0 }
            } else {
                TauConfig::Fixed(tau)
            },
            tau_cap,
        };
        let mut rng = RandomSource::new(seed);
        match embed(&normalized, &opts, &mut rng) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(TwEmbedding(result)));
                TwStatus::Ok
            }
            Err(e) => fail(TwStatus::BuildFailed, &e.to_string()),
        }
    })
}

/// Parse an embedding result from the JSON produced by
/// `tw_embedding_to_json` (or the CLI artifact payload under `result`).
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to a writable
/// pointer slot. On `Ok` the slot owns a new handle; free it with
/// `tw_embedding_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_from_json(
    json: *const c_char,
    out: *mut *mut TwEmbedding,
) -> TwStatus {
    guard(|| {
        if out.is_null() {
            return fail(TwStatus::NullArgument, "out pointer is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match serde_json::from_str::<EmbeddingResult>(text) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(TwEmbedding(result)));
                TwStatus::Ok
            }
            Err(e) => fail(TwStatus::ParseFailed, &format!("bad embedding JSON: {e}")),
        }
    })
}

/// Serialize an embedding result to JSON.
///
/// # Safety
/// `e` must be a live handle and `out` a writable pointer slot. On `Ok` the
/// slot owns a new string; free it with `tw_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_to_json(
    e: *const TwEmbedding,
    out: *mut *mut c_char,
) -> TwStatus {
    guard(|| {
        if e.is_null() || out.is_null() {
            return fail(TwStatus::NullArgument, "embedding or out pointer is null");
        }
        match serde_json::to_string(&(*e).0) {
            Ok(text) => write_string(text, out),
            Err(err) => fail(TwStatus::BuildFailed, &err.to_string()),
        }
    })
}

/// Width of the host tree decomposition, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_width(e: *const TwEmbedding) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.stats.width
}

/// Deepest recursion level reached, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_depth(e: *const TwEmbedding) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.stats.depth
}

/// Separator cap the run settled on, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_tau(e: *const TwEmbedding) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.stats.tau
}

/// Check every definitional property of an embedding against its source
/// graph: decomposition validity, width bound, no contracted distance, depth
/// and potential accounting, boundary size. Returns `Ok` when clean,
/// `Violations` with the findings joined into the error message otherwise.
/// The graph is rescaled the same way `tw_embed` rescales it.
///
/// # Safety
/// `g` and `e` must be live handles from this library.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_verify(
    g: *const TwGraph,
    e: *const TwEmbedding,
) -> TwStatus {
    guard(|| {
        if g.is_null() || e.is_null() {
            return fail(TwStatus::NullArgument, "graph or embedding pointer is null");
        }
        let normalized = match (*g).0.normalize() {
            Ok((n, _)) => n,
            Err(err) => return fail(TwStatus::BuildFailed, &err.to_string()),
        };
        let result = &(*e).0;
        match verify_embedding(&normalized, result, result.stats.tau) {
            Ok(report) if report.is_empty() => TwStatus::Ok,
            Ok(report) => fail(TwStatus::Violations, &report.join("; ")),
            Err(err) => fail(TwStatus::BuildFailed, &err.to_string()),
        }
    })
}

/// Release an embedding handle. Null is a no-op.
///
/// # Safety
/// `e` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tw_embedding_free(e: *mut TwEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
