//! C ABI over `netdesign`.
//!
//! Every function returns an [`NdStatus`]; results come back through out
//! pointers. Objects are opaque handles released with the matching
//! `*_free` function. Strings returned by the library are released with
//! [`nd_string_free`]. After a failure, [`nd_last_error`] describes it until
//! the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use netdesign::design::{rds_log_likelihood, run_design, DesignSpec, SampleTrace};
use netdesign::evaluation::entropy_er;
use netdesign::experiment::{parse_config_str, run_experiment, EvaluationReport, ExperimentConfig};
use netdesign::graph::Graph;
use netdesign::mrf::ResponseVector;
use netdesign::rng::stream;
use netdesign::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parameter = 3,
    Size = 4,
    Consistency = 5,
    Infeasible = 6,
    Data = 7,
    Structure = 8,
    Config = 9,
    Lookup = 10,
    Parse = 11,
    Io = 12,
    Json = 13,
    Panic = 14,
}

impl From<&Error> for NdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter(_) => NdStatus::Parameter,
            Error::Size(_) => NdStatus::Size,
            Error::Consistency(_) => NdStatus::Consistency,
            Error::Infeasible(_) => NdStatus::Infeasible,
            Error::Data(_) => NdStatus::Data,
            Error::Structure(_) => NdStatus::Structure,
            Error::Config(_) => NdStatus::Config,
            Error::Lookup(_) => NdStatus::Lookup,
            Error::Parse(_) => NdStatus::Parse,
            Error::Io(_) => NdStatus::Io,
            Error::Json(_) => NdStatus::Json,
        }
    }
}

/// Undirected simple graph.
pub struct NdGraph(Graph);

/// Parsed and validated experiment configuration.
pub struct NdConfig(ExperimentConfig);

/// Result of a finished experiment.
pub struct NdReport(EvaluationReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(NdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(NdStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NdStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            NdStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(NdStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| Fail(NdStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn into_c(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail(NdStatus::Data, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread; empty after a success.
/// Owned by the library and valid until the next call.
#[no_mangle]
pub extern "C" fn nd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a graph on `n` nodes from `n_edges` pairs stored flat in `edges`.
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable values (or be null when
/// `n_edges` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_graph_new(n: usize, edges: *const usize, n_edges: usize, out: *mut *mut NdGraph) -> NdStatus {
    guard(|| {
        non_null(out, "out")?;
        let pairs: Vec<(usize, usize)> = if n_edges == 0 {
            Vec::new()
        } else {
            non_null(edges, "edges")?;
            std::slice::from_raw_parts(edges, 2 * n_edges).chunks(2).map(|c| (c[0], c[1])).collect()
        };
        let g = Graph::from_edges(n, &pairs)?;
        *out = Box::into_raw(Box::new(NdGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`nd_graph_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nd_graph_free(g: *mut NdGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle and `n_nodes`, `n_edges` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_graph_size(g: *const NdGraph, n_nodes: *mut usize, n_edges: *mut usize) -> NdStatus {
    guard(|| {
        non_null(g, "graph")?;
        non_null(n_nodes, "n_nodes")?;
        non_null(n_edges, "n_edges")?;
        *n_nodes = (*g).0.n_nodes();
        *n_edges = (*g).0.n_edges();
        Ok(())
    })
}

/// Runs the design described by `design_json` on the graph with all
/// responses zero, using `seed`, and returns the trace as JSON.
///
/// # Safety
/// `g` must be a live graph handle, `design_json` a NUL-terminated string
/// and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_sample_trace(
    g: *const NdGraph,
    design_json: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> NdStatus {
    guard(|| {
        non_null(g, "graph")?;
        non_null(out_json, "out_json")?;
        let design: DesignSpec = serde_json::from_str(read_str(design_json, "design_json")?).map_err(Error::from)?;
        let g = &(*g).0;
        design.validate(g.n_nodes())?;
        let t = run_design(&design, g, &ResponseVector::zeros(g.n_nodes()), &mut stream(seed, &[]))?;
        *out_json = into_c(t.to_json())?;
        Ok(())
    })
}

/// Exact log-probability of a JSON trace on the graph under its design.
///
/// # Safety
/// `g` must be a live graph handle, `trace_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_trace_log_likelihood(g: *const NdGraph, trace_json: *const c_char, out: *mut f64) -> NdStatus {
    guard(|| {
        non_null(g, "graph")?;
        non_null(out, "out")?;
        let t = SampleTrace::from_json(read_str(trace_json, "trace_json")?)?;
        *out = rds_log_likelihood(&t, &(*g).0, &t.design)?;
        Ok(())
    })
}

/// Entropy in nats of an Erdős–Rényi graph on `n` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nd_entropy_er(n: usize, alpha: f64, out: *mut f64) -> NdStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = entropy_er(n, alpha)?;
        Ok(())
    })
}

/// Parses and validates a TOML experiment configuration. On
/// [`NdStatus::Config`] the message lists every problem, separated by `; `.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_config_parse(toml: *const c_char, out: *mut *mut NdConfig) -> NdStatus {
    guard(|| {
        non_null(out, "out")?;
        let cfg = parse_config_str(read_str(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(NdConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `c` must come from [`nd_config_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nd_config_free(c: *mut NdConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Overrides the master seed.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn nd_config_set_seed(c: *mut NdConfig, seed: u64) -> NdStatus {
    guard(|| {
        non_null(c, "config")?;
        (*c).0.seed = seed;
        Ok(())
    })
}

/// Run id (`kind-` and twelve hex digits of the config hash).
///
/// # Safety
/// `c` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_config_run_id(c: *const NdConfig, out: *mut *mut c_char) -> NdStatus {
    guard(|| {
        non_null(c, "config")?;
        non_null(out, "out")?;
        *out = into_c((*c).0.run_id())?;
        Ok(())
    })
}

/// Runs the experiment, writing its artifacts under `out_dir`.
///
/// # Safety
/// `c` must be a live configuration handle, `out_dir` a NUL-terminated
/// path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_run_experiment(c: *const NdConfig, out_dir: *const c_char, out: *mut *mut NdReport) -> NdStatus {
    guard(|| {
        non_null(c, "config")?;
        non_null(out, "out")?;
        let dir = read_str(out_dir, "out_dir")?;
        let rep = run_experiment(&(*c).0, Path::new(dir))?;
        *out = Box::into_raw(Box::new(NdReport(rep)));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`nd_run_experiment`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nd_report_free(r: *mut NdReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of design rows in the report.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_report_rows(r: *const NdReport, out: *mut usize) -> NdStatus {
    guard(|| {
        non_null(r, "report")?;
        non_null(out, "out")?;
        *out = (*r).0.rows.len();
        Ok(())
    })
}

/// Mean and standard error of the first criterion of row `i`.
///
/// # Safety
/// `r` must be a live report handle; `mean` and `se` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_report_score(r: *const NdReport, i: usize, mean: *mut f64, se: *mut f64) -> NdStatus {
    guard(|| {
        non_null(r, "report")?;
        non_null(mean, "mean")?;
        non_null(se, "se")?;
        let rows = &(*r).0.rows;
        let row = rows.get(i).ok_or_else(|| Fail(NdStatus::Lookup, format!("no row {i}")))?;
        let m = row.metrics.first().ok_or_else(|| Fail(NdStatus::Data, format!("row {i} has no score")))?;
        *mean = m.value.mean;
        *se = m.value.se;
        Ok(())
    })
}

/// Whole report as JSON.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nd_report_json(r: *const NdReport, out: *mut *mut c_char) -> NdStatus {
    guard(|| {
        non_null(r, "report")?;
        non_null(out, "out")?;
        *out = into_c(serde_json::to_string(&(*r).0).map_err(Error::from)?)?;
        Ok(())
    })
}
