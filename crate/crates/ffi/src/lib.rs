//! C interface to `cdp-core`.
//!
//! Sequences and results are opaque heap handles released with their
//! `_free` function. Every call returns a [`CdpStatus`]; on failure
//! [`cdp_last_error_message`] describes the error on the calling thread.
//! Buffer getters take a capacity and always report the required length,
//! so a first call with a null buffer can be used to size the second.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cdp_core::dcsbm::{generate_sequence, ChangeType, Scenario, ScenarioSpec, ThetaMode};
use cdp_core::io::read_edge_list;
use cdp_core::nalgebra::DMatrix;
use cdp_core::pipeline::{run_method, CdpConfig, Method};
use cdp_core::spectral::DEFAULT_EPSILON;
use cdp_core::{CdpError, ScoreSeries, Snapshot};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input data violates a precondition (weights, symmetry, sizes).
    InvalidInput = 3,
    /// A snapshot or shape carries no information, e.g. an edgeless graph.
    Degenerate = 4,
    Io = 5,
    Parse = 6,
    /// No scores exist for the requested time index.
    OutOfRange = 7,
    /// The buffer is too small; the required length was still written.
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdpMethod {
    Cdp = 0,
    Act = 1,
    Actm = 2,
}

impl From<CdpMethod> for Method {
    fn from(m: CdpMethod) -> Self {
        match m {
            CdpMethod::Cdp => Method::Cdp,
            CdpMethod::Act => Method::Act,
            CdpMethod::Actm => Method::Actm,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CdpDetectOptions {
    pub method: CdpMethod,
    pub window: usize,
    pub epsilon: f64,
    pub threshold: f64,
    pub seed: u64,
}

/// Opaque snapshot sequence.
pub struct CdpSequence {
    n: usize,
    snapshots: Vec<Snapshot>,
    changed: Option<Vec<usize>>,
}

/// Opaque detection result.
pub struct CdpResult {
    series: ScoreSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &CdpError) -> CdpStatus {
    match err.root() {
        CdpError::InvalidWeight { .. }
        | CdpError::NotSymmetric { .. }
        | CdpError::NotSquare { .. }
        | CdpError::TooFewVertices { .. }
        | CdpError::ShapeMismatch { .. }
        | CdpError::DimensionError { .. }
        | CdpError::InvalidShape(_)
        | CdpError::InvalidProbability { .. } => CdpStatus::InvalidInput,
        CdpError::EmptyGraph | CdpError::DegenerateShape | CdpError::EmptyPartition | CdpError::Undefined => {
            CdpStatus::Degenerate
        }
        CdpError::UnknownModel(_) | CdpError::UnknownScenario(_) | CdpError::InvalidConfig(_) => {
            CdpStatus::InvalidArgument
        }
        CdpError::Format { .. } | CdpError::Json(_) => CdpStatus::Parse,
        CdpError::Io(_) => CdpStatus::Io,
        CdpError::AtTime { .. } => unreachable!("root strips time context"),
    }
}

fn fail(status: CdpStatus, msg: impl Into<String>) -> CdpStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), CdpStatus>) -> CdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(CdpStatus::Panic, "internal panic"),
    }
}

fn core_err(err: CdpError) -> CdpStatus {
    fail(status_of(&err), err.to_string())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, CdpStatus> {
    p.as_ref().ok_or_else(|| fail(CdpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, CdpStatus> {
    p.as_mut().ok_or_else(|| fail(CdpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, CdpStatus> {
    if p.is_null() {
        return Err(fail(CdpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CdpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies `src` into `buf` when it fits; always stores the length in `len`.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), CdpStatus> {
    *deref_mut(len, "len")? = src.len();
    if src.len() > cap || (buf.is_null() && !src.is_empty()) {
        return Err(fail(
            CdpStatus::BufferTooSmall,
            format!("need room for {} values, got {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

unsafe fn emit<T>(value: T, out: *mut *mut T) -> Result<(), CdpStatus> {
    *deref_mut(out, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cdp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cdp_detect_options_default() -> CdpDetectOptions {
    let c = CdpConfig::default();
    CdpDetectOptions {
        method: CdpMethod::Cdp,
        window: c.window,
        epsilon: DEFAULT_EPSILON,
        threshold: c.zscore_threshold,
        seed: c.seed,
    }
}

/// Empty sequence over `n` vertices.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_new(n: usize, out: *mut *mut CdpSequence) -> CdpStatus {
    guard(|| {
        if n < 2 {
            return Err(fail(CdpStatus::InvalidArgument, format!("need at least 2 vertices, got {n}")));
        }
        emit(
            CdpSequence {
                n,
                snapshots: Vec::new(),
                changed: None,
            },
            out,
        )
    })
}

/// Appends snapshot `t` from a row-major `n * n` weight array. Time indices
/// must increase.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_push_dense(
    seq: *mut CdpSequence,
    t: usize,
    weights: *const f64,
    len: usize,
) -> CdpStatus {
    guard(|| {
        let seq = deref_mut(seq, "sequence")?;
        let n = seq.n;
        if len != n * n {
            return Err(fail(CdpStatus::InvalidArgument, format!("expected {} weights, got {len}", n * n)));
        }
        if weights.is_null() {
            return Err(fail(CdpStatus::NullPointer, "weights is null"));
        }
        if let Some(last) = seq.snapshots.last() {
            if t <= last.t() {
                return Err(fail(
                    CdpStatus::InvalidArgument,
                    format!("time {t} does not follow {}", last.t()),
                ));
            }
        }
        let data = std::slice::from_raw_parts(weights, len);
        let snapshot = Snapshot::new(t, DMatrix::from_row_slice(n, n, data)).map_err(core_err)?;
        seq.snapshots.push(snapshot);
        Ok(())
    })
}

/// Reads an edge-list file. `n = 0` infers the vertex count.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_load_edge_list(
    path: *const c_char,
    n: usize,
    out: *mut *mut CdpSequence,
) -> CdpStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let snapshots = read_edge_list(Path::new(path), (n > 0).then_some(n)).map_err(core_err)?;
        let n = snapshots.first().map_or(n, Snapshot::n);
        emit(
            CdpSequence {
                n,
                snapshots,
                changed: None,
            },
            out,
        )
    })
}

/// Draws a reference scenario. `change_type` is `"point"` or `"interval"`
/// with the change starting at `change_time` (an interval runs to `t_len`);
/// `scale <= 0` keeps the full block sizes.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_simulate(
    scenario: *const c_char,
    change_type: *const c_char,
    t_len: usize,
    change_time: usize,
    scale: f64,
    seed: u64,
    out: *mut *mut CdpSequence,
) -> CdpStatus {
    guard(|| {
        let scenario: Scenario = c_str(scenario, "scenario")?.parse().map_err(core_err)?;
        let change = match c_str(change_type, "change_type")? {
            "point" => ChangeType::Point { t_star: change_time },
            "interval" => ChangeType::Interval {
                start: change_time,
                end: t_len,
            },
            other => return Err(fail(CdpStatus::InvalidArgument, format!("unknown change type `{other}`"))),
        };
        let scale = (scale > 0.0).then_some(scale);
        let spec = ScenarioSpec::catalog(scenario, change, t_len, scale).map_err(core_err)?;
        let seq = generate_sequence(&spec, seed, ThetaMode::Redraw).map_err(core_err)?;
        emit(
            CdpSequence {
                n: spec.n(),
                snapshots: seq.snapshots,
                changed: Some(seq.truth.changed),
            },
            out,
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_len(seq: *const CdpSequence, len: *mut usize) -> CdpStatus {
    guard(|| {
        let seq = deref(seq, "sequence")?;
        *deref_mut(len, "len")? = seq.snapshots.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_vertex_count(seq: *const CdpSequence, n: *mut usize) -> CdpStatus {
    guard(|| {
        let seq = deref(seq, "sequence")?;
        *deref_mut(n, "n")? = seq.n;
        Ok(())
    })
}

/// 0-based changed vertices of a simulated sequence.
#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_changed_vertices(
    seq: *const CdpSequence,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> CdpStatus {
    guard(|| {
        let seq = deref(seq, "sequence")?;
        let changed = seq
            .changed
            .as_ref()
            .ok_or_else(|| fail(CdpStatus::InvalidArgument, "sequence was not simulated"))?;
        copy_out(changed, buf, cap, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdp_sequence_free(seq: *mut CdpSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Scores every instant after the first `window`. Null `options` uses
/// [`cdp_detect_options_default`].
#[no_mangle]
pub unsafe extern "C" fn cdp_detect(
    seq: *const CdpSequence,
    options: *const CdpDetectOptions,
    out: *mut *mut CdpResult,
) -> CdpStatus {
    guard(|| {
        let seq = deref(seq, "sequence")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| cdp_detect_options_default());
        let config = CdpConfig {
            window: opts.window,
            epsilon_rank: opts.epsilon,
            zscore_threshold: opts.threshold,
            seed: opts.seed,
            ..CdpConfig::default()
        };
        let series = run_method(opts.method.into(), &seq.snapshots, &config).map_err(core_err)?;
        emit(CdpResult { series }, out)
    })
}

fn first_last(res: &CdpResult) -> Result<(usize, usize), CdpStatus> {
    let mut times = res.series.times();
    let first = times.next().ok_or_else(|| fail(CdpStatus::OutOfRange, "result is empty"))?;
    Ok((first, times.last().unwrap_or(first)))
}

/// First and last scored time index.
#[no_mangle]
pub unsafe extern "C" fn cdp_result_time_range(
    res: *const CdpResult,
    first_t: *mut usize,
    last_t: *mut usize,
) -> CdpStatus {
    guard(|| {
        let (a, b) = first_last(deref(res, "result")?)?;
        *deref_mut(first_t, "first_t")? = a;
        *deref_mut(last_t, "last_t")? = b;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdp_result_vertex_count(res: *const CdpResult, n: *mut usize) -> CdpStatus {
    guard(|| {
        let res = deref(res, "result")?;
        *deref_mut(n, "n")? = res.series.n;
        Ok(())
    })
}

fn at_time<T>(map: &std::collections::BTreeMap<usize, T>, t: usize) -> Result<&T, CdpStatus> {
    map.get(&t)
        .ok_or_else(|| fail(CdpStatus::OutOfRange, format!("no scores at t={t}")))
}

/// Raw change scores at `t`.
#[no_mangle]
pub unsafe extern "C" fn cdp_result_scores(
    res: *const CdpResult,
    t: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> CdpStatus {
    guard(|| {
        let res = deref(res, "result")?;
        copy_out(&at_time(&res.series.scores, t)?.z, buf, cap, len)
    })
}

/// Standardized scores at `t`.
#[no_mangle]
pub unsafe extern "C" fn cdp_result_zscores(
    res: *const CdpResult,
    t: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> CdpStatus {
    guard(|| {
        let res = deref(res, "result")?;
        copy_out(at_time(&res.series.zscores, t)?, buf, cap, len)
    })
}

/// Per-vertex 0/1 detection flags at `t`.
#[no_mangle]
pub unsafe extern "C" fn cdp_result_detected(
    res: *const CdpResult,
    t: usize,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> CdpStatus {
    guard(|| {
        let res = deref(res, "result")?;
        let mut flags = vec![0u8; res.series.n];
        for &v in at_time(&res.series.detections, t)? {
            flags[v] = 1;
        }
        copy_out(&flags, buf, cap, len)
    })
}

/// Embedding dimension chosen at `t`; CDP results only.
#[no_mangle]
pub unsafe extern "C" fn cdp_result_dim(res: *const CdpResult, t: usize, d: *mut usize) -> CdpStatus {
    guard(|| {
        let res = deref(res, "result")?;
        *deref_mut(d, "d")? = *at_time(&res.series.dims, t)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdp_result_free(res: *mut CdpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
