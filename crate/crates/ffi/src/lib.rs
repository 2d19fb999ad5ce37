//! C ABI over the `lissscan` library.
//!
//! Objects cross the boundary as opaque handles created by `ls_*_new`-style
//! calls and released with the matching `ls_*_free`. Every fallible call
//! returns an [`LsStatus`]; on failure a message is kept per thread and read
//! with [`ls_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lissscan::coverage::{fill_factor_on_grid, scanning_range};
use lissscan::design::{baseline_repeating_design, design_unmodulated, DesignCase, UnmodulatedDesign};
use lissscan::modulated::{
    optimize, synthesize_modulated, Constraint, ModulatedParams, OptimizeOptions, OptimizeResult, Rect, StepRule,
    WeightMap,
};
use lissscan::pattern::{sample_unmodulated, SampledPattern};
use lissscan::phase::{solve_multitone, MultitoneSamples};
use lissscan::scanner::ScannerConfig;
use lissscan::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoFeasibleDesign = 3,
    DegeneratePattern = 4,
    InvalidParams = 5,
    OptimizationFailed = 6,
    UndefinedPhase = 7,
    IllConditioned = 8,
    NonSquare = 9,
    Ingest = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for LsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => LsStatus::InvalidArgument,
            Error::NoFeasibleDesign { .. } => LsStatus::NoFeasibleDesign,
            Error::DegeneratePattern { .. } => LsStatus::DegeneratePattern,
            Error::InvalidParams(_) => LsStatus::InvalidParams,
            Error::OptimizationFailed { .. } => LsStatus::OptimizationFailed,
            Error::UndefinedPhase => LsStatus::UndefinedPhase,
            Error::IllConditioned { .. } => LsStatus::IllConditioned,
            Error::NonSquare { .. } => LsStatus::NonSquare,
            Error::Ingest(_) | Error::Json(_) | Error::Csv(_) => LsStatus::Ingest,
            Error::Io(_) => LsStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsRule {
    Proposed = 0,
    Baseline = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsCase {
    Case1 = 1,
    Case2 = 2,
    Case3 = 3,
    Baseline = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsConstraint {
    Rms = 0,
    Absolute = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStepRule {
    Exact = 0,
    Fixed = 1,
}

/// Resonances and quality factors. Normalized configs use `fy_res = 1`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsScannerConfig {
    pub fx_res: f64,
    pub fy_res: f64,
    pub qx: f64,
    pub qy: f64,
}

impl From<LsScannerConfig> for ScannerConfig {
    fn from(c: LsScannerConfig) -> Self {
        ScannerConfig {
            fx_res: c.fx_res,
            fy_res: c.fy_res,
            qx: c.qx,
            qy: c.qy,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsDesignInfo {
    pub fx_num: i64,
    pub fx_den: i64,
    pub phix: f64,
    pub phiy: f64,
    pub design_case: LsCase,
    pub k: i64,
    pub m: u32,
    pub near_integer_ratio: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsRect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Optimizer settings. A `threshold` of zero or less selects the default
/// occupancy radius.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptimizeOptions {
    pub max_iters: usize,
    pub step: f64,
    pub step_rule: LsStepRule,
    pub max_halvings: u32,
    pub threshold: f64,
    pub n_samples: usize,
    pub rel_tol: f64,
    pub stall_window: usize,
}

impl From<LsOptimizeOptions> for OptimizeOptions {
    fn from(o: LsOptimizeOptions) -> Self {
        OptimizeOptions {
            max_iters: o.max_iters,
            step: o.step,
            step_rule: match o.step_rule {
                LsStepRule::Exact => StepRule::Exact,
                LsStepRule::Fixed => StepRule::Fixed,
            },
            max_halvings: o.max_halvings,
            threshold: (o.threshold > 0.0).then_some(o.threshold),
            n_samples: o.n_samples,
            rel_tol: o.rel_tol,
            stall_window: o.stall_window,
        }
    }
}

/// Recovered amplitudes and phases of a three-tone quadrature signal.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LsMultitone {
    pub amps: [f64; 3],
    pub phases: [f64; 3],
}

pub struct LsDesign(UnmodulatedDesign);
pub struct LsPattern(SampledPattern);
pub struct LsWeightMap(WeightMap);
pub struct LsParams(ModulatedParams);
pub struct LsOptimizeResult(OptimizeResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(LsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(LsStatus::from(&e), format!("{}: {e}", e.kind()))
    }
}

fn null(what: &str) -> Fail {
    Fail(LsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(LsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            LsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or null. Every call
/// returning an [`LsStatus`] replaces it.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Unmodulated design for frequency ratio `r` and frame length `m`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ls_design_new(r: f64, m: u32, rule: LsRule, out: *mut *mut LsDesign) -> LsStatus {
    guard(|| {
        let d = match rule {
            LsRule::Proposed => design_unmodulated(r, m)?,
            LsRule::Baseline => baseline_repeating_design(r, m)?,
        };
        put(out, LsDesign(d))
    })
}

/// # Safety
/// `design` must come from [`ls_design_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_design_info(design: *const LsDesign, out: *mut LsDesignInfo) -> LsStatus {
    guard(|| {
        let d = &deref(design, "design")?.0;
        let info = LsDesignInfo {
            fx_num: *d.fx.numer(),
            fx_den: *d.fx.denom(),
            phix: d.phix,
            phiy: d.phiy,
            design_case: match d.case {
                DesignCase::Case1 => LsCase::Case1,
                DesignCase::Case2 => LsCase::Case2,
                DesignCase::Case3 => LsCase::Case3,
                DesignCase::Baseline => LsCase::Baseline,
            },
            k: d.k,
            m: d.m,
            near_integer_ratio: d.near_integer_ratio,
        };
        write(out, info)
    })
}

/// `Hx * Hy` at the design's drive frequencies.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_scanning_range(
    design: *const LsDesign,
    config: *const LsScannerConfig,
    out: *mut f64,
) -> LsStatus {
    guard(|| {
        let d = &deref(design, "design")?.0;
        let c: ScannerConfig = (*deref(config, "config")?).into();
        write(out, scanning_range(d, &c)?)
    })
}

/// # Safety
/// `design` must come from [`ls_design_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ls_design_free(design: *mut LsDesign) {
    free(design)
}

/// Samples frame `frame` of a design with `n` points.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_pattern_sample(
    design: *const LsDesign,
    config: *const LsScannerConfig,
    frame: u32,
    n: usize,
    out: *mut *mut LsPattern,
) -> LsStatus {
    guard(|| {
        let d = &deref(design, "design")?.0;
        let c: ScannerConfig = (*deref(config, "config")?).into();
        put(out, LsPattern(sample_unmodulated(d, &c, frame, n)?))
    })
}

/// Pattern from caller-owned samples. `frame_len` is in y-cycles.
///
/// # Safety
/// `t`, `x` and `y` must each hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_pattern_new(
    t: *const f64,
    x: *const f64,
    y: *const f64,
    len: usize,
    frame_len: u32,
    frames: u32,
    out: *mut *mut LsPattern,
) -> LsStatus {
    guard(|| {
        let (t, x, y) = (slice(t, len, "t")?, slice(x, len, "x")?, slice(y, len, "y")?);
        let p = SampledPattern::new(t.to_vec(), x.to_vec(), y.to_vec(), frame_len, frames)?;
        put(out, LsPattern(p))
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `pattern` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_pattern_len(pattern: *const LsPattern) -> usize {
    pattern.as_ref().map_or(0, |p| p.0.len())
}

/// Copies up to `cap` samples into each non-null buffer.
///
/// # Safety
/// Each non-null buffer must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_pattern_copy(
    pattern: *const LsPattern,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
    cap: usize,
) -> LsStatus {
    guard(|| {
        let p = &deref(pattern, "pattern")?.0;
        let n = p.len().min(cap);
        for (dst, src) in [(t, &p.t), (x, &p.x), (y, &p.y)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// Fill-factor on a `grid` x `grid` lattice of patch centers; `r_max` may be null.
///
/// # Safety
/// `pattern` must be live; `fill` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_fill_factor(
    pattern: *const LsPattern,
    grid: usize,
    fill: *mut f64,
    r_max: *mut f64,
) -> LsStatus {
    guard(|| {
        let p = &deref(pattern, "pattern")?.0;
        let report = fill_factor_on_grid(p, grid)?;
        write(fill, report.fill_factor)?;
        if !r_max.is_null() {
            *r_max = report.r_max;
        }
        Ok(())
    })
}

/// # Safety
/// `pattern` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_pattern_free(pattern: *mut LsPattern) {
    free(pattern)
}

/// Weight map from `m * m` row-major weights, row 0 at `y = -1`.
///
/// # Safety
/// `w` must hold `m * m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_weight_map_new(w: *const f64, m: usize, out: *mut *mut LsWeightMap) -> LsStatus {
    guard(|| {
        let len = m.checked_mul(m).ok_or_else(|| invalid("m is too large"))?;
        let w = slice(w, len, "w")?;
        put(out, LsWeightMap(WeightMap::new(m, w.to_vec())?))
    })
}

/// Weight map on an `m` x `m` grid covering the given rectangles.
///
/// # Safety
/// `rects` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_weight_map_from_rects(
    rects: *const LsRect,
    n: usize,
    m: usize,
    out: *mut *mut LsWeightMap,
) -> LsStatus {
    guard(|| {
        let raw: &[LsRect] = if n == 0 {
            &[]
        } else if rects.is_null() {
            return Err(null("rects"));
        } else {
            std::slice::from_raw_parts(rects, n)
        };
        let rects = raw
            .iter()
            .map(|r| Rect::new(r.x0, r.x1, r.y0, r.y1))
            .collect::<Result<Vec<_>, _>>()?;
        put(out, LsWeightMap(WeightMap::from_rects(&rects, m)?))
    })
}

/// Weight map from a PGM or CSV grid file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_weight_map_load(path: *const c_char, out: *mut *mut LsWeightMap) -> LsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        put(out, LsWeightMap(lissscan::io::load_weight_map(Path::new(path))?))
    })
}

/// # Safety
/// `map` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_weight_map_free(map: *mut LsWeightMap) {
    free(map)
}

/// Seeded random initial parameters on the unit constraint surface.
/// Tone frequencies are in units of `config.fy_res`.
///
/// # Safety
/// Frequency arrays must hold `nx` and `ny` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_params_random(
    x_freqs: *const f64,
    nx: usize,
    y_freqs: *const f64,
    ny: usize,
    l: u32,
    m: u32,
    config: *const LsScannerConfig,
    constraint: LsConstraint,
    seed: u64,
    out: *mut *mut LsParams,
) -> LsStatus {
    guard(|| {
        let xf = slice(x_freqs, nx, "x_freqs")?.to_vec();
        let yf = slice(y_freqs, ny, "y_freqs")?.to_vec();
        let c: ScannerConfig = (*deref(config, "config")?).into();
        let mut p = ModulatedParams::random(xf, yf, l, m, c, seed);
        p.constraint = match constraint {
            LsConstraint::Rms => Constraint::Rms,
            LsConstraint::Absolute => Constraint::Absolute,
        };
        p.project();
        p.validate()?;
        put(out, LsParams(p))
    })
}

/// Samples `n` points over the parameters' window.
///
/// # Safety
/// `params` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_params_synthesize(params: *const LsParams, n: usize, out: *mut *mut LsPattern) -> LsStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        put(out, LsPattern(synthesize_modulated(p, n)?))
    })
}

/// # Safety
/// `params` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_params_free(params: *mut LsParams) {
    free(params)
}

#[no_mangle]
pub extern "C" fn ls_optimize_options_default() -> LsOptimizeOptions {
    let d = OptimizeOptions::default();
    LsOptimizeOptions {
        max_iters: d.max_iters,
        step: d.step,
        step_rule: match d.step_rule {
            StepRule::Exact => LsStepRule::Exact,
            StepRule::Fixed => LsStepRule::Fixed,
        },
        max_halvings: d.max_halvings,
        threshold: d.threshold.unwrap_or(0.0),
        n_samples: d.n_samples,
        rel_tol: d.rel_tol,
        stall_window: d.stall_window,
    }
}

/// Projected gradient descent from `init`; `options` may be null for defaults.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize(
    init: *const LsParams,
    map: *const LsWeightMap,
    options: *const LsOptimizeOptions,
    out: *mut *mut LsOptimizeResult,
) -> LsStatus {
    guard(|| {
        let init = &deref(init, "init")?.0;
        let map = &deref(map, "map")?.0;
        let opts = options.as_ref().map_or_else(OptimizeOptions::default, |o| (*o).into());
        put(out, LsOptimizeResult(optimize(init, map, &opts)?))
    })
}

/// Loss of the best iterate, or NaN for a null handle.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_loss(result: *const LsOptimizeResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.loss)
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_iterations(result: *const LsOptimizeResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_converged(result: *const LsOptimizeResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// Length of the loss trace (initial point included).
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_trace_len(result: *const LsOptimizeResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.trace.len())
}

/// Copies up to `cap` trace entries into `buf`.
///
/// # Safety
/// `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_trace(
    result: *const LsOptimizeResult,
    buf: *mut f64,
    cap: usize,
) -> LsStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let n = r.trace.len().min(cap);
        if n > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(r.trace.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// New handle holding a copy of the best parameters.
///
/// # Safety
/// `result` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_params(
    result: *const LsOptimizeResult,
    out: *mut *mut LsParams,
) -> LsStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        put(out, LsParams(r.params.clone()))
    })
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_optimize_result_free(result: *mut LsOptimizeResult) {
    free(result)
}

/// Recovers three tone amplitudes and phases from quadrature samples taken
/// at `0`, `T/2` and `T`.
///
/// # Safety
/// `x`, `xq` and `omegas` must each hold 3 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_solve_multitone(
    x: *const f64,
    xq: *const f64,
    omegas: *const f64,
    frame_time: f64,
    out: *mut LsMultitone,
) -> LsStatus {
    guard(|| {
        let arr = |p: *const f64, what: &str| -> Result<[f64; 3], Fail> {
            let s = slice(p, 3, what)?;
            Ok([s[0], s[1], s[2]])
        };
        let samples = MultitoneSamples {
            x: arr(x, "x")?,
            xq: arr(xq, "xq")?,
        };
        let state = solve_multitone(&samples, arr(omegas, "omegas")?, frame_time)?;
        let mut res = LsMultitone::default();
        for i in 0..3 {
            res.amps[i] = state.amps[i];
            res.phases[i] = state.phases[i];
        }
        write(out, res)
    })
}
