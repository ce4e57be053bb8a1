//! C ABI over `whitext`.
//!
//! Objects are opaque handles created by `wx_*_new`/`wx_*_build` style calls
//! and released with the matching `wx_*_free`. Every fallible call returns a
//! `WxStatus`; on failure the message is kept per thread and can be read with
//! `wx_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use whitext::error::Error;
use whitext::extension::{ExtensionOperator, ExtensionOptions};
use whitext::functionals::{Analysis, RadiusLadder, Space, SpaceParams, TableOptions};
use whitext::grid::{Grid, GridFunction};
use whitext::harness::{generate_function, render_report, run_verification, Config, Format, FunctionSpec};
use whitext::regular_set::{generate_set, RegularSet, SetSpec};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Compute = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// A uniform grid.
pub struct WxGrid(Grid);

/// A rasterized set with its regularity constants.
pub struct WxSet(RegularSet);

/// Values at every cell of a grid.
pub struct WxFunction(GridFunction);

/// An extension operator of fixed order.
pub struct WxExtension(ExtensionOperator);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> WxStatus {
    match e {
        Error::Config(_) | Error::Format(_) => WxStatus::Parse,
        Error::InvalidGrid(_) | Error::GridMismatch | Error::NonFinite(_) | Error::Inadmissible(_) => {
            WxStatus::InvalidArgument
        }
        _ => WxStatus::Compute,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (WxStatus, String)>) -> WxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WxStatus::Ok
        }
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            WxStatus::Panic
        }
    }
}

fn lib(e: Error) -> (WxStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WxStatus, String) {
    (WxStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (WxStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (WxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, (WxStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

fn json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, (WxStatus, String)> {
    serde_json::from_str(text).map_err(|e| (WxStatus::Parse, format!("{what}: {e}")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform grid on `[lo, hi]^n` with `cells` cells per axis.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wx_grid_new(n: usize, cells: usize, lo: f64, hi: f64, out: *mut *mut WxGrid) -> WxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = Grid::uniform(n, cells, lo, hi).map_err(lib)?;
        put(out, WxGrid(g));
        Ok(())
    })
}

/// # Safety
/// `g` must come from `wx_grid_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn wx_grid_free(g: *mut WxGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of cells; 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wx_grid_len(g: *const WxGrid) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Cell size; NaN for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wx_grid_h(g: *const WxGrid) -> f64 {
    g.as_ref().map_or(f64::NAN, |g| g.0.h())
}

/// Rasterizes a set spec given as JSON (`{"kind": "box", ...}`) and estimates
/// its regularity constants.
///
/// # Safety
/// Pointers must be valid; `spec_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wx_set_new(g: *const WxGrid, spec_json: *const c_char, out: *mut *mut WxSet) -> WxStatus {
    guard(|| {
        let g = obj(g, "grid")?;
        let spec: SetSpec = json(str_arg(spec_json, "spec_json")?, "set spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = generate_set(&spec, &g.0).map_err(lib)?;
        put(out, WxSet(s));
        Ok(())
    })
}

/// # Safety
/// `s` must come from `wx_set_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn wx_set_free(s: *mut WxSet) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of cells in the set; 0 for a null handle.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wx_set_len(s: *const WxSet) -> usize {
    s.as_ref().map_or(0, |s| s.0.cell_list().len())
}

/// Regularity constants `theta` and `delta`.
///
/// # Safety
/// `s` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wx_set_regularity(s: *const WxSet, theta: *mut f64, delta: *mut f64) -> WxStatus {
    guard(|| {
        let s = obj(s, "set")?;
        if theta.is_null() || delta.is_null() {
            return Err(null("output"));
        }
        *theta = s.0.theta;
        *delta = s.0.delta;
        Ok(())
    })
}

/// Function from `len` values in flat cell order; `len` must equal the cell
/// count.
///
/// # Safety
/// `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wx_function_new(
    g: *const WxGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut WxFunction,
) -> WxStatus {
    guard(|| {
        let g = obj(g, "grid")?;
        if values.is_null() || out.is_null() {
            return Err(null("values or out"));
        }
        if len != g.0.len() {
            return Err((WxStatus::InvalidArgument, format!("expected {} values, got {len}", g.0.len())));
        }
        let vals = std::slice::from_raw_parts(values, len).to_vec();
        let f = GridFunction::new(g.0, vals).map_err(lib)?;
        put(out, WxFunction(f));
        Ok(())
    })
}

/// Corpus function from a JSON spec (`{"kind": "sine", "lambda": 1.0}`),
/// sampled on the grid of `s`.
///
/// # Safety
/// Pointers must be valid; `spec_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wx_function_generate(
    s: *const WxSet,
    spec_json: *const c_char,
    out: *mut *mut WxFunction,
) -> WxStatus {
    guard(|| {
        let s = obj(s, "set")?;
        let spec: FunctionSpec = json(str_arg(spec_json, "spec_json")?, "function spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = generate_function(&spec, s.0.grid(), Some(&s.0)).map_err(lib)?;
        put(out, WxFunction(f));
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn wx_function_free(f: *mut WxFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Copies the values into `buf`, which holds `cap` doubles. `len` receives
/// the cell count; `BufferTooSmall` if `cap` is short.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wx_function_values(f: *const WxFunction, buf: *mut f64, cap: usize, len: *mut usize) -> WxStatus {
    guard(|| {
        let f = obj(f, "function")?;
        if len.is_null() {
            return Err(null("len"));
        }
        let vals = f.0.values();
        *len = vals.len();
        if cap < vals.len() {
            return Err((WxStatus::BufferTooSmall, format!("need {} doubles", vals.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), buf, vals.len());
        Ok(())
    })
}

/// Builds the order-`k` extension operator of `s`; `smoothness` is the bump
/// order (raised to at least `k`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wx_extension_new(
    s: *const WxSet,
    k: usize,
    smoothness: usize,
    out: *mut *mut WxExtension,
) -> WxStatus {
    guard(|| {
        let s = obj(s, "set")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if k == 0 || k > 4 {
            return Err((WxStatus::InvalidArgument, format!("order k = {k} outside 1..=4")));
        }
        let opts = ExtensionOptions { smoothness, ..ExtensionOptions::default() };
        let op = ExtensionOperator::build(&s.0, k, &opts).map_err(lib)?;
        put(out, WxExtension(op));
        Ok(())
    })
}

/// # Safety
/// `e` must come from `wx_extension_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn wx_extension_free(e: *mut WxExtension) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of Whitney cubes; 0 for a null handle.
///
/// # Safety
/// `e` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wx_extension_cube_count(e: *const WxExtension) -> usize {
    e.as_ref().map_or(0, |e| e.0.whitney.len())
}

/// Extends `f` (read on the set only) to the whole grid.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wx_extension_apply(
    e: *const WxExtension,
    f: *const WxFunction,
    out: *mut *mut WxFunction,
) -> WxStatus {
    guard(|| {
        let e = obj(e, "extension")?;
        let f = obj(f, "function")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = e.0.extend(&f.0).map_err(lib)?;
        put(out, WxFunction(x));
        Ok(())
    })
}

/// Intrinsic functional of `f` on `s` for `space` in
/// `{"sobolev", "tl", "besov"}` and parameters `(s, k, p, q, u)`; pass
/// `INFINITY` for infinite exponents.
///
/// # Safety
/// Pointers must be valid; `space` NUL-terminated.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wx_trace_norm(
    f: *const WxFunction,
    s: *const WxSet,
    space: *const c_char,
    smooth: f64,
    k: usize,
    p: f64,
    q: f64,
    u: f64,
    value: *mut f64,
) -> WxStatus {
    guard(|| {
        let f = obj(f, "function")?;
        let set = obj(s, "set")?;
        let space: Space = str_arg(space, "space")?.parse().map_err(lib)?;
        if value.is_null() {
            return Err(null("value"));
        }
        if f.0.grid() != set.0.grid() {
            return Err(lib(Error::GridMismatch));
        }
        let v = SpaceParams::new(smooth, k, p, q, u);
        let ladder = RadiusLadder::for_grid(set.0.grid());
        let mut a = Analysis::new(f.0.clone(), Some(set.0.cells.clone()), ladder, TableOptions::default());
        *value = a.trace_norm(space, &v).map_err(lib)?.value;
        Ok(())
    })
}

/// Runs the verification harness on a TOML config and returns the JSON
/// report in `*report` (release with `wx_string_free`). `*failed` receives
/// the number of failed checks.
///
/// # Safety
/// Pointers must be valid; `config_toml` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wx_verify(config_toml: *const c_char, report: *mut *mut c_char, failed: *mut usize) -> WxStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        if report.is_null() || failed.is_null() {
            return Err(null("output"));
        }
        let cfg = Config::from_toml(text).map_err(lib)?;
        let r = run_verification(&cfg);
        let bytes = render_report(&r, Format::Json).map_err(lib)?;
        let s = CString::new(bytes).map_err(|_| (WxStatus::Compute, "report contains NUL".to_string()))?;
        *failed = r.iter().filter(|c| !c.passed()).count();
        *report = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn wx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
