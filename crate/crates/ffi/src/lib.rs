//! C ABI over `idecomp`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`/
//! `*_decompose` calls and released with the matching `*_free`. Every
//! fallible call returns an [`IdecompStatus`]; on failure the message is
//! available from [`idecomp_last_error`] on the same thread until the next
//! failing call. Panics never unwind into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use idecomp::admm::{admm_solve, E2Mode, ModelParams, StoppingRule};
use idecomp::ops::make_diff_bank;
use idecomp::unroll::{idnet_forward, load_bundle, save_bundle, ParameterBundle};
use idecomp::{Error, Grid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdecompStatus {
    Ok = 0,
    NullPointer = 1,
    Argument = 2,
    Validation = 3,
    Shape = 4,
    Numerical = 5,
    Divergence = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

/// Dense row-major `height x width` grid of doubles.
pub struct IdecompGrid(Grid);

/// Per-layer parameter bundle of the unrolled network.
pub struct IdecompBundle(ParameterBundle);

/// Output of a decomposition: the two layers and the objective per iteration/layer.
pub struct IdecompResult {
    u: IdecompGrid,
    v: IdecompGrid,
    objective: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IdecompStatus {
    match e {
        Error::Shape { .. } => IdecompStatus::Shape,
        Error::Argument(_) => IdecompStatus::Argument,
        Error::Validation { .. } => IdecompStatus::Validation,
        Error::Numerical(_) => IdecompStatus::Numerical,
        Error::Divergence { .. } => IdecompStatus::Divergence,
        Error::Parse { .. } => IdecompStatus::Parse,
        Error::Io { .. } => IdecompStatus::Io,
        Error::Channel { source, .. } => status_of(source),
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IdecompStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IdecompStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for `{what}`"));
            IdecompStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            IdecompStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Lib(Error::Argument("path is not valid UTF-8".into())))
}

/// Message of the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn idecomp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn idecomp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `height * width` row-major values into a new grid.
///
/// # Safety
/// `data` must point to `height * width` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn idecomp_grid_new(
    height: usize,
    width: usize,
    data: *const f64,
    out: *mut *mut IdecompGrid,
) -> IdecompStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let len = height
            .checked_mul(width)
            .ok_or_else(|| Error::Argument("grid size overflows".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        put(out, IdecompGrid(Grid::from_vec(height, width, values)?))
    })
}

/// # Safety
/// `grid` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idecomp_grid_free(grid: *mut IdecompGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_grid_height(grid: *const IdecompGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.dims().0)
}

/// # Safety
/// `grid` must be a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_grid_width(grid: *const IdecompGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.dims().1)
}

/// Copies the row-major values into `dest`, which must hold `len` doubles;
/// `len` must equal height * width.
///
/// # Safety
/// `grid` must be a live grid handle and `dest` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn idecomp_grid_copy(grid: *const IdecompGrid, dest: *mut f64, len: usize) -> IdecompStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        if dest.is_null() {
            return Err(Failure::Null("dest"));
        }
        let src = g.0.as_slice();
        if len != src.len() {
            return Err(Error::Argument(format!("buffer holds {len} values, grid has {}", src.len())).into());
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dest, len);
        Ok(())
    })
}

/// Runs the iterative solver with the `diff:M,R` kernel bank, where `M` is
/// `n_alphas`. `paper_e2` selects the uncorrected v-block coefficient.
///
/// # Safety
/// `image` must be a live grid handle, `alphas` must point to `n_alphas`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn idecomp_admm_decompose(
    image: *const IdecompGrid,
    alphas: *const f64,
    n_alphas: usize,
    radius: usize,
    beta: f64,
    r_p: f64,
    r_q: f64,
    paper_e2: bool,
    max_iters: usize,
    out: *mut *mut IdecompResult,
) -> IdecompStatus {
    guard(|| {
        let f = deref(image, "image")?;
        if alphas.is_null() {
            return Err(Failure::Null("alphas"));
        }
        let alphas = std::slice::from_raw_parts(alphas, n_alphas).to_vec();
        let bank = make_diff_bank(n_alphas, radius)?;
        let mode = if paper_e2 { E2Mode::Paper } else { E2Mode::Corrected };
        let params = ModelParams::new(alphas, beta, r_p, r_q)?.with_e2_mode(mode);
        let res = admm_solve(&f.0, &bank, &params, StoppingRule::iterations(max_iters))?;
        put(
            out,
            IdecompResult {
                u: IdecompGrid(res.u),
                v: IdecompGrid(res.v),
                objective: res.objective_trace,
            },
        )
    })
}

/// Forward pass of the unrolled network.
///
/// # Safety
/// `image` and `bundle` must be live handles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn idecomp_unroll_forward(
    image: *const IdecompGrid,
    bundle: *const IdecompBundle,
    out: *mut *mut IdecompResult,
) -> IdecompStatus {
    guard(|| {
        let f = deref(image, "image")?;
        let b = deref(bundle, "bundle")?;
        let res = idnet_forward(&f.0, &b.0, true)?;
        let objective = res
            .trace
            .map(|t| t.layers.iter().map(|s| s.objective).collect())
            .unwrap_or_default();
        put(
            out,
            IdecompResult {
                u: IdecompGrid(res.u),
                v: IdecompGrid(res.v),
                objective,
            },
        )
    })
}

/// Borrowed view of the smooth layer; valid while `result` lives.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_result_u(result: *const IdecompResult) -> *const IdecompGrid {
    result.as_ref().map_or(ptr::null(), |r| &r.u)
}

/// Borrowed view of the feature layer; valid while `result` lives.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_result_v(result: *const IdecompResult) -> *const IdecompGrid {
    result.as_ref().map_or(ptr::null(), |r| &r.v)
}

/// Number of iterations (solver) or layers (network) that ran.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_result_steps(result: *const IdecompResult) -> usize {
    result.as_ref().map_or(0, |r| r.objective.len())
}

/// Objective after step `index` (0-based), or NaN when out of range.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_result_objective(result: *const IdecompResult, index: usize) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.objective.get(index).copied())
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `result` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idecomp_result_free(result: *mut IdecompResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Default bundle with `width` kernels per layer, `depth` layers and kernel radius `radius`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_init_default(
    width: usize,
    depth: usize,
    radius: usize,
    out: *mut *mut IdecompBundle,
) -> IdecompStatus {
    guard(|| put(out, IdecompBundle(ParameterBundle::init_default(width, depth, radius)?)))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_load(path: *const c_char, out: *mut *mut IdecompBundle) -> IdecompStatus {
    guard(|| {
        let path = path_arg(path)?;
        put(out, IdecompBundle(load_bundle(path)?))
    })
}

/// # Safety
/// `bundle` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_save(bundle: *const IdecompBundle, path: *const c_char) -> IdecompStatus {
    guard(|| {
        let b = deref(bundle, "bundle")?;
        let path = path_arg(path)?;
        save_bundle(&b.0, path)?;
        Ok(())
    })
}

/// Number of layers.
///
/// # Safety
/// `bundle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_depth(bundle: *const IdecompBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.0.depth())
}

/// Kernels per layer.
///
/// # Safety
/// `bundle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_width(bundle: *const IdecompBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.0.width())
}

/// # Safety
/// `bundle` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idecomp_bundle_free(bundle: *mut IdecompBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}
