//! C ABI over the `logconcave` crate.
//!
//! Every function returns an `LcStatus`. Results are written through out
//! pointers. On failure `lc_last_error_message` describes the error raised
//! on the calling thread. Handles are opaque; free them with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use logconcave::mcmc::{run_chain, Chain, ChainConfig};
use logconcave::mle::{logconcave_mle, MleOptions};
use logconcave::summaries::band_from_chain;
use logconcave::{hellinger, Error, HellingerOptions, NormalizedDensity, PiecewiseLinearFn};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericError = 4,
    Panic = 5,
}

/// A normalised log-concave density with a piecewise linear log.
pub struct LcDensity(NormalizedDensity);

/// A posterior chain together with its evaluation grid.
pub struct LcChain(Chain);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> LcStatus {
    match err {
        Error::Config(_) | Error::Validation { .. } => LcStatus::InvalidArgument,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) => LcStatus::DataError,
        Error::Numeric(_) => LcStatus::NumericError,
    }
}

struct Fail(LcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside logconcave");
            LcStatus::Panic
        }
    }
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

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(LcStatus::InvalidArgument, msg.into())
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL.
#[no_mangle]
pub extern "C" fn lc_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` as a NUL-terminated string,
/// truncating to `len - 1` bytes. Returns the number of bytes copied
/// without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let n = e.len().min(len - 1);
        ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Builds the density proportional to `exp(w)`, where `w` interpolates
/// `(x[i], y[i])` linearly. `w` must be concave and `x` strictly increasing.
///
/// # Safety
/// `x` and `y` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_density_from_plf(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut *mut LcDensity,
) -> LcStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let y = slice(y, len, "y")?;
        let w = PiecewiseLinearFn::new_concave(x.to_vec(), y.to_vec())?;
        let handle = Box::into_raw(Box::new(LcDensity(NormalizedDensity::new(w))));
        write(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Log-concave maximum likelihood estimate from `len` observations.
///
/// # Safety
/// `data` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_mle(data: *const f64, len: usize, out: *mut *mut LcDensity) -> LcStatus {
    guard(|| {
        let data = slice(data, len, "data")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = logconcave_mle(data, &MleOptions::default())?;
        *out = Box::into_raw(Box::new(LcDensity(result.density())));
        Ok(())
    })
}

/// # Safety
/// `density` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lc_density_free(density: *mut LcDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

unsafe fn density_ref<'a>(d: *const LcDensity) -> Result<&'a NormalizedDensity, Fail> {
    d.as_ref().map(|d| &d.0).ok_or_else(|| null("density"))
}

/// Support `[lower, upper]` of the density.
///
/// # Safety
/// `density` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_density_support(
    density: *const LcDensity,
    lower: *mut f64,
    upper: *mut f64,
) -> LcStatus {
    guard(|| {
        let (a, b) = density_ref(density)?.logdensity().support();
        write(lower, a, "lower")?;
        write(upper, b, "upper")
    })
}

/// Writes the density at each of `xs` into `out`.
///
/// # Safety
/// `density` must be a live handle; `xs` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_density_eval(
    density: *const LcDensity,
    xs: *const f64,
    len: usize,
    out: *mut f64,
) -> LcStatus {
    guard(|| {
        let d = density_ref(density)?;
        let xs = slice(xs, len, "xs")?;
        let out = slice_mut(out, len, "out")?;
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = d.eval(x);
        }
        Ok(())
    })
}

/// # Safety
/// `density` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_density_cdf(density: *const LcDensity, x: f64, out: *mut f64) -> LcStatus {
    guard(|| write(out, density_ref(density)?.cdf(x), "out"))
}

/// # Safety
/// `density` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_density_quantile(density: *const LcDensity, u: f64, out: *mut f64) -> LcStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&u) {
            return Err(invalid(format!("probability {u} is outside [0, 1]")));
        }
        write(out, density_ref(density)?.quantile(u), "out")
    })
}

/// Hellinger distance `(int (sqrt f - sqrt g)^2)^(1/2)`.
///
/// # Safety
/// `f` and `g` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_hellinger(f: *const LcDensity, g: *const LcDensity, out: *mut f64) -> LcStatus {
    guard(|| {
        let h = hellinger(density_ref(f)?, density_ref(g)?, &HellingerOptions::default())?;
        write(out, h, "out")
    })
}

/// Runs a posterior chain. `config_json` holds a chain config as JSON; null
/// selects the defaults.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `data` must hold
/// `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_chain_run(
    config_json: *const c_char,
    data: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut LcChain,
) -> LcStatus {
    guard(|| {
        let cfg: ChainConfig = if config_json.is_null() {
            ChainConfig::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| invalid("config is not UTF-8"))?;
            serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?
        };
        let data = slice(data, len, "data")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = run_chain(&cfg, data, seed)?;
        *out = Box::into_raw(Box::new(LcChain(chain)));
        Ok(())
    })
}

/// # Safety
/// `chain` must come from `lc_chain_run` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lc_chain_free(chain: *mut LcChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

unsafe fn chain_ref<'a>(c: *const LcChain) -> Result<&'a Chain, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("chain"))
}

/// Number of kept iterations and evaluation grid points.
///
/// # Safety
/// `chain` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_chain_dims(chain: *const LcChain, kept: *mut usize, grid: *mut usize) -> LcStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        write(kept, c.len(), "kept")?;
        write(grid, c.grid.len(), "grid")
    })
}

/// Pointwise posterior mean and equal-tailed credible band at `level` on
/// the evaluation grid. Each output array must hold `len` doubles, where
/// `len` is the grid size.
///
/// # Safety
/// `chain` must be a live handle; the output arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_chain_band(
    chain: *const LcChain,
    level: f64,
    grid: *mut f64,
    mean: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> LcStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if len != c.grid.len() {
            return Err(invalid(format!("buffers hold {len} values, the grid has {}", c.grid.len())));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(invalid(format!("level {level} is outside (0, 1)")));
        }
        let band = band_from_chain(c, level)?;
        slice_mut(grid, len, "grid")?.copy_from_slice(&band.grid);
        slice_mut(mean, len, "mean")?.copy_from_slice(&band.mean);
        slice_mut(lower, len, "lower")?.copy_from_slice(&band.lower);
        slice_mut(upper, len, "upper")?.copy_from_slice(&band.upper);
        Ok(())
    })
}

/// Mode of each kept density. `len` must equal the kept iteration count.
///
/// # Safety
/// `chain` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_chain_modes(chain: *const LcChain, out: *mut f64, len: usize) -> LcStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if len != c.len() {
            return Err(invalid(format!("buffer holds {len} values, the chain has {}", c.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(&c.modes()?);
        Ok(())
    })
}
