//! C ABI over the `mslab` library.
//!
//! Every entry point returns an [`MslabStatus`]; on failure the message is
//! kept per thread and read with [`mslab_last_error`]. Objects cross the
//! boundary as opaque handles that the caller frees with the matching
//! `*_free` function. Matrices are passed as separate real and imaginary
//! arrays, `d` blocks of `n × n` entries in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mslab::matrix::{sample_coordinate_gaussian, Complex64, ComplexMatrix, MatrixDomain, MatrixTuple, RngStream};
use mslab::microstates::{estimate_volume, MembershipConfig, NeighborhoodSpec};
use mslab::moments::{free_convolve, moments_to_cumulants, MomentVector};
use mslab::ncpoly::{eval_formula, parse_formula, EvalConfig, Formula};
use mslab::optimize::OptConfig;
use mslab::transport::psi_distance;

/// Result of every call. Values 2 and 3 match the CLI exit statuses.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Utf8 = 4,
    Panic = 5,
}

pub struct MslabTuple(MatrixTuple);
pub struct MslabFormula(Formula);
pub struct MslabSpec(NeighborhoodSpec);

/// Volume estimate for one matrix size.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MslabVolume {
    pub samples: usize,
    pub hits: usize,
    /// `log vol`, `-inf` when nothing hit.
    pub log_vol: f64,
    pub ci: f64,
    /// Normalized entropy `h_n`.
    pub h: f64,
    pub h_ci: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &mslab::Error) -> MslabStatus {
    if e.is_validation() {
        MslabStatus::InvalidArgument
    } else {
        MslabStatus::Numerical
    }
}

/// Internal failure: a status plus its message.
struct Fail(MslabStatus, String);

impl From<mslab::Error> for Fail {
    fn from(e: mslab::Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MslabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MslabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MslabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MslabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(MslabStatus::Utf8, format!("{what}: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

// ---- tuples ----

/// Builds a `d`-tuple of `n × n` matrices from `d·n²` real and imaginary
/// parts; `im` may be null for real matrices.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `d·n²` readable doubles and
/// `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mslab_tuple_new(
    n: usize,
    d: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut MslabTuple,
) -> MslabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if re.is_null() {
            return Err(null("re"));
        }
        if n == 0 || d == 0 {
            return Err(Fail(MslabStatus::InvalidArgument, "n and d must be positive".into()));
        }
        let len = d.checked_mul(n * n).ok_or_else(|| Fail(MslabStatus::InvalidArgument, "size overflow".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, len));
        let mats = (0..d)
            .map(|j| {
                ComplexMatrix::from_fn(n, |a, b| {
                    let k = j * n * n + a * n + b;
                    Complex64::new(re[k], im.map_or(0.0, |v| v[k]))
                })
            })
            .collect();
        *out = Box::into_raw(Box::new(MslabTuple(MatrixTuple::new(mats)?)));
        Ok(())
    })
}

/// Draws a tuple of coordinate Gaussians with `E‖X_j‖₂² = 1`
/// (`self_adjoint` non-zero for GUE-type matrices).
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mslab_tuple_sample(
    n: usize,
    d: usize,
    self_adjoint: i32,
    seed: u64,
    stream: u64,
    out: *mut *mut MslabTuple,
) -> MslabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if n == 0 || d == 0 {
            return Err(Fail(MslabStatus::InvalidArgument, "n and d must be positive".into()));
        }
        let domain = if self_adjoint != 0 { MatrixDomain::SelfAdjoint } else { MatrixDomain::General };
        let mut rng = RngStream::new(seed, stream).rng();
        let mats = (0..d).map(|_| sample_coordinate_gaussian(n, domain, 1.0, &mut rng).0).collect();
        *out = Box::into_raw(Box::new(MslabTuple(MatrixTuple::new(mats)?)));
        Ok(())
    })
}

/// Writes `n` and `d` of a tuple.
///
/// # Safety
/// `t` must be a live tuple handle; `n` and `d` writable.
#[no_mangle]
pub unsafe extern "C" fn mslab_tuple_shape(t: *const MslabTuple, n: *mut usize, d: *mut usize) -> MslabStatus {
    guard(|| {
        let t = handle(t, "tuple")?;
        *out_arg(n, "n")? = t.0.n();
        *out_arg(d, "d")? = t.0.d();
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mslab_tuple_free(t: *mut MslabTuple) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

// ---- formulas ----

/// Parses a trace formula.
///
/// # Safety
/// `src` must be a nul-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mslab_formula_parse(src: *const c_char, out: *mut *mut MslabFormula) -> MslabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let f = parse_formula(str_arg(src, "src")?)?;
        *out = Box::into_raw(Box::new(MslabFormula(f)));
        Ok(())
    })
}

/// Evaluates a formula on a tuple with the default optimizer settings for
/// quantifiers.
///
/// # Safety
/// Handles must be live; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn mslab_formula_eval(
    f: *const MslabFormula,
    t: *const MslabTuple,
    value: *mut f64,
) -> MslabStatus {
    guard(|| {
        let f = handle(f, "formula")?;
        let t = handle(t, "tuple")?;
        *out_arg(value, "value")? = eval_formula(&f.0, &t.0, &EvalConfig::default())?.value;
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mslab_formula_free(f: *mut MslabFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

// ---- microstate volumes ----

/// Parses and validates a neighborhood spec given as JSON.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mslab_spec_from_json(json: *const c_char, out: *mut *mut MslabSpec) -> MslabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = NeighborhoodSpec::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(MslabSpec(spec)));
        Ok(())
    })
}

/// Importance-sampling volume estimate at size `n`.
///
/// # Safety
/// `spec` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mslab_estimate_volume(
    spec: *const MslabSpec,
    n: usize,
    samples: usize,
    seed: u64,
    out: *mut MslabVolume,
) -> MslabStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let out = out_arg(out, "out")?;
        let v = estimate_volume(&spec.0, n, samples, &RngStream::new(seed, 0), &MembershipConfig::default())?;
        *out = MslabVolume { samples: v.samples, hits: v.hits, log_vol: v.log_vol, ci: v.ci, h: v.h, h_ci: v.h_ci };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mslab_spec_free(s: *mut MslabSpec) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

// ---- free probability ----

unsafe fn univariate(m: *const f64, len: usize) -> Result<MomentVector, Fail> {
    if m.is_null() {
        return Err(null("moments"));
    }
    Ok(MomentVector::self_adjoint_univariate(std::slice::from_raw_parts(m, len))?)
}

/// Free cumulants `κ_0 … κ_{len−1}` of a self-adjoint law from its moments
/// `m_0 = 1, m_1, …`.
///
/// # Safety
/// `moments` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mslab_free_cumulants(moments: *const f64, len: usize, out: *mut f64) -> MslabStatus {
    guard(|| {
        let mv = univariate(moments, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kv = moments_to_cumulants(&mv);
        let out = std::slice::from_raw_parts_mut(out, len);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = kv.get_letters(&vec![0; k]).re;
        }
        Ok(())
    })
}

/// Moments of `μ ⊞ ν` from the moments of `μ` and `ν`, all of length `len`.
///
/// # Safety
/// `mu`, `nu` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mslab_free_convolve(mu: *const f64, nu: *const f64, len: usize, out: *mut f64) -> MslabStatus {
    guard(|| {
        let a = univariate(mu, len)?;
        let b = univariate(nu, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = free_convolve(&a, &b, len.saturating_sub(1))?.univariate_moments(1e-9)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&m[..len]);
        Ok(())
    })
}

// ---- orbits ----

/// `inf_U ‖U X U^* − Y‖₂` with `starts` optimizer starts.
///
/// # Safety
/// Handles must be live; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn mslab_psi_distance(
    x: *const MslabTuple,
    y: *const MslabTuple,
    starts: usize,
    seed: u64,
    value: *mut f64,
) -> MslabStatus {
    guard(|| {
        let x = handle(x, "x")?;
        let y = handle(y, "y")?;
        let value = out_arg(value, "value")?;
        let cfg = OptConfig { starts, seed: RngStream::new(seed, 0), ..OptConfig::default() };
        cfg.validate()?;
        *value = psi_distance(&x.0, &y.0, &cfg)?.value;
        Ok(())
    })
}

// ---- experiments ----

/// Runs one CLI experiment (`kind` as on the command line) and writes its
/// JSON and CSV reports; `out_path` may be null to use the config's
/// `output_path`. Returns `Ok`, `InvalidArgument` or `Numerical` like the
/// CLI's exit statuses 0, 2 and 3.
///
/// # Safety
/// String arguments must be nul-terminated (or null where allowed).
#[no_mangle]
pub unsafe extern "C" fn mslab_run_experiment(
    kind: *const c_char,
    config_path: *const c_char,
    seed: u64,
    out_path: *const c_char,
) -> MslabStatus {
    guard(|| {
        let kind_s = str_arg(kind, "kind")?;
        let kind: mslab::cli::Kind = serde_json::from_value(serde_json::Value::String(kind_s.into()))
            .map_err(|_| Fail(MslabStatus::InvalidArgument, format!("unknown experiment kind `{kind_s}`")))?;
        let config = Path::new(str_arg(config_path, "config_path")?);
        let out = if out_path.is_null() { None } else { Some(Path::new(str_arg(out_path, "out_path")?)) };
        mslab::cli::run_experiment(kind, config, Some(seed), out).map(|_| ()).map_err(|(code, diags)| {
            let status =
                if code == mslab::cli::EXIT_VALIDATION { MslabStatus::InvalidArgument } else { MslabStatus::Numerical };
            let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            Fail(status, msg.join("; "))
        })
    })
}
