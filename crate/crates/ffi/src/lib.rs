//! C ABI over `oscitime`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every function returns an
//! [`OtStatus`]; on failure the message is available from
//! [`ot_last_error`] on the same thread until the next failing call.
//! Complex numbers are passed as separate real and imaginary parts.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use oscitime::ccr::{ccr_check, VectorOperator, Verdict};
use oscitime::conjugates::{angle_operator, boundary_operator, conjugate_operator, galapon_operator, AngleVariant};
use oscitime::fock::{basis_vector, ccr_domain_sample, geometric_vector, super_coherent_vector, DomainConstraint, FockVector};
use oscitime::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Divergent = 4,
    Guard = 5,
    Contour = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OtVerdict {
    Pass = 0,
    Fail = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OtDomainKind {
    /// `sum c_n = 0`
    SumZero = 0,
    /// `sum conj(omega)^n c_{l + m n} = 0` for every `l < m`
    ResidueClassZero = 1,
    /// `c_n = 0` for `n > param`
    SupportBound = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtCcrResult {
    pub residual: f64,
    pub budget: f64,
    pub verdict: OtVerdict,
}

/// A truncated Fock space vector.
pub struct OtVector {
    inner: FockVector,
}

/// An operator that can be applied to vectors: banded, or a logarithm
/// evaluated as a series.
pub struct OtOperator {
    inner: Box<dyn VectorOperator>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OtStatus {
    match e {
        Error::IndexOutOfTruncation { .. } | Error::DimensionMismatch { .. } | Error::Parameter(_) | Error::Config(_) => {
            OtStatus::InvalidArgument
        }
        Error::Domain(_) | Error::Unsatisfiable(_) | Error::Hypothesis(_) | Error::Precondition(_) | Error::Branch(_) => {
            OtStatus::Domain
        }
        Error::Divergent(_) | Error::IterationCap { .. } => OtStatus::Divergent,
        Error::Guard(_) => OtStatus::Guard,
        Error::Contour(_) => OtStatus::Contour,
        Error::Io(_) => OtStatus::Io,
    }
}

struct Fail(OtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OtStatus::NullPointer, format!("{what} is null"))
}

fn run<F: FnOnce() -> Result<(), Fail>>(f: F) -> OtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OtStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            OtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Vector from `len` coefficients with no tail beyond them.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_new(re: *const f64, im: *const f64, len: usize, out: *mut *mut OtVector) -> OtStatus {
    run(|| {
        if re.is_null() || im.is_null() {
            return Err(null("coefficients"));
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = std::slice::from_raw_parts(im, len);
        let c: Vec<Complex64> = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        put(out, OtVector { inner: FockVector::from_c64(&c)? })
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_basis(n: usize, dim: usize, out: *mut *mut OtVector) -> OtStatus {
    run(|| put(out, OtVector { inner: basis_vector(n, dim)? }))
}

/// `(alpha^n)`, truncated to `dim`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_geometric(alpha_re: f64, alpha_im: f64, dim: usize, out: *mut *mut OtVector) -> OtStatus {
    run(|| put(out, OtVector { inner: geometric_vector(Complex64::new(alpha_re, alpha_im), dim)? }))
}

/// `a*^j exp(beta a*^2 / 2) Omega`; `dim = 0` picks the truncation
/// automatically.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_super_coherent(
    beta_re: f64,
    beta_im: f64,
    j: usize,
    dim: usize,
    out: *mut *mut OtVector,
) -> OtStatus {
    run(|| {
        let beta = Complex64::new(beta_re, beta_im);
        let v = if dim == 0 {
            super_coherent_vector(beta, j, oscitime::fock::Truncation::auto())?
        } else {
            super_coherent_vector(beta, j, dim)?
        };
        put(out, OtVector { inner: v })
    })
}

/// Seeded random vector satisfying a domain constraint. `omega` and `param`
/// are read by `ResidueClassZero` (`param = m`) and `SupportBound`
/// (`param = n_max`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_domain_sample(
    kind: OtDomainKind,
    omega_re: f64,
    omega_im: f64,
    param: usize,
    seed: u64,
    dim: usize,
    out: *mut *mut OtVector,
) -> OtStatus {
    run(|| {
        let c = match kind {
            OtDomainKind::SumZero => DomainConstraint::SumZero,
            OtDomainKind::ResidueClassZero => {
                DomainConstraint::ResidueClassZero { omega: Complex64::new(omega_re, omega_im), m: param }
            }
            OtDomainKind::SupportBound => DomainConstraint::SupportBound(param),
        };
        put(out, OtVector { inner: ccr_domain_sample(&c, seed, dim)? })
    })
}

/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_dim(v: *const OtVector, out: *mut usize) -> OtStatus {
    run(|| {
        let v = deref(v, "vector")?;
        *out.as_mut().ok_or_else(|| null("out"))? = v.inner.dim();
        Ok(())
    })
}

/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_norm(v: *const OtVector, out: *mut f64) -> OtStatus {
    run(|| {
        let v = deref(v, "vector")?;
        *out.as_mut().ok_or_else(|| null("out"))? = v.inner.norm();
        Ok(())
    })
}

/// Copies the coefficients (rounded to double) into `re`/`im`, which hold
/// `len` entries; `len` must equal the vector dimension.
///
/// # Safety
/// `v` must be a live handle; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_coeffs(v: *const OtVector, re: *mut f64, im: *mut f64, len: usize) -> OtStatus {
    run(|| {
        let v = deref(v, "vector")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffers"));
        }
        if len != v.inner.dim() {
            return Err(Error::DimensionMismatch { left: len, right: v.inner.dim() }.into());
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (n, z) in v.inner.to_c64().into_iter().enumerate() {
            re[n] = z.re;
            im[n] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `v` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ot_vector_free(v: *mut OtVector) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Galapon's operator `i/(n - m)` on dimension `dim`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_galapon(dim: usize, out: *mut *mut OtOperator) -> OtStatus {
    run(|| {
        if dim == 0 {
            return Err(Error::Parameter("dim must be positive".into()).into());
        }
        put(out, OtOperator { inner: Box::new(galapon_operator(dim)) })
    })
}

/// The bounded boundary-family operator for `|omega| = 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_boundary(
    omega_re: f64,
    omega_im: f64,
    m: usize,
    dim: usize,
    out: *mut *mut OtOperator,
) -> OtStatus {
    run(|| put(out, OtOperator { inner: Box::new(boundary_operator(Complex64::new(omega_re, omega_im), m, dim)?) }))
}

/// `(i/m) log(omega - L^m)` for `|omega| <= 1`, applied as a series.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_time(
    omega_re: f64,
    omega_im: f64,
    m: usize,
    dim: usize,
    out: *mut *mut OtOperator,
) -> OtStatus {
    run(|| {
        let op = conjugate_operator(Complex64::new(omega_re, omega_im), m, dim)?;
        put(out, OtOperator { inner: Box::new(op.time_operator()) })
    })
}

/// `(i/2) log S` for the even (`odd = 0`) or odd angle operator.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_angle(odd: bool, dim: usize, out: *mut *mut OtOperator) -> OtStatus {
    run(|| {
        let variant = if odd { AngleVariant::S1 } else { AngleVariant::S0 };
        put(out, OtOperator { inner: Box::new(angle_operator(variant, dim)?.time_operator()) })
    })
}

/// `out = op v`, with the error budget of the truncation in `budget`.
///
/// # Safety
/// `op` and `v` must be live handles; `out` and `budget` writable (`budget`
/// may be null).
#[no_mangle]
pub unsafe extern "C" fn ot_operator_apply(
    op: *const OtOperator,
    v: *const OtVector,
    out: *mut *mut OtVector,
    budget: *mut f64,
) -> OtStatus {
    run(|| {
        let op = deref(op, "operator")?;
        let v = deref(v, "vector")?;
        let a = op.inner.apply_to(&v.inner)?;
        if let Some(b) = budget.as_mut() {
            *b = a.budget;
        }
        put(out, OtVector { inner: a.vector })
    })
}

/// Largest singular value of a banded operator's truncation.
///
/// # Safety
/// `op` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_norm(op: *const OtOperator, out: *mut f64) -> OtStatus {
    run(|| {
        let op = deref(op, "operator")?;
        let b = op
            .inner
            .as_banded()
            .ok_or_else(|| Fail(OtStatus::InvalidArgument, "norm needs a banded operator".into()))?;
        *out.as_mut().ok_or_else(|| null("out"))? = b.norm_estimate()?;
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ot_operator_free(op: *mut OtOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Checks `[N, T] phi = expected phi` within `tol` plus the truncation budget.
///
/// # Safety
/// `op` and `phi` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ot_ccr_check(
    op: *const OtOperator,
    phi: *const OtVector,
    expected_re: f64,
    expected_im: f64,
    tol: f64,
    out: *mut OtCcrResult,
) -> OtStatus {
    run(|| {
        let op = deref(op, "operator")?;
        let phi = deref(phi, "vector")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(tol >= 0.0) {
            return Err(Error::Parameter(format!("tolerance must be nonnegative, got {tol}")).into());
        }
        let r = ccr_check(op.inner.as_ref(), &phi.inner, Complex64::new(expected_re, expected_im), tol);
        *out = OtCcrResult {
            residual: r.residual_norm,
            budget: r.truncation_budget,
            verdict: match r.verdict {
                Verdict::Pass => OtVerdict::Pass,
                Verdict::Fail => OtVerdict::Fail,
                Verdict::Inconclusive => OtVerdict::Inconclusive,
            },
        };
        Ok(())
    })
}
