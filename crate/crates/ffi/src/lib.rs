//! C ABI over the `rayleigh-stokes` toolkit.
//!
//! Every function returns an [`RsStatus`]; results go through out-pointers. On failure the
//! message is kept per thread and can be read with [`rs_last_error_message`]. Operators are
//! opaque handles created by the `rs_operator_*` constructors and released with
//! [`rs_operator_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};

use nalgebra::DMatrix;
use rayleigh_stokes::forward::observation_u;
use rayleigh_stokes::inverse::{
    recover_alpha, InverseSpec, Observation as ObservationMap, ThresholdGate,
};
use rayleigh_stokes::kernel::{eval_b, eval_db_dt, KernelPoint};
use rayleigh_stokes::quadrature::QuadratureConfig;
use rayleigh_stokes::sensitivity::{db_dalpha, estimate_t0, ScanGrid};
use rayleigh_stokes::spectral::{InitialData, Observation, ObservationWeights, SpectralOperator};
use rayleigh_stokes::Error;

/// Status codes; 2–5 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    /// Invalid parameter, configuration or input data.
    InvalidInput = 2,
    /// Quadrature failure or no threshold time on the scan grid.
    NumericalFailure = 3,
    /// The observation lies outside the attainable range.
    NoSolution = 4,
    /// Monotonicity certificate failed or the observation time is below the threshold.
    CertificateFailure = 5,
    NullPointer = 10,
    Panic = 11,
}

/// Observation function `Φ`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsWeight {
    One = 0,
    Lambda = 1,
    /// `λ^p`, with `p` passed separately.
    Power = 2,
}

/// How [`rs_recover_alpha`] checks the observation time.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsGate {
    /// Run the threshold scan with the given number of doublings.
    Verify = 0,
    /// Compare against a threshold time supplied by the caller.
    Precomputed = 1,
    /// No check; the result is marked uncertified.
    Unsafe = 2,
}

/// Quadrature tolerances; obtain defaults from [`rs_quadrature_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsQuadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub panel_order: usize,
}

/// Five-term breakdown of `dB/dα`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RsSensitivity {
    pub near: [f64; 5],
    pub far: [f64; 5],
    pub c0: f64,
    pub split: f64,
    pub total: f64,
    pub fd_reference: f64,
    pub cross_check_ok: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RsRecovery {
    pub alpha_hat: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Threshold time used by the gate; NaN when the check was skipped.
    pub t0_used: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub certified: bool,
}

/// Opaque operator handle.
pub struct RsOperator {
    inner: SpectralOperator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RsStatus {
    match e.exit_code() {
        3 => RsStatus::NumericalFailure,
        4 => RsStatus::NoSolution,
        5 => RsStatus::CertificateFailure,
        _ => RsStatus::InvalidInput,
    }
}

fn guard<F>(f: F) -> RsStatus
where
    F: FnOnce() -> Result<(), Failure> + UnwindSafe,
{
    match catch_unwind(f) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RsStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RsStatus::NullPointer
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RsStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either NULL or a pointer to writable storage for one T.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the contract, valid for `len` reads.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn operator_ref<'a>(op: *const RsOperator) -> Result<&'a SpectralOperator, Failure> {
    // SAFETY: handles come from `rs_operator_*` and are not yet freed.
    unsafe { op.as_ref() }
        .map(|o| &o.inner)
        .ok_or(Failure::Null("operator"))
}

fn config(q: *const RsQuadrature) -> Result<QuadratureConfig, Failure> {
    // SAFETY: NULL selects the defaults; otherwise a readable struct.
    match unsafe { q.as_ref() } {
        None => Ok(QuadratureConfig::default()),
        Some(q) => Ok(QuadratureConfig::new(
            q.rel_tol,
            q.abs_tol,
            q.max_panels,
            q.panel_order,
        )?),
    }
}

fn weights(
    kind: RsWeight,
    power: f64,
    op: &SpectralOperator,
) -> Result<ObservationWeights, Failure> {
    let kind = match kind {
        RsWeight::One => Observation::One,
        RsWeight::Lambda => Observation::Lambda,
        RsWeight::Power => Observation::Power { p: power },
    };
    Ok(ObservationWeights::new(kind, op)?)
}

fn emit_operator(op: SpectralOperator, out: *mut *mut RsOperator) -> Result<(), Failure> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(RsOperator { inner: op }));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated, always
/// NUL-terminated when `len > 0`) and returns the full message length excluding the NUL;
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be NULL or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn rs_quadrature_default() -> RsQuadrature {
    let d = QuadratureConfig::default();
    RsQuadrature {
        rel_tol: d.rel_tol,
        abs_tol: d.abs_tol,
        max_panels: d.max_panels,
        panel_order: d.panel_order,
    }
}

/// Dirichlet Laplacian on `(0, length)` with `modes` eigenpairs.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_interval(
    length: f64,
    modes: usize,
    out: *mut *mut RsOperator,
) -> RsStatus {
    guard(|| emit_operator(SpectralOperator::dirichlet_interval(length, modes)?, out))
}

/// Dirichlet Laplacian on `(0, lx) × (0, ly)`, the `modes` smallest eigenvalues.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_rectangle(
    lx: f64,
    ly: f64,
    modes: usize,
    out: *mut *mut RsOperator,
) -> RsStatus {
    guard(|| emit_operator(SpectralOperator::dirichlet_rectangle(lx, ly, modes)?, out))
}

/// Symmetric positive-definite `n × n` matrix, row-major.
///
/// # Safety
/// `entries` must be valid for `n * n` reads and `out` for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_matrix(
    entries: *const f64,
    n: usize,
    out: *mut *mut RsOperator,
) -> RsStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or(Failure::Core(Error::InvalidInput(
            "matrix too large".into(),
        )))?;
        let e = slice(entries, len, "entries")?;
        emit_operator(
            SpectralOperator::matrix_operator(&DMatrix::from_row_slice(n, n, e))?,
            out,
        )
    })
}

/// Releases an operator; NULL is ignored.
///
/// # Safety
/// `op` must be NULL or a handle from `rs_operator_*` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_free(op: *mut RsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of retained modes; 0 for NULL.
///
/// # Safety
/// `op` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_len(op: *const RsOperator) -> usize {
    op.as_ref().map_or(0, |o| o.inner.len())
}

/// Copies up to `len` eigenvalues into `out`.
///
/// # Safety
/// `op` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rs_operator_eigenvalues(
    op: *const RsOperator,
    out: *mut f64,
    len: usize,
) -> RsStatus {
    guard(|| {
        let op = operator_ref(op)?;
        if len == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        for (k, &l) in op.eigenvalues().iter().take(len).enumerate() {
            *out.add(k) = l;
        }
        Ok(())
    })
}

/// `B_α(λ, t)`. `cfg` may be NULL for defaults.
///
/// # Safety
/// `cfg` must be NULL or readable; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rs_kernel_eval(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    t: f64,
    cfg: *const RsQuadrature,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let cfg = config(cfg)?;
        *out_ref(out, "out")? = eval_b(&KernelPoint::new(lambda, gamma, alpha, t)?, &cfg)?;
        Ok(())
    })
}

/// `∂_t B_α(λ, t)` for `t > 0`.
///
/// # Safety
/// As [`rs_kernel_eval`].
#[no_mangle]
pub unsafe extern "C" fn rs_kernel_dbdt(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    t: f64,
    cfg: *const RsQuadrature,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let cfg = config(cfg)?;
        *out_ref(out, "out")? = eval_db_dt(&KernelPoint::new(lambda, gamma, alpha, t)?, &cfg)?;
        Ok(())
    })
}

/// `∂_α B_α(λ, t0)` with its breakdown, `t0 ≥ 1`, `0 < lambda1 ≤ lambda`.
///
/// # Safety
/// `cfg` must be NULL or readable; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rs_kernel_dbdalpha(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    t0: f64,
    lambda1: f64,
    cfg: *const RsQuadrature,
    out: *mut RsSensitivity,
) -> RsStatus {
    guard(|| {
        let cfg = config(cfg)?;
        let s = db_dalpha(&KernelPoint::new(lambda, gamma, alpha, t0)?, lambda1, &cfg)?;
        *out_ref(out, "out")? = RsSensitivity {
            near: s.near,
            far: s.far,
            c0: s.c0.value,
            split: s.split,
            total: s.total,
            fd_reference: s.fd_reference,
            cross_check_ok: s.cross_check_ok,
        };
        Ok(())
    })
}

fn data_for(op: &SpectralOperator, coeffs: *const f64, n: usize) -> Result<InitialData, Failure> {
    Ok(op.expand_list(slice(coeffs, n, "coefficients")?)?)
}

/// `U(t0, α) = ‖Φ(A)u(t0)‖²` for Fourier coefficients `coeffs[0..n]` (zero-padded).
///
/// # Safety
/// `op` must be a live handle, `coeffs` valid for `n` reads, `cfg` NULL or readable, `out`
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rs_observation_u(
    op: *const RsOperator,
    coeffs: *const f64,
    n: usize,
    alpha: f64,
    gamma: f64,
    t0: f64,
    weight: RsWeight,
    power: f64,
    cfg: *const RsQuadrature,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let cfg = config(cfg)?;
        let data = data_for(op, coeffs, n)?;
        let w = weights(weight, power, op)?;
        *out_ref(out, "out")? = observation_u(op, &data, alpha, gamma, t0, &w, &cfg)?.value;
        Ok(())
    })
}

/// Threshold time for the α-grid `alphas[0..n]` scanned on `start·2^k`, `k ≤ doublings`.
///
/// # Safety
/// `alphas` valid for `n` reads, `cfg` NULL or readable, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rs_estimate_t0(
    gamma: f64,
    lambda1: f64,
    alphas: *const f64,
    n: usize,
    start: f64,
    doublings: u32,
    cfg: *const RsQuadrature,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let cfg = config(cfg)?;
        let a = slice(alphas, n, "alphas")?;
        *out_ref(out, "out")? =
            estimate_t0(gamma, lambda1, a, ScanGrid { start, doublings }, &cfg)?.t0;
        Ok(())
    })
}

/// Recovers `α` from `d0 = U(t0, α)` on the bracket `[lo, hi]`.
///
/// `gate_value` is the number of scan doublings for [`RsGate::Verify`] and the threshold
/// time for [`RsGate::Precomputed`]; it is ignored for [`RsGate::Unsafe`].
///
/// # Safety
/// `op` must be a live handle, `coeffs` valid for `n` reads, `cfg` NULL or readable, `out`
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rs_recover_alpha(
    op: *const RsOperator,
    coeffs: *const f64,
    n: usize,
    gamma: f64,
    weight: RsWeight,
    power: f64,
    t0: f64,
    d0: f64,
    lo: f64,
    hi: f64,
    alpha_tol: f64,
    value_tol: f64,
    gate: RsGate,
    gate_value: f64,
    cfg: *const RsQuadrature,
    out: *mut RsRecovery,
) -> RsStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let cfg = config(cfg)?;
        let data = data_for(op, coeffs, n)?;
        let w = weights(weight, power, op)?;
        let gate = match gate {
            RsGate::Verify => {
                if !(gate_value >= 0.0 && gate_value.fract() == 0.0 && gate_value <= 1024.0) {
                    return Err(Error::param(
                        "gate_value",
                        gate_value,
                        "doublings must be a whole number in [0, 1024]",
                    )
                    .into());
                }
                ThresholdGate::Verify {
                    grid: ScanGrid {
                        start: 1.0,
                        doublings: gate_value as u32,
                    },
                }
            }
            RsGate::Precomputed => ThresholdGate::Precomputed { t0: gate_value },
            RsGate::Unsafe => ThresholdGate::Unsafe,
        };
        let spec = InverseSpec {
            t0,
            d0,
            bracket: (lo, hi),
            alpha_tol,
            value_tol,
        };
        let obs = ObservationMap {
            op,
            data: &data,
            gamma,
            weights: &w,
            cfg: &cfg,
        };
        let r = recover_alpha(&spec, &obs, gate)?;
        *out_ref(out, "out")? = RsRecovery {
            alpha_hat: r.alpha_hat,
            residual: r.residual,
            iterations: r.iterations,
            t0_used: r.t0_used.unwrap_or(f64::NAN),
            u_min: r.range.u_min,
            u_max: r.range.u_max,
            certified: r.certified,
        };
        Ok(())
    })
}
