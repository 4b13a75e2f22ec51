//! C ABI over `qsearch-core`.
//!
//! Objects cross the boundary as opaque handles (`QsPrior`, `QsPlan`,
//! `QsCircuit`) that the caller releases with the matching `*_free`
//! function. Fallible calls return a [`QsStatus`] and write results through
//! out-pointers; the message of the last failure on the calling thread is
//! available from [`qs_last_error`]. Item indices follow the core crate:
//! `qs_run_iterations` takes a 1-based item index.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsearch::circuit::{self, HalfHalfSpec};
use qsearch::simulator::{self, GateCircuit};
use qsearch::{esp, optimizer, AmplitudePlan, Error, OptimizerConfig, Prior};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsStatus {
    Ok = 0,
    InvalidInput = 1,
    NumericalFailure = 2,
    ResourceLimit = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsSolver {
    Waterfill = 0,
    ClosedT1 = 1,
}

pub struct QsPrior(Prior);

pub struct QsPlan {
    plan: AmplitudePlan,
    /// NaN for plans built from raw amplitudes.
    kkt_residual: f64,
}

pub struct QsCircuit(GateCircuit);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = clean);
}

fn status_of(err: &Error) -> QsStatus {
    set_error(&err.to_string());
    match err {
        Error::InvalidInput(_) => QsStatus::InvalidInput,
        Error::NumericalFailure { .. } => QsStatus::NumericalFailure,
        Error::ResourceLimit(_) => QsStatus::ResourceLimit,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QsStatus>) -> QsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside qsearch");
            QsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, QsStatus> {
    if p.is_null() {
        set_error("null handle");
        return Err(QsStatus::NullPointer);
    }
    Ok(&*p)
}

unsafe fn slice<'a>(data: *const f64, len: usize) -> Result<&'a [f64], QsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        set_error("null array");
        return Err(QsStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), QsStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(QsStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_into(src: &[f64], buf: *mut f64, len: usize) -> Result<(), QsStatus> {
    if len < src.len() {
        set_error(&format!("buffer holds {len} values, {} needed", src.len()));
        return Err(QsStatus::BufferTooSmall);
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        set_error("null buffer");
        return Err(QsStatus::NullPointer);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failing call on this thread. Valid until the next
/// failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn qs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Normalizes `len` non-negative weights into a prior.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_prior_new(
    weights: *const f64,
    len: usize,
    out: *mut *mut QsPrior,
) -> QsStatus {
    guard(|| {
        let raw = slice(weights, len)?;
        let prior = Prior::new(raw).map_err(|e| status_of(&e))?;
        write_out(out, boxed(QsPrior(prior)))
    })
}

/// Seeded random prior of `n` items.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_prior_sample(n: usize, seed: u64, out: *mut *mut QsPrior) -> QsStatus {
    guard(|| {
        let prior = Prior::sample(n, seed).map_err(|e| status_of(&e))?;
        write_out(out, boxed(QsPrior(prior)))
    })
}

/// Item count, or 0 for a NULL handle.
///
/// # Safety
/// `prior` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_prior_len(prior: *const QsPrior) -> usize {
    prior.as_ref().map_or(0, |p| p.0.len())
}

/// Copies the normalized weights into `buf` (at least `qs_prior_len`
/// entries).
///
/// # Safety
/// `prior` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qs_prior_weights(
    prior: *const QsPrior,
    buf: *mut f64,
    len: usize,
) -> QsStatus {
    guard(|| copy_into(deref(prior)?.0.weights(), buf, len))
}

/// # Safety
/// `prior` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_prior_free(prior: *mut QsPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

/// `sin^2((2t+1) asin sqrt(q))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_success_prob_single(q: f64, t: u32, out: *mut f64) -> QsStatus {
    guard(|| {
        let v = esp::success_prob_single(q, t).map_err(|e| status_of(&e))?;
        write_out(out, v)
    })
}

/// Saturating squared amplitude `sin^2(pi / (2(2t+1)))`.
#[no_mangle]
pub extern "C" fn qs_cap(t: u32) -> f64 {
    optimizer::cap(t)
}

/// Optimal plan for `t` queries.
///
/// # Safety
/// `prior` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_optimize(
    prior: *const QsPrior,
    t: u32,
    solver: QsSolver,
    out: *mut *mut QsPlan,
) -> QsStatus {
    guard(|| {
        let p = &deref(prior)?.0;
        let cfg = OptimizerConfig::default();
        let result = match solver {
            QsSolver::Waterfill => optimizer::optimize(p, t, &cfg),
            QsSolver::ClosedT1 if t == 1 => optimizer::optimize_t1_closed_form(p, &cfg),
            QsSolver::ClosedT1 => Err(Error::InvalidInput("closed-form solver needs t = 1".into())),
        };
        let opt = result.map_err(|e| status_of(&e))?;
        write_out(
            out,
            boxed(QsPlan {
                plan: opt.plan,
                kkt_residual: opt.kkt_residual,
            }),
        )
    })
}

/// Plan from raw squared amplitudes.
///
/// # Safety
/// `q` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_new(
    q: *const f64,
    len: usize,
    t: u32,
    out: *mut *mut QsPlan,
) -> QsStatus {
    guard(|| {
        let plan = AmplitudePlan::new(slice(q, len)?.to_vec(), t).map_err(|e| status_of(&e))?;
        write_out(
            out,
            boxed(QsPlan {
                plan,
                kkt_residual: f64::NAN,
            }),
        )
    })
}

/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_len(plan: *const QsPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.len())
}

/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_queries(plan: *const QsPlan) -> u32 {
    plan.as_ref().map_or(0, |p| p.plan.t)
}

/// KKT residual of an optimized plan; NaN for raw plans or NULL.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_kkt_residual(plan: *const QsPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.kkt_residual)
}

/// # Safety
/// `plan` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_amplitudes(
    plan: *const QsPlan,
    buf: *mut f64,
    len: usize,
) -> QsStatus {
    guard(|| copy_into(&deref(plan)?.plan.q, buf, len))
}

/// # Safety
/// `plan` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_plan_free(plan: *mut QsPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Expected success probability of `plan` under `prior`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_esp(
    prior: *const QsPrior,
    plan: *const QsPlan,
    out: *mut f64,
) -> QsStatus {
    guard(|| {
        let v = esp::esp(&deref(prior)?.0, &deref(plan)?.plan).map_err(|e| status_of(&e))?;
        write_out(out, v)
    })
}

/// Best uniform Grover search over the `m` most likely items.
///
/// # Safety
/// `prior` must be live; `value` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_ranking_baseline(
    prior: *const QsPrior,
    t: u32,
    value: *mut f64,
    m: *mut usize,
) -> QsStatus {
    guard(|| {
        let report = esp::ranking_baseline(&deref(prior)?.0, t);
        let chosen = report.extras.get("m").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
        write_out(value, report.value)?;
        write_out(m, chosen)
    })
}

/// Simulated probability of finding item `x` (1-based).
///
/// # Safety
/// `plan` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_run_iterations(
    plan: *const QsPlan,
    x: usize,
    out: *mut f64,
) -> QsStatus {
    guard(|| {
        let v = simulator::run_iterations(&deref(plan)?.plan, x).map_err(|e| status_of(&e))?;
        write_out(out, v)
    })
}

/// Rotation angle of the optimal single-query half-half circuit.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_theta_for_sigma(sigma: f64, out: *mut f64) -> QsStatus {
    guard(|| {
        let v = circuit::theta_for_sigma(sigma).map_err(|e| status_of(&e))?;
        write_out(out, v)
    })
}

/// Half-half circuit marking `solution` (3 characters, `'0'`/`'1'`,
/// qubit 2 first).
///
/// # Safety
/// `solution` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_halfhalf_circuit(
    sigma: f64,
    solution: *const c_char,
    out: *mut *mut QsCircuit,
) -> QsStatus {
    guard(|| {
        let label = deref(solution)?;
        let label = CStr::from_ptr(label).to_str().map_err(|_| {
            set_error("solution is not UTF-8");
            QsStatus::InvalidInput
        })?;
        let spec = HalfHalfSpec::new(sigma, label).map_err(|e| status_of(&e))?;
        let c = circuit::build_halfhalf_circuit(&spec).map_err(|e| status_of(&e))?;
        write_out(out, boxed(QsCircuit(c)))
    })
}

/// Number of basis outcomes (`2^qubits`), or 0 for NULL.
///
/// # Safety
/// `circuit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_circuit_outcomes(circuit: *const QsCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| 1usize << c.0.qubit_count)
}

/// Exact outcome distribution (little-endian basis index).
///
/// # Safety
/// `circuit` must be live and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qs_circuit_probabilities(
    circuit: *const QsCircuit,
    buf: *mut f64,
    len: usize,
) -> QsStatus {
    guard(|| {
        let probs = simulator::run_gate_circuit(&deref(circuit)?.0).map_err(|e| status_of(&e))?;
        copy_into(&probs, buf, len)
    })
}

/// OpenQASM 2.0 text, or NULL on failure. Release with `qs_string_free`.
///
/// # Safety
/// `circuit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_circuit_qasm(circuit: *const QsCircuit) -> *mut c_char {
    let mut text = None;
    let status = guard(|| {
        let qasm = circuit::emit_qasm(&deref(circuit)?.0).map_err(|e| status_of(&e))?;
        text = Some(qasm);
        Ok(())
    });
    match (status, text) {
        (QsStatus::Ok, Some(s)) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `circuit` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_circuit_free(circuit: *mut QsCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
