//! C ABI over `photonsub`.
//!
//! States and targets are opaque heap handles owned by the caller and released with the matching
//! `*_free`. Every fallible call returns a [`PsStatus`]; on failure a message is kept per thread and
//! can be copied out with [`ps_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use photonsub::fidelity::{f_n, FidelityEvaluator};
use photonsub::linalg::RMat;
use photonsub::targets::{gamma_from_quadratures, BinaryPhaseTarget};
use photonsub::{GaussianState, SubtractionSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

/// Pure zero-mean Gaussian state.
pub struct PsState(GaussianState);

/// Binary-phase coherent-superposition target.
pub struct PsTarget(BinaryPhaseTarget);

/// Result of [`ps_fidelity`]. Optional values carry a `has_*` flag; the value is 0 when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsFidelityReport {
    pub has_fidelity: bool,
    pub fidelity: f64,
    pub has_ratio: bool,
    pub ratio: f64,
    pub probability: f64,
    pub bound_general: f64,
    pub has_bound_vacuum: bool,
    pub bound_vacuum: f64,
    pub phase_factor: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl ToString) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string().into_bytes());
}

fn classify(e: &photonsub::Error) -> PsStatus {
    use photonsub::Error::*;
    match e {
        Numerical(_) | Singular | Truncation { .. } => PsStatus::Numerical,
        _ => PsStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> PsStatus
where
    F: FnOnce() -> Result<(), PsStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

fn lib<T>(r: photonsub::Result<T>) -> Result<T, PsStatus> {
    r.map_err(|e| {
        set_error(&e);
        classify(&e)
    })
}

fn null() -> PsStatus {
    set_error("null pointer argument");
    PsStatus::NullPointer
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize) -> Result<&'a [T], PsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, PsStatus> {
    p.as_mut().ok_or_else(null)
}

unsafe fn state_ref<'a>(p: *const PsState) -> Result<&'a GaussianState, PsStatus> {
    p.as_ref().map(|s| &s.0).ok_or_else(null)
}

unsafe fn target_ref<'a>(p: *const PsTarget) -> Result<&'a BinaryPhaseTarget, PsStatus> {
    p.as_ref().map(|t| &t.0).ok_or_else(null)
}

fn square(values: &[f64], n: usize) -> RMat {
    RMat::from_row_slice(n, n, values)
}

/// Copies the last error of this thread into `buf` (NUL-terminated, truncated to `len`).
/// Returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(s) => s,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Squeezed state with Fock form `exp(½ Σ tanh(Gr)_ij a†_i a†_j)|0⟩`; `G` is symmetric `n×n`, row-major.
///
/// # Safety
/// `g` must point to `n*n` doubles and `out_state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_state_from_hamiltonian(
    g: *const f64,
    n: usize,
    r: f64,
    out_state: *mut *mut PsState,
) -> PsStatus {
    guard(|| {
        let dst = out(out_state)?;
        let g = slice_in(g, n * n)?;
        let state = lib(GaussianState::from_hamiltonian(square(g, n), r))?;
        *dst = Box::into_raw(Box::new(PsState(state)));
        Ok(())
    })
}

/// State from a `2n×2n` row-major covariance matrix in `(q_1..q_n, p_1..p_n)` ordering.
///
/// # Safety
/// `v` must point to `4*n*n` doubles and `out_state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_state_from_covariance(
    v: *const f64,
    n_modes: usize,
    out_state: *mut *mut PsState,
) -> PsStatus {
    guard(|| {
        let dst = out(out_state)?;
        let dim = 2 * n_modes;
        let v = slice_in(v, dim * dim)?;
        let state = lib(GaussianState::from_covariance(square(v, dim)))?;
        *dst = Box::into_raw(Box::new(PsState(state)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_state_free(state: *mut PsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_state_n_modes(state: *const PsState) -> usize {
    state.as_ref().map_or(0, |s| s.0.n_modes())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsTargetKind {
    CatEven = 0,
    CatOdd = 1,
    Plus = 2,
    Ghz = 3,
    Cccs = 4,
}

impl PsTargetKind {
    fn from_raw(v: u32) -> Option<Self> {
        use PsTargetKind::*;
        [CatEven, CatOdd, Plus, Ghz, Cccs]
            .into_iter()
            .find(|k| *k as u32 == v)
    }
}

/// Builds a target of `kind` (a [`PsTargetKind`] value) with amplitude `γ = (q + ip)/√2`.
/// `n_modes` is ignored for single-mode kinds.
/// `edges` holds `n_edges` pairs of mode indices and is only read for cluster states.
///
/// # Safety
/// `edges` must point to `2*n_edges` values and `out_target` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_target_new(
    kind: u32,
    n_modes: usize,
    gamma_q: f64,
    gamma_p: f64,
    edges: *const usize,
    n_edges: usize,
    out_target: *mut *mut PsTarget,
) -> PsStatus {
    guard(|| {
        let dst = out(out_target)?;
        let gamma = gamma_from_quadratures(gamma_q, gamma_p);
        let kind = PsTargetKind::from_raw(kind).ok_or_else(|| {
            set_error(format!("unknown target kind {kind}"));
            PsStatus::InvalidArgument
        })?;
        let target = match kind {
            PsTargetKind::CatEven => BinaryPhaseTarget::cat_even(gamma),
            PsTargetKind::CatOdd => BinaryPhaseTarget::cat_odd(gamma),
            PsTargetKind::Plus => BinaryPhaseTarget::plus_state(gamma),
            PsTargetKind::Ghz => BinaryPhaseTarget::ghz(n_modes, gamma),
            PsTargetKind::Cccs => {
                let flat = slice_in(edges, 2 * n_edges)?;
                let pairs: Vec<(usize, usize)> = flat.chunks(2).map(|c| (c[0], c[1])).collect();
                BinaryPhaseTarget::cccs(n_modes, &pairs, gamma)
            }
        };
        *dst = Box::into_raw(Box::new(PsTarget(lib(target)?)));
        Ok(())
    })
}

/// # Safety
/// `target` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_target_free(target: *mut PsTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// Heralding probability of the photon-count `pattern` after beamsplitters of transmissivity `tau`.
///
/// # Safety
/// `pattern` must point to `len` values and `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_success_probability(
    state: *const PsState,
    tau: f64,
    pattern: *const u32,
    len: usize,
    out_p: *mut f64,
) -> PsStatus {
    guard(|| {
        let state = state_ref(state)?;
        let dst = out(out_p)?;
        let spec = lib(SubtractionSpec::new(tau, slice_in(pattern, len)?.to_vec()))?;
        *dst = lib(photonsub::success_probability(state, &spec))?;
        Ok(())
    })
}

/// Exact fidelity of the heralded state with `target`, plus the ratio, probability and bounds.
///
/// # Safety
/// Handles must be live, `pattern` must point to `len` values and `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_fidelity(
    state: *const PsState,
    target: *const PsTarget,
    tau: f64,
    pattern: *const u32,
    len: usize,
    report: *mut PsFidelityReport,
) -> PsStatus {
    guard(|| {
        let state = state_ref(state)?;
        let target = target_ref(target)?;
        let dst = out(report)?;
        let spec = lib(SubtractionSpec::new(tau, slice_in(pattern, len)?.to_vec()))?;
        let rep = lib(FidelityEvaluator::new(state, &spec).and_then(|e| e.evaluate(target)))?;
        *dst = PsFidelityReport {
            has_fidelity: rep.fidelity.is_some(),
            fidelity: rep.fidelity.unwrap_or(0.0),
            has_ratio: rep.ratio.is_some(),
            ratio: rep.ratio.unwrap_or(0.0),
            probability: rep.probability,
            bound_general: rep.bound_general,
            has_bound_vacuum: rep.bound_vacuum.is_some(),
            bound_vacuum: rep.bound_vacuum.unwrap_or(0.0),
            phase_factor: rep.phase_factor,
        };
        Ok(())
    })
}

/// `f_N = 1ᵀ tanh(Gr) 1` and its bound `N tanh((N−1) r)` for an `n×n` row-major generator.
///
/// # Safety
/// `g` must point to `n*n` doubles; `out_value` and `out_bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_f_n(
    g: *const f64,
    n: usize,
    r: f64,
    out_value: *mut f64,
    out_bound: *mut f64,
) -> PsStatus {
    guard(|| {
        let g = slice_in(g, n * n)?;
        let value = out(out_value)?;
        let bound = out(out_bound)?;
        let cert = lib(f_n(&square(g, n), r))?;
        *value = cert.value;
        *bound = cert.bound;
        Ok(())
    })
}
