//! C ABI over `lxe-core`.
//!
//! Every fallible function returns an [`LxeStatus`] and writes its result
//! through an out-pointer. On failure the message is kept in a thread-local
//! buffer readable with [`lxe_last_error_message`] until the next failing
//! call on the same thread. Handles are opaque and must be released with
//! their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lxe_core::cft;
use lxe_core::circuit::{
    initial_state, stream_rng, Boundary, EnsembleParams, InitialState, Model, Stream,
};
use lxe_core::experiment::{self, estimate_leak_probability, RunConfig};
use lxe_core::lxe::{estimate_lxe, LxeEstimate, LxeRequest, Scope};
use lxe_core::percolation::crossing_probability_mc;
use lxe_core::stabilizer::{PauliOperator, Sign, StabilizerState};
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SimulationError = 3,
    IoError = 4,
    ConfigError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxeModel {
    ZzX = 0,
    Hybrid = 1,
    ZizXx = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxeBoundary {
    Open = 0,
    Periodic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxeScope {
    All = 0,
    XOnly = 1,
    ZOnly = 2,
}

/// Initial states. Block kinds use the block width passed alongside.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxeStateKind {
    GhzPlus = 0,
    GhzMinus = 1,
    BlockPlus = 2,
    BlockMinus = 3,
    ProductPlusX = 4,
}

/// Mean, Bernoulli standard error and sample count of an estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LxeResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl From<LxeEstimate> for LxeResult {
    fn from(e: LxeEstimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.stderr,
            n_samples: e.n_samples,
        }
    }
}

/// Opaque stabilizer state with its own outcome stream.
pub struct LxeState {
    state: StabilizerState,
    rng: ChaCha8Rng,
}

/// Opaque ensemble description.
pub struct LxeEnsemble {
    params: EnsembleParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(LxeStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(LxeStatus::InvalidArgument, msg.into())
    }
    fn sim(err: impl std::fmt::Display) -> Self {
        Failure(LxeStatus::SimulationError, err.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LxeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LxeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lxe-ffi");
            LxeStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(LxeStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn string_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::arg(format!("{name} is not UTF-8")))
}

fn boundary(b: LxeBoundary) -> Boundary {
    match b {
        LxeBoundary::Open => Boundary::Open,
        LxeBoundary::Periodic => Boundary::Periodic,
    }
}

fn scope(s: LxeScope) -> Scope {
    match s {
        LxeScope::All => Scope::All,
        LxeScope::XOnly => Scope::XOnly,
        LxeScope::ZOnly => Scope::ZOnly,
    }
}

fn state_kind(kind: LxeStateKind, block: usize) -> InitialState {
    match kind {
        LxeStateKind::GhzPlus => InitialState::GhzPlus,
        LxeStateKind::GhzMinus => InitialState::GhzMinus,
        LxeStateKind::BlockPlus => InitialState::PsiPlus(block),
        LxeStateKind::BlockMinus => InitialState::PsiMinus(block),
        LxeStateKind::ProductPlusX => InitialState::ProductPlusX,
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lxe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lxe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an initial state on `n_sites` qubits. `block` is the GHZ block
/// width of the block kinds and is ignored otherwise.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn lxe_state_new(
    kind: LxeStateKind,
    n_sites: usize,
    block: usize,
    seed: u64,
    out: *mut *mut LxeState,
) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        let state = initial_state(state_kind(kind, block), n_sites)
            .map_err(|e| Failure::arg(e.to_string()))?;
        let handle = Box::new(LxeState {
            state,
            rng: stream_rng(seed, Stream::Outcomes),
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// # Safety
/// `state` must come from [`lxe_state_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lxe_state_free(state: *mut LxeState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of qubits.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_state_n_sites(state: *const LxeState, out: *mut usize) -> LxeStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        *out = (*state).state.n_sites();
        Ok(())
    })
}

/// Number of independent stabilizer generators.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_state_rank(state: *const LxeState, out: *mut usize) -> LxeStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        *out = (*state).state.rank();
        Ok(())
    })
}

/// Measures a Pauli string such as `"-XZ_Y"` (`_` or `I` for identity).
/// Writes `+1` or `-1` to `outcome` and whether it was random to `random`.
///
/// # Safety
/// `state` and the out-pointers must be valid; `pauli` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lxe_state_measure(
    state: *mut LxeState,
    pauli: *const c_char,
    outcome: *mut i32,
    random: *mut bool,
) -> LxeStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(outcome, "outcome")?;
        non_null(random, "random")?;
        let op: PauliOperator = string_arg(pauli, "pauli")?
            .parse()
            .map_err(|e: lxe_core::stabilizer::StabilizerError| Failure::arg(e.to_string()))?;
        let handle = &mut *state;
        let m = handle
            .state
            .measure(&op, None, &mut handle.rng)
            .map_err(|e| Failure::arg(e.to_string()))?;
        *outcome = if m.outcome == Sign::Plus { 1 } else { -1 };
        *random = m.was_random;
        Ok(())
    })
}

/// Creates an ensemble with `T` steps on `L` qubits at X-measurement rate `p`.
/// Other fields start at zero, open boundaries (periodic for ZIZ–XX) and a
/// full-width GHZ block.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_new(
    model: LxeModel,
    n_sites: usize,
    n_steps: usize,
    p: f64,
    out: *mut *mut LxeEnsemble,
) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = match model {
            LxeModel::ZzX => EnsembleParams::zzx(n_sites, n_steps, p),
            LxeModel::Hybrid => EnsembleParams {
                model: Model::Hybrid,
                ..EnsembleParams::zzx(n_sites, n_steps, p)
            },
            LxeModel::ZizXx => EnsembleParams::zizxx(n_sites, n_steps, p, 0.0),
        };
        *out = Box::into_raw(Box::new(LxeEnsemble { params }));
        Ok(())
    })
}

/// # Safety
/// `ensemble` must come from [`lxe_ensemble_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_free(ensemble: *mut LxeEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

unsafe fn with_ensemble(
    ensemble: *mut LxeEnsemble,
    f: impl FnOnce(&mut EnsembleParams),
) -> LxeStatus {
    guard(|| {
        non_null(ensemble, "ensemble")?;
        f(&mut (*ensemble).params);
        Ok(())
    })
}

/// Unitary rate of the hybrid model.
///
/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_q(ensemble: *mut LxeEnsemble, q: f64) -> LxeStatus {
    with_ensemble(ensemble, |e| e.q = q)
}

/// XX rate of the ZIZ–XX model.
///
/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_r_xx(ensemble: *mut LxeEnsemble, r_xx: f64) -> LxeStatus {
    with_ensemble(ensemble, |e| e.r_xx = r_xx)
}

/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_noise(
    ensemble: *mut LxeEnsemble,
    noise_rate: f64,
) -> LxeStatus {
    with_ensemble(ensemble, |e| e.noise_rate = noise_rate)
}

/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_boundary(
    ensemble: *mut LxeEnsemble,
    bc: LxeBoundary,
) -> LxeStatus {
    with_ensemble(ensemble, |e| e.boundary = boundary(bc))
}

/// GHZ block width of the block states; 0 restores the full width.
///
/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_block_width(
    ensemble: *mut LxeEnsemble,
    r: usize,
) -> LxeStatus {
    with_ensemble(ensemble, |e| e.r_ghz = (r > 0).then_some(r))
}

/// # Safety
/// `ensemble` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_ensemble_set_scramble_depth(
    ensemble: *mut LxeEnsemble,
    depth: usize,
) -> LxeStatus {
    with_ensemble(ensemble, |e| e.scramble_depth = depth)
}

/// LXE between the GHZ± pair (in the given order) over `n_circuits`
/// realizations. GHZ kinds become block states of the ensemble's width.
///
/// # Safety
/// `ensemble` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_estimate(
    ensemble: *const LxeEnsemble,
    rho: LxeStateKind,
    sigma: LxeStateKind,
    record_scope: LxeScope,
    n_circuits: u64,
    records_per_circuit: u64,
    master_seed: u64,
    out: *mut LxeResult,
) -> LxeStatus {
    guard(|| {
        non_null(ensemble, "ensemble")?;
        non_null(out, "out")?;
        let params = (*ensemble).params.clone();
        let r = params.block_width();
        let req = LxeRequest::new(params, n_circuits, master_seed)
            .states(state_kind(rho, r), state_kind(sigma, r))
            .scope(scope(record_scope))
            .records_per_circuit(records_per_circuit);
        *out = estimate_lxe(&req).map_err(Failure::sim)?.into();
        Ok(())
    })
}

/// Critical open-boundary LXE at aspect `T/L` and block width `r/L`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_cardy_chi_obc(aspect: f64, r_over_l: f64, out: *mut f64) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = cft::cardy_chi_obc(aspect, r_over_l).map_err(|e| Failure::arg(e.to_string()))?;
        Ok(())
    })
}

/// Periodic prediction `amplitude · [2cosh(2π·aspect) − 2]^(−5/48)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_chi_pbc(aspect: f64, amplitude: f64, out: *mut f64) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        if aspect.is_nan() || aspect <= 0.0 {
            return Err(Failure::arg(format!("aspect {aspect} must be positive")));
        }
        *out = cft::chi_pbc(aspect, amplitude);
        Ok(())
    })
}

/// Monte Carlo spanning probability of the equivalent bond percolation.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_crossing_probability_mc(
    n_sites: usize,
    n_steps: usize,
    p: f64,
    r: usize,
    bc: LxeBoundary,
    n_samples: u64,
    seed: u64,
    out: *mut LxeResult,
) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = crossing_probability_mc(n_sites, n_steps, p, r, boundary(bc), n_samples, seed)
            .map_err(|e| Failure::arg(e.to_string()))?
            .into();
        Ok(())
    })
}

/// Probability that a depth-`L` symmetric scrambler leaks the GHZ sign.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lxe_leak_probability(
    n_sites: usize,
    n_samples: u64,
    seed: u64,
    out: *mut LxeResult,
) -> LxeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = estimate_leak_probability(n_sites, n_samples, seed)
            .map_err(|e| Failure::arg(e.to_string()))?
            .into();
        Ok(())
    })
}

/// Runs a JSON config file and writes the CSV and sidecar to `csv_path`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn lxe_run_config(
    config_path: *const c_char,
    csv_path: *const c_char,
) -> LxeStatus {
    guard(|| {
        let config = Path::new(string_arg(config_path, "config_path")?);
        let csv = Path::new(string_arg(csv_path, "csv_path")?);
        let classify = |e: experiment::ExperimentError| {
            let status = match e {
                experiment::ExperimentError::Config { .. } => LxeStatus::ConfigError,
                experiment::ExperimentError::Io { .. } | experiment::ExperimentError::Csv(_) => {
                    LxeStatus::IoError
                }
                _ => LxeStatus::SimulationError,
            };
            Failure(status, e.to_string())
        };
        let cfg = RunConfig::load(config).map_err(classify)?;
        let result = experiment::run(&cfg).map_err(classify)?;
        experiment::emit(&result, csv).map_err(classify)?;
        Ok(())
    })
}
