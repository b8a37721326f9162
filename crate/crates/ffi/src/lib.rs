//! C interface: create a simulation from a TOML configuration, advance it,
//! read interface traces and energies, and run the oracle self-check.
//!
//! Every function returns an [`HsStatus`]. The message of the latest failure
//! on the calling thread can be copied out with [`hs_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use hydrosplit::analysis::energy_report;
use hydrosplit::config::RunConfig;
use hydrosplit::experiments::{build, verify_oracle};
use hydrosplit::problems::Problem;
use hydrosplit::splitting::{CoupledState, StepConfig, Stepper};
use hydrosplit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    Panic = 4,
}

/// Latest values at one Stokes–circuit connection.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HsInterfaceSample {
    pub domain: u32,
    pub circuit: u32,
    pub index: u32,
    pub pressure: f64,
    pub flow: f64,
    pub node_pressure: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HsEnergy {
    pub kinetic: f64,
    pub circuit: f64,
    pub viscous_dissipation: f64,
    pub connection_dissipation: f64,
    pub circuit_dissipation: f64,
    pub stokes_power: f64,
    pub circuit_power: f64,
}

/// Opaque simulation handle.
pub struct HsSimulation {
    problem: Problem,
    stepper: Stepper,
    state: CoupledState,
    steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> HsStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Oracle(_) | Error::SizeMismatch { .. } => {
            HsStatus::InvalidArgument
        }
        _ => HsStatus::SolverFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (HsStatus, String)>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HsStatus::Panic
        }
    }
}

fn fail(e: Error) -> (HsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HsStatus, String) {
    (HsStatus::NullPointer, format!("{what} is null"))
}

/// Reads a configuration; NULL selects the defaults.
unsafe fn read_config(text: *const c_char) -> Result<RunConfig, (HsStatus, String)> {
    if text.is_null() {
        return Ok(RunConfig::default());
    }
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|_| (HsStatus::InvalidArgument, "configuration is not UTF-8".to_string()))?;
    RunConfig::from_toml_str(s).map_err(fail)
}

/// Builds the configured example and sets it to its exact state at t = 0.
///
/// # Safety
/// `config_toml` is NULL or a NUL-terminated string; `out` is a valid
/// pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_create(config_toml: *const c_char, out: *mut *mut HsSimulation) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let cfg = read_config(config_toml)?;
        let problem = build(&cfg).map_err(fail)?;
        let step = StepConfig::new(cfg.dt, cfg.substeps().map_err(fail)?).map_err(fail)?;
        let stepper = Stepper::new(Arc::clone(&problem.system), step).map_err(fail)?;
        let state = problem.exact_state(0.0).map_err(fail)?;
        let sim = HsSimulation {
            problem,
            stepper,
            state,
            steps: 0,
        };
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Advances by `steps` global time steps. On failure the state is left at
/// the last completed step.
///
/// # Safety
/// `sim` is NULL or a handle from [`hs_simulation_create`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_advance(sim: *mut HsSimulation, steps: usize) -> HsStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        for _ in 0..steps {
            let (next, _) = sim.stepper.advance(&sim.state, sim.steps + 1).map_err(fail)?;
            sim.state = next;
            sim.steps += 1;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` is a live handle or NULL; `out` is valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_time(sim: *const HsSimulation, out: *mut f64) -> HsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sim.state.t;
        Ok(())
    })
}

/// # Safety
/// `sim` is a live handle or NULL; `out` is valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_interface_count(sim: *const HsSimulation, out: *mut usize) -> HsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sim.state.interfaces.len();
        Ok(())
    })
}

/// # Safety
/// `sim` is a live handle or NULL; `out` is valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_interface(
    sim: *const HsSimulation,
    index: usize,
    out: *mut HsInterfaceSample,
) -> HsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = sim.state.interfaces.get(index).ok_or_else(|| {
            (
                HsStatus::InvalidArgument,
                format!("interface index {index} out of range (count {})", sim.state.interfaces.len()),
            )
        })?;
        *out = HsInterfaceSample {
            domain: s.id.domain as u32,
            circuit: s.id.circuit as u32,
            index: s.id.k as u32,
            pressure: s.pressure,
            flow: s.flow,
            node_pressure: s.node_pressure,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` is a live handle or NULL; `out` is valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_energy(sim: *const HsSimulation, out: *mut HsEnergy) -> HsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = energy_report(&sim.problem.system, &sim.state);
        *out = HsEnergy {
            kinetic: e.e_omega,
            circuit: e.e_ups,
            viscous_dissipation: e.d_omega,
            connection_dissipation: e.d_rc,
            circuit_dissipation: e.u_ups,
            stokes_power: e.f_omega,
            circuit_power: e.f_ups,
        };
        Ok(())
    })
}

/// Runs the oracle self-check; `passed` receives 1 or 0. The names of
/// failed checks are stored as the last error.
///
/// # Safety
/// `config_toml` is NULL or a NUL-terminated string; `passed` is valid or
/// NULL.
#[no_mangle]
pub unsafe extern "C" fn hs_verify_oracle(config_toml: *const c_char, passed: *mut i32) -> HsStatus {
    guard(|| {
        let passed = passed.as_mut().ok_or_else(|| null("passed"))?;
        let cfg = read_config(config_toml)?;
        let report = verify_oracle(&cfg).map_err(fail)?;
        *passed = i32::from(report.passed());
        if !report.passed() {
            let names: Vec<&str> = report.failures().map(|r| r.name.as_str()).collect();
            set_error(format!("failed checks: {}", names.join(", ")));
        }
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` is NULL or a handle from [`hs_simulation_create`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_simulation_free(sim: *mut HsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns its full length in bytes. Passing a NULL
/// `buf` only queries the length.
///
/// # Safety
/// `buf` is NULL or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
