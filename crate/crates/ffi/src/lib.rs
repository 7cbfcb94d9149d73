//! C ABI over the `glmmhd` solver.
//!
//! Every function returns a [`GlmStatus`]; on failure a message is kept per
//! thread and can be fetched with [`glm_last_error`]. Simulations are opaque
//! handles created by [`glm_simulation_new`] and released with
//! [`glm_simulation_free`]. Panics never cross the boundary.

// `!(x > 0.0)` is deliberate: NaN must fail positivity guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glmmhd::config::RunConfig;
use glmmhd::diagnostics::DiagnosticsRecord;
use glmmhd::physics::{ConservedState, NVAR};
use glmmhd::riemann::hlld_flux;
use glmmhd::runner::Simulation;
use glmmhd::Error;

/// Number of doubles per cell in state buffers.
pub const GLM_NVAR: usize = 9;
const _: () = assert!(GLM_NVAR == NVAR);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// Inadmissible state or bad numerical parameter.
    Numerical = 4,
    SolverFailure = 5,
    /// The simulation already reached its end time.
    Finished = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// Per-step diagnostics.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GlmDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub ch: f64,
    pub bdiv_max: f64,
    pub energy: f64,
    pub helicity_rate: f64,
    pub leaf_count: u64,
    pub virtual_count: u64,
    pub dc_running: f64,
}

impl From<&DiagnosticsRecord> for GlmDiagnostics {
    fn from(d: &DiagnosticsRecord) -> Self {
        Self {
            t: d.t,
            dt: d.dt,
            ch: d.ch,
            bdiv_max: d.bdiv_max,
            energy: d.energy,
            helicity_rate: d.helicity_rate,
            leaf_count: d.leaf_count as u64,
            virtual_count: d.virtual_count as u64,
            dc_running: d.dc_running,
        }
    }
}

/// Opaque simulation handle.
pub struct GlmSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GlmStatus {
    match e {
        Error::Config(_) | Error::DomainMismatch(_) | Error::LevelOutOfRange { .. } => GlmStatus::Config,
        Error::SolverFailure { .. } => GlmStatus::SolverFailure,
        Error::Io(_) | Error::Json(_) | Error::Snapshot { .. } => GlmStatus::Io,
        _ => GlmStatus::Numerical,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (GlmStatus, String)>) -> GlmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GlmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside glmmhd".into());
            GlmStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GlmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GlmStatus, String) {
    (GlmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn sim_mut<'a>(sim: *mut GlmSimulation) -> Result<&'a mut Simulation, (GlmStatus, String)> {
    unsafe { sim.as_mut() }.map(|s| &mut s.sim).ok_or_else(|| null("simulation"))
}

unsafe fn sim_ref<'a>(sim: *const GlmSimulation) -> Result<&'a Simulation, (GlmStatus, String)> {
    unsafe { sim.as_ref() }.map(|s| &s.sim).ok_or_else(|| null("simulation"))
}

/// Copy the last error message of this thread into `buf` (NUL terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn glm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Create a simulation from `key = value` configuration text (the keys of
/// the command line). Null or empty text selects the defaults.
///
/// # Safety
/// `config` must be null or a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_new(config: *const c_char, out: *mut *mut GlmSimulation) -> GlmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = ptr::null_mut() };
        let text = if config.is_null() {
            ""
        } else {
            unsafe { CStr::from_ptr(config) }
                .to_str()
                .map_err(|_| (GlmStatus::InvalidArgument, "config is not UTF-8".to_string()))?
        };
        let cfg = RunConfig::from_kv(text).map_err(lib_err)?;
        let sim = Simulation::new(cfg).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(GlmSimulation { sim })) };
        Ok(())
    })
}

/// Release a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from [`glm_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_free(sim: *mut GlmSimulation) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advance one time step; `out` (optional) receives its diagnostics.
///
/// # Safety
/// `sim` must be a live handle; `out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_step(sim: *mut GlmSimulation, out: *mut GlmDiagnostics) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_mut(sim) }?;
        if s.finished() {
            return Err((GlmStatus::Finished, "simulation already reached t_end".into()));
        }
        let d = s.step(None).map_err(lib_err)?;
        if let Some(o) = unsafe { out.as_mut() } {
            *o = (&d).into();
        }
        Ok(())
    })
}

/// Advance until `t` or the configured end time, whichever comes first.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_run_until(sim: *mut GlmSimulation, t: f64) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_mut(sim) }?;
        if t.is_nan() {
            return Err((GlmStatus::InvalidArgument, "t is NaN".into()));
        }
        s.run_until(t, |_| {}).map_err(lib_err)
    })
}

/// Diagnostics of the current state.
///
/// # Safety
/// `sim` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_diagnostics(sim: *const GlmSimulation, out: *mut GlmDiagnostics) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_ref(sim) }?;
        let o = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *o = s.diagnostics().into();
        Ok(())
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_time(sim: *const GlmSimulation) -> f64 {
    unsafe { sim.as_ref() }.map_or(f64::NAN, |s| s.sim.time())
}

/// Cells currently advanced in time (0 for a null handle).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_leaf_count(sim: *const GlmSimulation) -> u64 {
    unsafe { sim.as_ref() }.map_or(0, |s| s.sim.leaf_count() as u64)
}

/// 1 when the end time is reached, 0 otherwise (and for null).
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_finished(sim: *const GlmSimulation) -> i32 {
    unsafe { sim.as_ref() }.map_or(0, |s| s.sim.finished() as i32)
}

/// Time-averaged compression in percent.
///
/// # Safety
/// `sim` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_compression(sim: *const GlmSimulation, out: *mut f64) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_ref(sim) }?;
        let o = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *o = s.compression().map_err(lib_err)?;
        Ok(())
    })
}

/// Size of the finest uniform grid.
///
/// # Safety
/// `sim` must be a live handle; `nx`, `ny` valid.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_grid_size(sim: *const GlmSimulation, nx: *mut u64, ny: *mut u64) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_ref(sim) }?;
        if nx.is_null() || ny.is_null() {
            return Err(null("nx/ny"));
        }
        let n = 1u64 << s.config().level;
        unsafe {
            *nx = n;
            *ny = n;
        }
        Ok(())
    })
}

/// Copy the solution on the finest uniform grid into `buf`: `nx * ny` cells,
/// row-major, `GLM_NVAR` doubles each in the order
/// (rho, E, rho ux, rho uy, rho uz, Bx, By, Bz, psi).
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn glm_simulation_copy_field(sim: *const GlmSimulation, buf: *mut f64, len: usize) -> GlmStatus {
    guard(|| {
        let s = unsafe { sim_ref(sim) }?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let grid = s.uniform_field();
        let need = grid.cell_count() * NVAR;
        if len < need {
            return Err((GlmStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        let out = unsafe { std::slice::from_raw_parts_mut(buf, need) };
        for (chunk, (_, _, q)) in out.chunks_exact_mut(NVAR).zip(grid.interior()) {
            chunk.copy_from_slice(&q.to_array());
        }
        Ok(())
    })
}

/// GLM-HLLD x-direction interface flux between two conserved states.
///
/// # Safety
/// `ql`, `qr` and `out` must each point to `GLM_NVAR` doubles.
#[no_mangle]
pub unsafe extern "C" fn glm_hlld_flux_x(
    ql: *const f64,
    qr: *const f64,
    gamma: f64,
    ch: f64,
    out: *mut f64,
) -> GlmStatus {
    guard(|| {
        if ql.is_null() || qr.is_null() || out.is_null() {
            return Err(null("state or output"));
        }
        let read = |p: *const f64| {
            let mut a = [0.0; NVAR];
            a.copy_from_slice(unsafe { std::slice::from_raw_parts(p, NVAR) });
            ConservedState::from_array(a)
        };
        if !(gamma > 1.0) {
            return Err((GlmStatus::InvalidArgument, format!("gamma must exceed 1 (got {gamma})")));
        }
        let f = hlld_flux(&read(ql), &read(qr), gamma, ch).map_err(lib_err)?;
        unsafe { std::slice::from_raw_parts_mut(out, NVAR) }.copy_from_slice(&f.to_array());
        Ok(())
    })
}
