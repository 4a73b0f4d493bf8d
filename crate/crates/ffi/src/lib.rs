//! C ABI for `tankmpc`.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Every fallible call returns a [`TankMpcStatus`]; on
//! failure a description is available from [`tankmpc_last_error_message`]
//! on the same thread. Matrices are row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DVector;
use tankmpc::config::RunConfig;
use tankmpc::mpc::{ControllerState, MpcConfig, MpcController};
use tankmpc::{linearize, run_closed_loop, Error, Scenario, SimulationLog};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TankMpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    DomainError = 4,
    SingularError = 5,
    RuntimeError = 6,
    IoError = 7,
    Panic = 8,
}

/// Scenario description: plant, operating point, horizons, run profile.
pub struct TankMpcScenario {
    inner: Scenario,
}

/// A designed controller together with its receding-horizon memory.
pub struct TankMpcController {
    design: MpcController,
    state: ControllerState,
}

/// Result of a closed-loop run.
pub struct TankMpcLog {
    inner: SimulationLog,
}

/// One sample of a closed-loop run; levels and controls are deviations from
/// the operating point, `fi*_abs` are absolute inflows.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TankMpcLogRow {
    pub t: f64,
    pub r1: f64,
    pub r2: f64,
    pub h1: f64,
    pub h2: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub fi1_abs: f64,
    pub fi2_abs: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(TankMpcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Domain(_) | Error::Infeasible(_) => TankMpcStatus::DomainError,
            Error::SingularLinearization(_) | Error::SingularHessian(_) => {
                TankMpcStatus::SingularError
            }
            Error::InvalidConfig(_) | Error::DimensionMismatch { .. } => {
                TankMpcStatus::InvalidArgument
            }
            Error::NonFinite(_) | Error::AtSample { .. } => TankMpcStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TankMpcStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TankMpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            TankMpcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TankMpcStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn read_pair(p: *const f64, what: &str) -> Result<[f64; 2], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1)])
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            TankMpcStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn column(v: [f64; 2]) -> DVector<f64> {
    DVector::from_row_slice(&v)
}

fn pair(v: &DVector<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tankmpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn tankmpc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the reference scenario (np = 10, nc = 3, ts = 0.05 s, rw = 1).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_scenario_new_reference(
    out: *mut *mut TankMpcScenario,
) -> TankMpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(
            out,
            TankMpcScenario {
                inner: Scenario::reference(),
            },
        );
        Ok(())
    })
}

/// Parses a scenario from configuration text (the `key = value` format).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_scenario_from_config(
    text: *const c_char,
    out: *mut *mut TankMpcScenario,
) -> TankMpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(text, "text")?;
        let cfg = RunConfig::parse(text)
            .map_err(|e| Failure(TankMpcStatus::ConfigError, e.to_string()))?;
        let inner = cfg
            .scenario()
            .map_err(|e| Failure(TankMpcStatus::ConfigError, e.to_string()))?;
        put(out, TankMpcScenario { inner });
        Ok(())
    })
}

/// Replaces the horizons and move weight of a scenario.
///
/// # Safety
/// `scenario` must come from a `tankmpc_scenario_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_scenario_set_mpc(
    scenario: *mut TankMpcScenario,
    np: usize,
    nc: usize,
    rw: f64,
) -> TankMpcStatus {
    guard(|| {
        let s = as_mut(scenario, "scenario")?;
        s.inner.mpc = MpcConfig::new(np, nc, rw)?;
        Ok(())
    })
}

/// Sets the simulated duration in seconds.
///
/// # Safety
/// `scenario` must come from a `tankmpc_scenario_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_scenario_set_duration(
    scenario: *mut TankMpcScenario,
    t_end: f64,
) -> TankMpcStatus {
    guard(|| {
        let s = as_mut(scenario, "scenario")?;
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Failure(
                TankMpcStatus::InvalidArgument,
                format!("t_end must be positive, got {t_end}"),
            ));
        }
        s.inner.t_end = t_end;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or come from a `tankmpc_scenario_*` constructor
/// and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_scenario_free(scenario: *mut TankMpcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Steady inflows `[fi1_bar, fi2_bar]` holding the operating levels.
///
/// # Safety
/// `scenario` must be valid; `out` must point to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_steady_inflows(
    scenario: *const TankMpcScenario,
    out: *mut f64,
) -> TankMpcStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let op = s.inner.operating_point()?;
        *out = op.fi1_bar;
        *out.add(1) = op.fi2_bar;
        Ok(())
    })
}

/// Continuous linearization at the scenario's operating point: `a_out` and
/// `b_out` each receive a row-major 2x2 matrix.
///
/// # Safety
/// `scenario` must be valid; `a_out` and `b_out` must point to 4 writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_linearize(
    scenario: *const TankMpcScenario,
    a_out: *mut f64,
    b_out: *mut f64,
) -> TankMpcStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if a_out.is_null() || b_out.is_null() {
            return Err(null("output matrix"));
        }
        let op = s.inner.operating_point()?;
        let lin = linearize(&s.inner.params, &op)?;
        for i in 0..2 {
            for j in 0..2 {
                *a_out.add(2 * i + j) = lin.a[(i, j)];
                *b_out.add(2 * i + j) = lin.b[(i, j)];
            }
        }
        Ok(())
    })
}

/// Designs the controller for a scenario and starts it at zero deviation.
///
/// # Safety
/// `scenario` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_controller_new(
    scenario: *const TankMpcScenario,
    out: *mut *mut TankMpcController,
) -> TankMpcStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        s.inner.validate()?;
        let (_, design) = s.inner.design()?;
        let state = design.init(&column([0.0, 0.0]))?;
        put(out, TankMpcController { design, state });
        Ok(())
    })
}

/// Restarts the controller memory from a measurement, with zero control.
///
/// # Safety
/// `controller` must be valid; `measurement` must point to 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_controller_reset(
    controller: *mut TankMpcController,
    measurement: *const f64,
) -> TankMpcStatus {
    guard(|| {
        let c = as_mut(controller, "controller")?;
        let y = read_pair(measurement, "measurement")?;
        c.state = c.design.init(&column(y))?;
        Ok(())
    })
}

/// One receding-horizon step. `measurement` and `setpoint` are level
/// deviations (m); `u_out` receives the inflow deviations to apply (m^3/s).
///
/// # Safety
/// `controller` must be valid; the three arrays must hold 2 doubles each.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_controller_step(
    controller: *mut TankMpcController,
    measurement: *const f64,
    setpoint: *const f64,
    u_out: *mut f64,
) -> TankMpcStatus {
    guard(|| {
        let c = as_mut(controller, "controller")?;
        let y = read_pair(measurement, "measurement")?;
        let r = read_pair(setpoint, "setpoint")?;
        if u_out.is_null() {
            return Err(null("u_out"));
        }
        let (next, u) = c.design.step(&c.state, &column(y), &column(r))?;
        c.state = next;
        let u = pair(&u);
        *u_out = u[0];
        *u_out.add(1) = u[1];
        Ok(())
    })
}

/// # Safety
/// `controller` must be NULL or a live handle from [`tankmpc_controller_new`].
#[no_mangle]
pub unsafe extern "C" fn tankmpc_controller_free(controller: *mut TankMpcController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// Runs the scenario in closed loop against the nonlinear plant.
///
/// # Safety
/// `scenario` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_simulate(
    scenario: *const TankMpcScenario,
    out: *mut *mut TankMpcLog,
) -> TankMpcStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = run_closed_loop(&s.inner)?;
        put(out, TankMpcLog { inner });
        Ok(())
    })
}

/// Number of rows in a log; 0 for NULL.
///
/// # Safety
/// `log` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_log_len(log: *const TankMpcLog) -> usize {
    log.as_ref().map_or(0, |l| l.inner.len())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_log_row(
    log: *const TankMpcLog,
    index: usize,
    out: *mut TankMpcLogRow,
) -> TankMpcStatus {
    guard(|| {
        let l = as_ref(log, "log")?;
        let out = as_mut(out, "out")?;
        let row = l.inner.rows.get(index).ok_or_else(|| {
            Failure(
                TankMpcStatus::InvalidArgument,
                format!("row {index} out of range (len {})", l.inner.len()),
            )
        })?;
        *out = TankMpcLogRow {
            t: row.t,
            r1: row.r[0],
            r2: row.r[1],
            h1: row.h[0],
            h2: row.h[1],
            u1: row.u[0],
            u2: row.u[1],
            u3: row.u3,
            fi1_abs: row.fi_abs[0],
            fi2_abs: row.fi_abs[1],
        };
        Ok(())
    })
}

/// Writes the log as CSV (same layout as `tankmpc simulate`).
///
/// # Safety
/// `log` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn tankmpc_log_write_csv(
    log: *const TankMpcLog,
    path: *const c_char,
) -> TankMpcStatus {
    guard(|| {
        let l = as_ref(log, "log")?;
        let path = c_str(path, "path")?;
        tankmpc::cli::write_csv_atomic(&l.inner, Path::new(path))
            .map_err(|e| Failure(TankMpcStatus::IoError, e.to_string()))
    })
}

/// # Safety
/// `log` must be NULL or a live handle from [`tankmpc_simulate`].
#[no_mangle]
pub unsafe extern "C" fn tankmpc_log_free(log: *mut TankMpcLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
