//! C ABI over the multiplicative-array simulator and SIC estimator.
//!
//! Every fallible call returns a [`MasStatus`]; on failure the message is
//! kept per thread and read with [`mas_last_error_message`]. Handles are
//! opaque and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use masound::channel::{gen_ma_cfr, MaCfr};
use masound::io::{read_ma_cfr, write_ma_cfr};
use masound::model::{
    uv_map, Direction, FrequencyGrid, MaGeometry, PathComponent, PhaseModel, ScanGrid,
};
use masound::pattern::chebyshev_taper;
use masound::sic::{run_sic, EstimationReport, EstimatorConfig, StopReason};
use masound::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NoSignal = 3,
    CheckFailed = 4,
    Io = 5,
    IndexOutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasStopReason {
    DynamicRange = 0,
    MaxIterations = 1,
}

/// One propagation path; power in dB, angles in degrees, delay in ns.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MasPath {
    pub power_db: f64,
    pub phase_deg: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub delay_ns: f64,
}

/// Multiplicative array and frequency sweep for [`mas_simulate_ma`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MasMaSetup {
    pub x_count: usize,
    pub y_count: usize,
    pub spacing_wl: f64,
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

/// Estimator settings. Fill with [`mas_estimator_defaults`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MasEstimatorOptions {
    pub epsilon_db: f64,
    pub max_iterations: usize,
    pub pad_factor: usize,
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub phi_start_deg: f64,
    pub phi_stop_deg: f64,
    pub phi_step_deg: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MasEstimatedPath {
    pub power_db: f64,
    pub phase_deg: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub delay_ns: f64,
    pub iteration: usize,
}

/// Sub-array CFRs of a multiplicative array.
pub struct MasMaCfr(MaCfr);

/// Result of [`mas_run_sic`].
pub struct MasReport(EstimationReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MasStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoSignal(_) | Error::NoPeak(_) => MasStatus::NoSignal,
            Error::CheckFailed(_) => MasStatus::CheckFailed,
            Error::Io { .. } => MasStatus::Io,
            _ => MasStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MasStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, recording its error and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MasStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MasStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MasStatus::InvalidInput, format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn mas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Direction cosines of an elevation/azimuth pair in degrees.
///
/// # Safety
/// `u` and `v` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mas_uv_map(
    theta_deg: f64,
    phi_deg: f64,
    u: *mut f64,
    v: *mut f64,
) -> MasStatus {
    guard(|| {
        if u.is_null() || v.is_null() {
            return Err(null("u/v"));
        }
        let p = uv_map(Direction::new(theta_deg, phi_deg)?);
        *u = p.u;
        *v = p.v;
        Ok(())
    })
}

/// Dolph-Chebyshev weights, peak-normalized, written to `out[0..n]`.
///
/// # Safety
/// `out` must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn mas_chebyshev_taper(
    n: usize,
    sidelobe_db: f64,
    out: *mut f64,
) -> MasStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = chebyshev_taper(n, sidelobe_db)?;
        let dst = std::slice::from_raw_parts_mut(out, n);
        for (d, w) in dst.iter_mut().zip(t.weights()) {
            *d = w.re;
        }
        Ok(())
    })
}

/// Noiseless sub-array CFRs of `paths` (may be null when `n_paths` is 0).
///
/// # Safety
/// `setup` and `out` must be valid; `paths` must hold `n_paths` entries.
#[no_mangle]
pub unsafe extern "C" fn mas_simulate_ma(
    setup: *const MasMaSetup,
    paths: *const MasPath,
    n_paths: usize,
    out: *mut *mut MasMaCfr,
) -> MasStatus {
    guard(|| {
        if setup.is_null() || out.is_null() || (paths.is_null() && n_paths > 0) {
            return Err(null("setup/paths/out"));
        }
        let s = &*setup;
        let freqs = FrequencyGrid::new(s.f_start_hz, s.f_stop_hz, s.n_points)?;
        let geometry = MaGeometry::new(s.x_count, s.y_count, s.spacing_wl)?;
        let raw = if n_paths == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(paths, n_paths)
        };
        let comps = raw
            .iter()
            .map(|p| {
                PathComponent::from_db(p.power_db, p.phase_deg, p.theta_deg, p.phi_deg, p.delay_ns)
            })
            .collect::<masound::Result<Vec<_>>>()?;
        let cfr = gen_ma_cfr(&comps, &geometry, &freqs, &PhaseModel::for_grid(&freqs))?;
        *out = Box::into_raw(Box::new(MasMaCfr(cfr)));
        Ok(())
    })
}

/// Reads `cfr_ma_x.csv` and `cfr_ma_y.csv` from `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mas_ma_cfr_read(dir: *const c_char, out: *mut *mut MasMaCfr) -> MasStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(MasMaCfr(read_ma_cfr(&dir)?)));
        Ok(())
    })
}

/// Writes both sub-array files into the existing directory `dir`.
///
/// # Safety
/// `cfr` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mas_ma_cfr_write(cfr: *const MasMaCfr, dir: *const c_char) -> MasStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        let cfr = cfr.as_ref().ok_or_else(|| null("cfr"))?;
        write_ma_cfr(&dir, &cfr.0)?;
        Ok(())
    })
}

/// Element counts and frequency points of a handle.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mas_ma_cfr_dims(
    cfr: *const MasMaCfr,
    x_count: *mut usize,
    y_count: *mut usize,
    n_freq: *mut usize,
) -> MasStatus {
    guard(|| {
        let cfr = cfr.as_ref().ok_or_else(|| null("cfr"))?;
        if x_count.is_null() || y_count.is_null() || n_freq.is_null() {
            return Err(null("x_count/y_count/n_freq"));
        }
        *x_count = cfr.0.x.n_x();
        *y_count = cfr.0.y.n_y();
        *n_freq = cfr.0.freqs().len();
        Ok(())
    })
}

/// # Safety
/// `cfr` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mas_ma_cfr_free(cfr: *mut MasMaCfr) {
    if !cfr.is_null() {
        drop(Box::from_raw(cfr));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mas_estimator_defaults(out: *mut MasEstimatorOptions) -> MasStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = EstimatorConfig::default();
        let span = |v: &[f64]| {
            let step = if v.len() > 1 { v[1] - v[0] } else { 1.0 };
            (v[0], v[v.len() - 1], step)
        };
        let (t0, t1, ts) = span(&c.scan.theta_deg);
        let (p0, p1, ps) = span(&c.scan.phi_deg);
        *out = MasEstimatorOptions {
            epsilon_db: c.epsilon_db,
            max_iterations: c.max_iterations,
            pad_factor: c.pad_factor,
            theta_start_deg: t0,
            theta_stop_deg: t1,
            theta_step_deg: ts,
            phi_start_deg: p0,
            phi_stop_deg: p1,
            phi_step_deg: ps,
        };
        Ok(())
    })
}

/// Runs successive interference cancellation on a handle.
///
/// # Safety
/// `cfr` and `options` must be valid; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mas_run_sic(
    cfr: *const MasMaCfr,
    options: *const MasEstimatorOptions,
    out: *mut *mut MasReport,
) -> MasStatus {
    guard(|| {
        let cfr = cfr.as_ref().ok_or_else(|| null("cfr"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = EstimatorConfig {
            epsilon_db: o.epsilon_db,
            max_iterations: o.max_iterations,
            pad_factor: o.pad_factor,
            scan: ScanGrid::uniform(
                (o.theta_start_deg, o.theta_stop_deg, o.theta_step_deg),
                (o.phi_start_deg, o.phi_stop_deg, o.phi_step_deg),
            )?,
            ..EstimatorConfig::default()
        };
        *out = Box::into_raw(Box::new(MasReport(run_sic(&cfr.0, &config)?)));
        Ok(())
    })
}

/// Number of estimated paths; 0 for a null handle.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mas_report_len(report: *const MasReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.paths.len())
}

/// # Safety
/// `report` must come from this library; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mas_report_path(
    report: *const MasReport,
    index: usize,
    out: *mut MasEstimatedPath,
) -> MasStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = r.0.paths.get(index).ok_or_else(|| {
            Failure(
                MasStatus::IndexOutOfRange,
                format!("path {index} of {}", r.0.paths.len()),
            )
        })?;
        *out = MasEstimatedPath {
            power_db: p.amplitude_db,
            phase_deg: p.amplitude.arg().to_degrees(),
            theta_deg: p.direction.theta_deg,
            phi_deg: p.direction.phi_deg,
            delay_ns: p.delay_s * 1e9,
            iteration: p.iteration,
        };
        Ok(())
    })
}

/// # Safety
/// `report` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mas_report_stop_reason(
    report: *const MasReport,
    out: *mut MasStopReason,
) -> MasStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match r.0.stop_reason {
            StopReason::DynamicRange => MasStopReason::DynamicRange,
            StopReason::MaxIterations => MasStopReason::MaxIterations,
        };
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mas_report_free(report: *mut MasReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
