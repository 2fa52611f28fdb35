//! C ABI over `leovec-core`.
//!
//! Scenarios and reports are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`LeovecStatus`]; on failure a
//! message is kept per thread and read with [`leovec_last_error_message`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use leovec_core::config::{load_scenario, parse_override, ScenarioConfig};
use leovec_core::engine::{self, output, EngineError, SimReport};
use leovec_core::{link, orbit, policy};

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeovecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Constellation = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct LeovecScenario {
    cfg: ScenarioConfig,
}

/// Opaque simulation report handle.
pub struct LeovecReport {
    report: SimReport,
}

/// Aggregate results of one run. `median_delay_s` is NaN when no frame completed.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeovecMetrics {
    pub generated: u64,
    pub onboard: u64,
    pub offloaded: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub p_rt: f64,
    pub p_d: f64,
    pub frac_onboard: f64,
    pub frac_offload: f64,
    pub frac_drop: f64,
    pub rho: f64,
    pub median_delay_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: LeovecStatus, msg: impl Into<String>) -> LeovecStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> LeovecStatus) -> LeovecStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(LeovecStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, LeovecStatus> {
    if p.is_null() {
        return Err(fail(LeovecStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LeovecStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn engine_status(e: &EngineError) -> LeovecStatus {
    if e.is_config() {
        LeovecStatus::Config
    } else {
        LeovecStatus::Constellation
    }
}

/// Copy `text` plus a NUL into `buf`. `needed` (if non-null) receives the
/// required size including the NUL.
unsafe fn copy_out(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> LeovecStatus {
    let n = text.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return fail(LeovecStatus::BufferTooSmall, format!("buffer of {cap} bytes, {n} needed"));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    LeovecStatus::Ok
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> LeovecStatus {
    *out = Box::into_raw(Box::new(value));
    LeovecStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn leovec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the calling thread's last error message into `buf`; returns the size
/// needed including the NUL (0 when there is no message).
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn leovec_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if e.is_empty() {
            return 0;
        }
        let n = e.len() + 1;
        if !buf.is_null() && cap > 0 {
            let k = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, k);
            *buf.add(k) = 0;
        }
        n
    })
}

/// New scenario with the reference parameter set.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_table1(out: *mut *mut LeovecScenario) -> LeovecStatus {
    guard(|| {
        if out.is_null() {
            return fail(LeovecStatus::NullPointer, "out is null");
        }
        put(out, LeovecScenario {
            cfg: ScenarioConfig::table1(),
        })
    })
}

/// Parse a scenario from JSON text. Relative constellation paths resolve
/// against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_from_json(json: *const c_char, out: *mut *mut LeovecScenario) -> LeovecStatus {
    guard(|| {
        if out.is_null() {
            return fail(LeovecStatus::NullPointer, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_json(text, None) {
            Ok(cfg) => put(out, LeovecScenario { cfg }),
            Err(e) => fail(LeovecStatus::Config, e.to_string()),
        }
    })
}

/// Load a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_load(path: *const c_char, out: *mut *mut LeovecScenario) -> LeovecStatus {
    guard(|| {
        if out.is_null() {
            return fail(LeovecStatus::NullPointer, "out is null");
        }
        let p = match str_arg(path, "path") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_scenario(Path::new(p), &[]) {
            Ok(cfg) => put(out, LeovecScenario { cfg }),
            Err(leovec_core::config::ConfigError::Io { .. }) => fail(LeovecStatus::Io, format!("cannot read {p}")),
            Err(e) => fail(LeovecStatus::Config, e.to_string()),
        }
    })
}

/// Set one key (dotted for nested settings) from its JSON or bare-string value.
/// The scenario is unchanged on error.
///
/// # Safety
/// `scenario` must come from this library; `key`/`value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_set(
    scenario: *mut LeovecScenario,
    key: *const c_char,
    value: *const c_char,
) -> LeovecStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else {
            return fail(LeovecStatus::NullPointer, "scenario is null");
        };
        let (k, v) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let pair = match parse_override(&format!("{k}={v}")) {
            Ok(p) => p,
            Err(e) => return fail(LeovecStatus::Config, e.to_string()),
        };
        match s.cfg.with_overrides(&[pair]) {
            Ok(cfg) => {
                s.cfg = cfg;
                LeovecStatus::Ok
            }
            Err(e) => fail(LeovecStatus::Config, e.to_string()),
        }
    })
}

/// Serialize the effective scenario as JSON into `buf`.
///
/// # Safety
/// `scenario` must come from this library; `buf` null or valid for `cap` bytes;
/// `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_to_json(
    scenario: *const LeovecScenario,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> LeovecStatus {
    guard(|| match scenario.as_ref() {
        Some(s) => copy_out(&s.cfg.to_json_pretty(), buf, cap, needed),
        None => fail(LeovecStatus::NullPointer, "scenario is null"),
    })
}

/// # Safety
/// `scenario` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn leovec_scenario_free(scenario: *mut LeovecScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run the scenario with `seed` (overriding the scenario's own).
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leovec_simulate(
    scenario: *const LeovecScenario,
    seed: u64,
    out: *mut *mut LeovecReport,
) -> LeovecStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(LeovecStatus::NullPointer, "scenario is null");
        };
        if out.is_null() {
            return fail(LeovecStatus::NullPointer, "out is null");
        }
        let mut cfg = s.cfg.clone();
        cfg.seed = seed;
        match engine::run_simulation(&cfg) {
            Ok(report) => put(out, LeovecReport { report }),
            Err(e) => fail(engine_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn leovec_report_metrics(report: *const LeovecReport, out: *mut LeovecMetrics) -> LeovecStatus {
    guard(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(LeovecStatus::NullPointer, "report or out is null");
        };
        let m = &r.report.metrics;
        *out = LeovecMetrics {
            generated: m.generated,
            onboard: m.onboard,
            offloaded: m.offloaded,
            dropped: m.dropped,
            in_flight: m.in_flight,
            p_rt: m.p_rt,
            p_d: m.p_d,
            frac_onboard: m.frac_onboard,
            frac_offload: m.frac_offload,
            frac_drop: m.frac_drop,
            rho: m.rho,
            median_delay_s: m.delay.map_or(f64::NAN, |d| d.median),
        };
        LeovecStatus::Ok
    })
}

/// Per-frame CSV. Call with a null `buf` to learn the size.
///
/// # Safety
/// As for [`leovec_scenario_to_json`].
#[no_mangle]
pub unsafe extern "C" fn leovec_report_frames_csv(
    report: *const LeovecReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> LeovecStatus {
    guard(|| match report.as_ref() {
        Some(r) => {
            let text = String::from_utf8(output::frames_csv_bytes(&r.report)).expect("CSV is UTF-8");
            copy_out(&text, buf, cap, needed)
        }
        None => fail(LeovecStatus::NullPointer, "report is null"),
    })
}

/// Summary JSON (metrics, configuration, seed, version).
///
/// # Safety
/// As for [`leovec_scenario_to_json`].
#[no_mangle]
pub unsafe extern "C" fn leovec_report_summary_json(
    report: *const LeovecReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> LeovecStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&output::summary_json(&r.report), buf, cap, needed),
        None => fail(LeovecStatus::NullPointer, "report is null"),
    })
}

/// # Safety
/// `report` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn leovec_report_free(report: *mut LeovecReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Free-space path loss [dB] for carrier [GHz] and distance [km].
#[no_mangle]
pub extern "C" fn leovec_fspl_db(carrier_ghz: f64, d_km: f64) -> f64 {
    link::fspl(carrier_ghz, d_km)
}

/// SNR [dB] from transmitter EIRP, receiver G/T, path loss and bandwidth,
/// with k = -228.6 dBW/K/Hz.
#[no_mangle]
pub extern "C" fn leovec_snr_db(eirp_dbw: f64, g_over_t_dbk: f64, pl_db: f64, bandwidth_hz: f64) -> f64 {
    let channel = link::ChannelParams {
        bandwidth_hz,
        ..Default::default()
    };
    let tx = link::LinkEndpointParams {
        eirp_dbw,
        ..link::LinkEndpointParams::GV_DEFAULT
    };
    let rx = link::LinkEndpointParams {
        g_over_t_dbk,
        ..link::LinkEndpointParams::SAT_DEFAULT
    };
    link::snr(&tx, &rx, pl_db, &channel)
}

#[no_mangle]
pub extern "C" fn leovec_ergodic_capacity_bps(bandwidth_hz: f64, snr_db: f64) -> f64 {
    link::ergodic_capacity(bandwidth_hz, snr_db)
}

/// GV-to-satellite range [km].
#[no_mangle]
pub extern "C" fn leovec_slant_distance_km(altitude_km: f64, cos_alpha: f64) -> f64 {
    orbit::slant_distance(altitude_km, cos_alpha)
}

/// Elevation [deg], or NaN below the horizon.
#[no_mangle]
pub extern "C" fn leovec_elevation_deg(altitude_km: f64, cos_alpha: f64) -> f64 {
    let c = cos_alpha.clamp(-1.0, 1.0);
    let d = orbit::slant_distance(altitude_km, c);
    orbit::elevation_angle(altitude_km, c.acos(), d).unwrap_or(f64::NAN)
}

#[no_mangle]
pub extern "C" fn leovec_propagation_delay_s(d_km: f64) -> f64 {
    orbit::propagation_delay(d_km)
}

/// Light-drop probability min(1, (t_hat/deadline)^sigma).
#[no_mangle]
pub extern "C" fn leovec_drop_probability(t_hat_s: f64, deadline_s: f64, sigma: f64) -> f64 {
    policy::drop_probability(t_hat_s, deadline_s, sigma)
}
