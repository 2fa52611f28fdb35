#![allow(dead_code)]

use std::path::Path;

use leovec_core::config::{ConstellationSource, ScenarioConfig};
use leovec_core::orbit::{self, GeoPoint, SatelliteState, UtcInstant};
use leovec_core::policy::{Offload, Selection};
use leovec_core::tle::{compute_checksum, parse_tle, TleRecord};

pub const C_KM_S: f64 = 299_792.458;
pub const R_E: f64 = 6371.0;

fn with_checksum(body: &str) -> String {
    assert_eq!(body.len(), 68, "{body:?}");
    format!("{body}{}", compute_checksum(body))
}

/// Circular-orbit TLE at `alt_km`, epoch 2024 day 1.5.
pub fn circular_tle(id: u32, alt_km: f64, incl: f64, raan: f64, mean_anomaly: f64) -> TleRecord {
    let a = R_E + alt_km;
    let n = (orbit::MU_EARTH / a.powi(3)).sqrt() * 86_400.0 / std::f64::consts::TAU;
    let l1 = with_checksum(&format!(
        "1 {id:05}U 24001A   24001.50000000  .00000000  00000+0  00000+0 0  999"
    ));
    let l2 = with_checksum(&format!(
        "2 {id:05} {incl:8.4} {raan:8.4} 0000000   0.0000 {mean_anomaly:8.4} {n:11.8}    1"
    ));
    parse_tle(Some(&format!("TEST-{id}")), &l1, &l2).expect("valid test TLE")
}

pub fn write_tle(dir: &Path, records: &[TleRecord]) -> String {
    let path = dir.join("sats.tle");
    let text: String = records.iter().map(|r| r.to_text()).collect();
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

pub fn state_at(rec: &TleRecord, jd: f64, t: f64) -> SatelliteState {
    orbit::propagate(rec, UtcInstant::new(jd, t)).unwrap()
}

fn ecef(p: GeoPoint, r: f64) -> [f64; 3] {
    let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
    [r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin()]
}

/// Slant range [km] and elevation [deg] from Cartesian vectors.
pub fn geometry(gv: GeoPoint, sat: &SatelliteState) -> (f64, f64) {
    let g = ecef(gv, R_E);
    let s = ecef(sat.sub_point, R_E + sat.altitude_km);
    let los = [s[0] - g[0], s[1] - g[1], s[2] - g[2]];
    let d = los.iter().map(|x| x * x).sum::<f64>().sqrt();
    let up = g.map(|x| x / R_E);
    let sin_el = (los[0] * up[0] + los[1] * up[1] + los[2] * up[2]) / d;
    (d, sin_el.clamp(-1.0, 1.0).asin().to_degrees())
}

/// Shannon rate [bit/s] of a free-space link with zero extra losses.
pub fn rate(eirp: f64, g_t: f64, d_km: f64, f_ghz: f64, b_hz: f64) -> f64 {
    let fspl = 20.0 * (d_km * f_ghz).log10() + 92.45;
    let snr_db = eirp + g_t - fspl + 228.6 - 10.0 * b_hz.log10();
    b_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Small scenario for quick runs.
pub fn small(n: u32, sim_time_s: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::table1();
    c.n_gvs = n;
    c.sim_time_s = sim_time_s;
    c
}

/// One GV at the sub-point of a single satellite at the start instant, BOO + MS.
pub fn overhead_scenario(dir: &Path, rec: &TleRecord) -> ScenarioConfig {
    let mut c = ScenarioConfig::table1();
    c.constellation = ConstellationSource {
        source: write_tle(dir, std::slice::from_ref(rec)),
        size: None,
    };
    let jd = orbit::tle_epoch_jd(rec.epoch_year, rec.epoch_day);
    c.gv_placement.center = state_at(rec, jd, 0.0).sub_point;
    c.gv_placement.radius_km = 0.0;
    c.min_elevation_deg = 0.0;
    c.n_gvs = 1;
    c.frame_rate_fps = 1.0;
    c.policy.selection = Selection::Ms;
    c.policy.offload = Offload::Boo;
    c
}
