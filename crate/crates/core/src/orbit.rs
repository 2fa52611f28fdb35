//! Two-body propagation from TLE mean elements and the spherical-Earth
//! GV-to-satellite geometry (central angle, slant range, elevation).

use std::f64::consts::TAU;

use thiserror::Error;

use crate::tle::TleRecord;

/// Spherical Earth radius [km].
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Speed of light [km/s].
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;
/// Earth gravitational parameter [km³/s²].
pub const MU_EARTH: f64 = 398_600.441_8;
/// Julian date of the J2000 epoch.
pub const J2000_JD: f64 = 2_451_545.0;

const MAX_EPOCH_OFFSET_S: f64 = 7.0 * 86_400.0;
const LEO_ALTITUDE_BAND_KM: (f64, f64) = (160.0, 2500.0);
const KEPLER_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("Kepler solver did not converge (M={mean_anomaly}, e={eccentricity})")]
    NonConvergence { mean_anomaly: f64, eccentricity: f64 },
    #[error("requested time is {offset_s:.0} s from the element epoch (limit ±7 days)")]
    EpochTooFar { offset_s: f64 },
    #[error("eccentricity {0} is not elliptic")]
    HyperbolicElements(f64),
    #[error("altitude {altitude_km:.1} km outside the LEO band")]
    NotLeo { altitude_km: f64 },
    #[error("satellite below the horizon (cos α = {cos_alpha})")]
    BelowHorizon { cos_alpha: f64 },
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
}

/// Latitude/longitude in degrees on the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validates latitude and wraps longitude into (−180, 180].
    pub fn new(lat: f64, lon: f64) -> Result<Self, OrbitError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(OrbitError::InvalidCoordinate(format!("latitude {lat}")));
        }
        if !lon.is_finite() {
            return Err(OrbitError::InvalidCoordinate(format!("longitude {lon}")));
        }
        Ok(Self {
            lat,
            lon: wrap_longitude(lon),
        })
    }
}

pub fn wrap_longitude(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

/// Sub-satellite point and altitude at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    pub sub_point: GeoPoint,
    pub altitude_km: f64,
    pub epoch_offset_s: f64,
}

/// GV-to-satellite geometry for one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub cos_alpha: f64,
    pub slant_km: f64,
    pub elevation_deg: f64,
    pub prop_delay_s: f64,
}

/// UTC instant as a reference Julian date plus an offset in seconds, so that
/// sub-second simulation times keep full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtcInstant {
    pub base_jd: f64,
    pub offset_s: f64,
}

impl UtcInstant {
    pub fn new(base_jd: f64, offset_s: f64) -> Self {
        Self { base_jd, offset_s }
    }

    pub fn jd(&self) -> f64 {
        self.base_jd + self.offset_s / 86_400.0
    }

    /// Seconds elapsed since the Julian date `jd`.
    pub fn seconds_since(&self, jd: f64) -> f64 {
        (self.base_jd - jd) * 86_400.0 + self.offset_s
    }
}

/// Julian date of a TLE epoch (4-digit year, fractional day-of-year, day 1.0 = Jan 1 00:00).
pub fn tle_epoch_jd(year: i32, day_of_year: f64) -> f64 {
    julian_date_jan0(year) + day_of_year
}

/// Julian date of January 0.0 (Dec 31 00:00 of the previous year).
fn julian_date_jan0(year: i32) -> f64 {
    // Meeus, Astronomical Algorithms, ch. 7, with month = 1 treated as 13 of the previous year.
    let y = (year - 1) as f64;
    let a = (y / 100.0).floor();
    let b = 2.0 - a + (a / 4.0).floor();
    (365.25 * (y + 4716.0)).floor() + (30.6001 * 14.0_f64).floor() + b - 1524.5
}

/// Greenwich mean sidereal angle [rad] from the IAU 1982 polynomial.
pub fn gmst_rad(t: UtcInstant) -> f64 {
    let days = (t.base_jd - J2000_JD) + t.offset_s / 86_400.0;
    let centuries = days / 36_525.0;
    let deg = 280.460_618_37 + 360.985_647_366_29 * days + 0.000_387_933 * centuries * centuries
        - centuries.powi(3) / 38_710_000.0;
    deg.to_radians().rem_euclid(TAU)
}

/// Solve M = E − e·sin E. Newton from E₀ = M, bisection on [M−e, M+e] if
/// Newton has not settled after 50 iterations.
pub fn solve_kepler(mean_anomaly: f64, eccentricity: f64) -> Result<f64, OrbitError> {
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(OrbitError::HyperbolicElements(eccentricity));
    }
    let residual = |e_anom: f64| e_anom - eccentricity * e_anom.sin() - mean_anomaly;
    let mut e_anom = mean_anomaly;
    for _ in 0..NEWTON_MAX_ITER {
        let f = residual(e_anom);
        if f.abs() < KEPLER_TOL {
            return Ok(e_anom);
        }
        e_anom -= f / (1.0 - eccentricity * e_anom.cos());
    }
    let (mut lo, mut hi) = (mean_anomaly - eccentricity, mean_anomaly + eccentricity);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = residual(mid);
        if f.abs() < KEPLER_TOL {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(OrbitError::NonConvergence {
        mean_anomaly,
        eccentricity,
    })
}

/// Precomputed two-body propagator for one element set.
#[derive(Debug, Clone)]
pub struct Propagator {
    epoch_jd: f64,
    semi_major_km: f64,
    eccentricity: f64,
    mean_motion_rad_s: f64,
    mean_anomaly0: f64,
    /// Columns P and Q of the perifocal-to-inertial rotation.
    p_axis: [f64; 3],
    q_axis: [f64; 3],
}

impl Propagator {
    pub fn new(record: &TleRecord) -> Result<Self, OrbitError> {
        let e = record.eccentricity;
        if !(0.0..1.0).contains(&e) {
            return Err(OrbitError::HyperbolicElements(e));
        }
        let n = record.mean_motion * TAU / 86_400.0;
        let a = (MU_EARTH / (n * n)).cbrt();
        for alt in [a * (1.0 - e) - EARTH_RADIUS_KM, a * (1.0 + e) - EARTH_RADIUS_KM] {
            if !(LEO_ALTITUDE_BAND_KM.0..=LEO_ALTITUDE_BAND_KM.1).contains(&alt) {
                return Err(OrbitError::NotLeo { altitude_km: alt });
            }
        }
        let (so, co) = record.raan.to_radians().sin_cos();
        let (si, ci) = record.inclination.to_radians().sin_cos();
        let (sw, cw) = record.arg_perigee.to_radians().sin_cos();
        Ok(Self {
            epoch_jd: tle_epoch_jd(record.epoch_year, record.epoch_day),
            semi_major_km: a,
            eccentricity: e,
            mean_motion_rad_s: n,
            mean_anomaly0: record.mean_anomaly.to_radians(),
            p_axis: [co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si],
            q_axis: [-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si],
        })
    }

    pub fn epoch_jd(&self) -> f64 {
        self.epoch_jd
    }

    /// Earth-centred inertial position [km].
    pub fn inertial_position(&self, dt_s: f64) -> Result<[f64; 3], OrbitError> {
        let m = (self.mean_anomaly0 + self.mean_motion_rad_s * dt_s).rem_euclid(TAU);
        let e_anom = solve_kepler(m, self.eccentricity)?;
        let (se, ce) = e_anom.sin_cos();
        let a = self.semi_major_km;
        let x = a * (ce - self.eccentricity);
        let y = a * (1.0 - self.eccentricity * self.eccentricity).sqrt() * se;
        Ok(std::array::from_fn(|k| x * self.p_axis[k] + y * self.q_axis[k]))
    }

    pub fn state_at(&self, t: UtcInstant) -> Result<SatelliteState, OrbitError> {
        let dt = t.seconds_since(self.epoch_jd);
        if dt.abs() > MAX_EPOCH_OFFSET_S {
            return Err(OrbitError::EpochTooFar { offset_s: dt });
        }
        let [x, y, z] = self.inertial_position(dt)?;
        let (sg, cg) = gmst_rad(t).sin_cos();
        let xf = cg * x + sg * y;
        let yf = -sg * x + cg * y;
        let r = (xf * xf + yf * yf + z * z).sqrt();
        Ok(SatelliteState {
            sub_point: GeoPoint {
                lat: (z / r).asin().to_degrees(),
                lon: wrap_longitude(yf.atan2(xf).to_degrees()),
            },
            altitude_km: r - EARTH_RADIUS_KM,
            epoch_offset_s: dt,
        })
    }
}

/// Propagate a record to `t` with the two-body model.
pub fn propagate(record: &TleRecord, t: UtcInstant) -> Result<SatelliteState, OrbitError> {
    Propagator::new(record)?.state_at(t)
}

/// Cosine of the Earth-centre angle between two surface points.
pub fn central_angle_cos(gv: GeoPoint, sat_sub: GeoPoint) -> f64 {
    let (yv, xv) = (gv.lat.to_radians(), gv.lon.to_radians());
    let (ys, xs) = (sat_sub.lat.to_radians(), sat_sub.lon.to_radians());
    (ys.cos() * yv.cos() * (xv - xs).cos() + yv.sin() * ys.sin()).clamp(-1.0, 1.0)
}

/// GV-to-satellite range [km] for altitude `h_s` and central angle cosine.
pub fn slant_distance(h_s: f64, cos_alpha: f64) -> f64 {
    let r = h_s + EARTH_RADIUS_KM;
    let q = EARTH_RADIUS_KM / r;
    r * (1.0 + q * q - 2.0 * q * cos_alpha).max(0.0).sqrt()
}

/// True when the satellite clears the GV's geometric horizon.
pub fn above_horizon(h_s: f64, cos_alpha: f64) -> bool {
    cos_alpha > EARTH_RADIUS_KM / (EARTH_RADIUS_KM + h_s)
}

/// Elevation [deg] of a satellite at altitude `h_s`, central angle `alpha`
/// [rad] and range `d` [km]. Defined only above the horizon.
pub fn elevation_angle(h_s: f64, alpha: f64, d: f64) -> Result<f64, OrbitError> {
    let cos_alpha = alpha.cos();
    if !above_horizon(h_s, cos_alpha) {
        return Err(OrbitError::BelowHorizon { cos_alpha });
    }
    if d <= 0.0 {
        return Ok(90.0);
    }
    let ratio = ((h_s + EARTH_RADIUS_KM) * alpha.sin() / d).clamp(-1.0, 1.0);
    Ok(ratio.acos().to_degrees())
}

pub fn propagation_delay(d_km: f64) -> f64 {
    d_km / SPEED_OF_LIGHT_KM_S
}

impl Geometry {
    /// Geometry of `sat` seen from `gv`, or `None` below the horizon.
    pub fn evaluate(gv: GeoPoint, sat: &SatelliteState) -> Option<Self> {
        Self::from_cos_alpha(sat.altitude_km, central_angle_cos(gv, sat.sub_point))
    }

    pub fn from_cos_alpha(h_s: f64, cos_alpha: f64) -> Option<Self> {
        if !above_horizon(h_s, cos_alpha) {
            return None;
        }
        let d = slant_distance(h_s, cos_alpha);
        let elevation_deg = elevation_angle(h_s, cos_alpha.acos(), d).ok()?;
        Some(Self {
            cos_alpha,
            slant_km: d,
            elevation_deg,
            prop_delay_s: propagation_delay(d),
        })
    }
}

/// Half-angle of the visibility cone (central angle at the horizon) [rad].
pub fn horizon_central_angle(h_s: f64) -> f64 {
    (EARTH_RADIUS_KM / (EARTH_RADIUS_KM + h_s)).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tle::{ExpNotation, TleRecord};
    use proptest::prelude::*;

    fn bisect_kepler(m: f64, e: f64) -> f64 {
        let (mut lo, mut hi) = (m - 1.0, m + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - e * mid.sin() - m < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub(crate) fn circular_record(incl: f64, raan: f64, ma: f64, mean_motion: f64) -> TleRecord {
        let zero = ExpNotation {
            mantissa: 0,
            exponent: 0,
            negative_exponent: false,
        };
        TleRecord {
            name: "TEST".into(),
            catalog_id: 1,
            classification: 'U',
            intl_designator: "        ".into(),
            epoch_year: 2000,
            epoch_day: 1.5,
            mean_motion_dot: 0.0,
            mean_motion_ddot: zero,
            bstar: zero,
            ephemeris_type: '0',
            element_set_number: 1,
            inclination: incl,
            raan,
            eccentricity: 0.0,
            arg_perigee: 0.0,
            mean_anomaly: ma,
            mean_motion,
            rev_number: 1,
            raw_lines: Default::default(),
        }
    }

    #[test]
    fn kepler_examples() {
        assert_eq!(solve_kepler(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(solve_kepler(0.0, 0.7).unwrap(), 0.0);
        let oracle = bisect_kepler(1.0, 0.1);
        assert!((oracle - 1.08860).abs() < 5e-6, "oracle {oracle}");
        let e = solve_kepler(1.0, 0.1).unwrap();
        assert!((e - oracle).abs() < 1e-11);
        assert!(matches!(solve_kepler(1.0, 1.0), Err(OrbitError::HyperbolicElements(_))));
    }

    proptest! {
        #[test]
        fn kepler_residual_small(m in 0.0f64..TAU, e in 0.0f64..0.99) {
            let ea = solve_kepler(m, e).unwrap();
            prop_assert!((ea - e * ea.sin() - m).abs() < 1e-10);
        }

        #[test]
        fn central_angle_symmetric(a in -90.0f64..90.0, b in -180.0f64..180.0, c in -90.0f64..90.0, d in -180.0f64..180.0) {
            let p = GeoPoint::new(a, b).unwrap();
            let q = GeoPoint::new(c, d).unwrap();
            prop_assert!((central_angle_cos(p, q) - central_angle_cos(q, p)).abs() < 1e-15);
        }
    }

    #[test]
    fn j2000_epoch() {
        assert_eq!(tle_epoch_jd(2000, 1.5), 2_451_545.0);
        // 2024-01-01 00:00 UTC is JD 2460310.5.
        assert_eq!(tle_epoch_jd(2024, 1.0), 2_460_310.5);
        // GMST at J2000.0 is 280.46061837 deg.
        let g = gmst_rad(UtcInstant::new(J2000_JD, 0.0)).to_degrees();
        assert!((g - 280.460_618_37).abs() < 1e-9);
    }

    #[test]
    fn equatorial_circular_stays_on_equator() {
        let r = circular_record(0.0, 0.0, 0.0, 15.05);
        let p = Propagator::new(&r).unwrap();
        let base = tle_epoch_jd(2000, 1.5);
        let h0 = p.state_at(UtcInstant::new(base, 0.0)).unwrap().altitude_km;
        for k in 0..200 {
            let s = p.state_at(UtcInstant::new(base, k as f64 * 37.0)).unwrap();
            assert!(s.sub_point.lat.abs() < 1e-9);
            assert!((s.altitude_km - h0).abs() < 1e-6);
        }
        assert!((450.0..650.0).contains(&h0));
    }

    #[test]
    fn prograde_circular_ground_track_drifts() {
        // The ground track of a prograde LEO orbit moves east, slower than
        // inertial motion because Earth rotates underneath.
        let r = circular_record(0.0, 0.0, 0.0, 15.05);
        let p = Propagator::new(&r).unwrap();
        let base = tle_epoch_jd(2000, 1.5);
        let s0 = p.state_at(UtcInstant::new(base, 0.0)).unwrap();
        let s1 = p.state_at(UtcInstant::new(base, 60.0)).unwrap();
        let dlon = wrap_longitude(s1.sub_point.lon - s0.sub_point.lon);
        let inertial = 15.05 * 360.0 / 86_400.0 * 60.0;
        let earth = 360.985_647_366_29 / 86_400.0 * 60.0;
        assert!((dlon - (inertial - earth)).abs() < 1e-6, "{dlon}");
    }

    #[test]
    fn epoch_guard() {
        let r = circular_record(53.0, 0.0, 0.0, 15.05);
        let base = tle_epoch_jd(2000, 1.5);
        assert!(propagate(&r, UtcInstant::new(base + 6.9, 0.0)).is_ok());
        assert!(matches!(
            propagate(&r, UtcInstant::new(base + 7.1, 0.0)),
            Err(OrbitError::EpochTooFar { .. })
        ));
        let mut bad = r.clone();
        bad.eccentricity = 1.2;
        assert!(matches!(propagate(&bad, UtcInstant::new(base, 0.0)), Err(OrbitError::HyperbolicElements(_))));
        let mut geo = r;
        geo.mean_motion = 1.0027;
        assert!(matches!(propagate(&geo, UtcInstant::new(base, 0.0)), Err(OrbitError::NotLeo { .. })));
    }

    #[test]
    fn central_angle_examples() {
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(central_angle_cos(o, o), 1.0);
        let east = GeoPoint::new(0.0, 60.0).unwrap();
        assert!((central_angle_cos(o, east) - 0.5).abs() < 1e-15);
        let p = GeoPoint::new(45.3, -7.2).unwrap();
        assert!((central_angle_cos(p, p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slant_distance_examples() {
        assert!((slant_distance(550.0, 1.0) - 550.0).abs() < 1e-9);
        // Law of cosines in the Earth-centre triangle.
        let alpha = 10f64.to_radians();
        let (re, rs) = (EARTH_RADIUS_KM, EARTH_RADIUS_KM + 550.0);
        let oracle = (re * re + rs * rs - 2.0 * re * rs * alpha.cos()).sqrt();
        let d = slant_distance(550.0, alpha.cos());
        assert!((d - oracle).abs() < 1e-9);
        assert!((d - 1281.53).abs() < 0.05, "{d}");
        let mut last = 0.0;
        for k in 0..=600 {
            let a = (k as f64 * 0.1).to_radians();
            let d = slant_distance(550.0, a.cos());
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn elevation_examples() {
        assert_eq!(elevation_angle(550.0, 0.0, 550.0).unwrap(), 90.0);
        let alpha = 10f64.to_radians();
        let d = slant_distance(550.0, alpha.cos());
        let theta = elevation_angle(550.0, alpha, d).unwrap();
        // Planar triangle: GV at (0, R_E), satellite at (r sin α, r cos α).
        let rs = EARTH_RADIUS_KM + 550.0;
        let (dx, dy) = (rs * alpha.sin(), rs * alpha.cos() - EARTH_RADIUS_KM);
        let oracle = dy.atan2(dx).to_degrees();
        assert!((theta - oracle).abs() < 1e-9);
        assert!((theta - 20.3).abs() < 0.05, "{theta}");
        let limit = horizon_central_angle(550.0);
        let mut last = 91.0;
        for k in 0..1000 {
            let a = limit * k as f64 / 1000.0;
            let th = elevation_angle(550.0, a, slant_distance(550.0, a.cos())).unwrap();
            assert!(th < last);
            last = th;
        }
        assert!(matches!(
            elevation_angle(550.0, limit + 0.01, 3000.0),
            Err(OrbitError::BelowHorizon { .. })
        ));
    }

    #[test]
    fn propagation_delay_examples() {
        assert_eq!(propagation_delay(SPEED_OF_LIGHT_KM_S), 1.0);
        assert!((propagation_delay(600.0) - 2.0014e-3).abs() < 1e-7);
        assert_eq!(propagation_delay(0.0), 0.0);
    }

    #[test]
    fn zenith_identities() {
        for h in [350.0, 550.0, 600.0] {
            let g = Geometry::from_cos_alpha(h, 1.0).unwrap();
            assert!((g.slant_km - h).abs() < 1e-9 * h);
            assert_eq!(g.elevation_deg, 90.0);
        }
    }

    #[test]
    fn geopoint_wraps() {
        assert_eq!(GeoPoint::new(0.0, 190.0).unwrap().lon, -170.0);
        assert_eq!(GeoPoint::new(0.0, -180.0).unwrap().lon, 180.0);
        assert!(GeoPoint::new(91.0, 0.0).is_err());
    }
}
