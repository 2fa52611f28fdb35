//! Scenario files: a JSON document with a versioned schema. Unknown keys are
//! rejected, and `key=value` overrides may only touch keys that exist.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::link::{ChannelParams, LinkEndpointParams};
use crate::orbit::GeoPoint;
use crate::policy::{Offload, PolicyConfig, Selection};

pub const SCHEMA_VERSION: u32 = 1;

/// Constellation source recognised in place of a file path.
pub const BUILTIN_STARLINK: &str = "builtin:starlink";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed override `{0}` (expected key=value)")]
    MalformedOverride(String),
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSource {
    /// File path (absolute after loading) or `builtin:starlink`.
    pub source: String,
    /// Target size `s`; `None` keeps every record.
    #[serde(default)]
    pub size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GvPlacement {
    pub center: GeoPoint,
    pub radius_km: f64,
}

impl Default for GvPlacement {
    fn default() -> Self {
        Self {
            center: GeoPoint { lat: 45.0, lon: 11.0 },
            radius_km: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySettings {
    pub selection: Selection,
    pub offload: Offload,
    pub sigma: f64,
    pub backoff_max_frames: u32,
    #[serde(default)]
    pub snr_serve_th_db: f64,
    #[serde(default = "default_select_th")]
    pub snr_select_th_db: f64,
}

fn default_select_th() -> f64 {
    10.0
}

impl Default for PolicySettings {
    fn default() -> Self {
        Self {
            selection: Selection::Sr,
            offload: Offload::Ldboo,
            sigma: 4.0,
            backoff_max_frames: 10,
            snr_serve_th_db: 0.0,
            snr_select_th_db: 10.0,
        }
    }
}

fn default_refresh() -> f64 {
    1.0
}

fn default_gv_antenna() -> LinkEndpointParams {
    LinkEndpointParams::GV_DEFAULT
}

fn default_sat_antenna() -> LinkEndpointParams {
    LinkEndpointParams::SAT_DEFAULT
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub n_gvs: u32,
    pub frame_rate_fps: f64,
    pub sim_time_s: f64,
    pub deadline_s: f64,
    /// Computational load per frame [TFLOP].
    pub load_tflop: f64,
    /// [TFLOPS]; zero disables onboard processing.
    pub gv_capacity_tflops: f64,
    pub leo_capacity_tflops: f64,
    pub packet_ul_mbit: f64,
    pub packet_dl_mbit: f64,
    pub constellation: ConstellationSource,
    /// Simulation start (RFC 3339). Defaults to the newest element epoch.
    #[serde(default)]
    pub start_utc: Option<String>,
    #[serde(default)]
    pub gv_placement: GvPlacement,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default = "default_gv_antenna")]
    pub gv_antenna: LinkEndpointParams,
    #[serde(default = "default_sat_antenna")]
    pub sat_antenna: LinkEndpointParams,
    #[serde(default)]
    pub policy: PolicySettings,
    #[serde(default = "default_refresh")]
    pub geometry_refresh_s: f64,
    /// Elevation mask for association [deg]; 0 means the geometric horizon.
    #[serde(default)]
    pub min_elevation_deg: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    /// Defaults of the reference parameter table with the benchmark policy
    /// (LDBOO + SR, σ = 4, t_o^m = 10), n = 100, r = 30 fps, C_LEO = 20, s = 5662,
    /// and the 50° elevation mask used for the experiments.
    pub fn table1() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_gvs: 100,
            frame_rate_fps: 30.0,
            sim_time_s: 60.0,
            deadline_s: 0.15,
            load_tflop: 0.06,
            gv_capacity_tflops: 0.5,
            leo_capacity_tflops: 20.0,
            packet_ul_mbit: 3.0,
            packet_dl_mbit: 0.1,
            constellation: ConstellationSource {
                source: BUILTIN_STARLINK.into(),
                size: Some(5662),
            },
            start_utc: None,
            gv_placement: GvPlacement::default(),
            channel: ChannelParams::default(),
            gv_antenna: LinkEndpointParams::GV_DEFAULT,
            sat_antenna: LinkEndpointParams::SAT_DEFAULT,
            policy: PolicySettings::default(),
            geometry_refresh_s: 1.0,
            min_elevation_deg: 50.0,
            seed: 1,
        }
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            selection: self.policy.selection,
            offload: self.policy.offload,
            sigma: self.policy.sigma,
            backoff_max_frames: self.policy.backoff_max_frames,
            snr_serve_th_db: self.policy.snr_serve_th_db,
            snr_select_th_db: self.policy.snr_select_th_db,
            deadline_s: self.deadline_s,
        }
    }

    pub fn start_time(&self) -> Result<Option<DateTime<Utc>>, ConfigError> {
        self.start_utc
            .as_deref()
            .map(|s| {
                DateTime::parse_from_rfc3339(s)
                    .map(|t| t.with_timezone(&Utc))
                    .map_err(|e| ConfigError::invalid("start_utc", e.to_string()))
            })
            .transpose()
    }

    pub fn frames_per_gv(&self) -> u64 {
        (self.sim_time_s * self.frame_rate_fps - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        let positive = [
            ("frame_rate_fps", self.frame_rate_fps),
            ("sim_time_s", self.sim_time_s),
            ("deadline_s", self.deadline_s),
            ("leo_capacity_tflops", self.leo_capacity_tflops),
            ("geometry_refresh_s", self.geometry_refresh_s),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, format!("{v} must be positive")));
            }
        }
        let non_negative = [
            ("load_tflop", self.load_tflop),
            ("gv_capacity_tflops", self.gv_capacity_tflops),
            ("packet_ul_mbit", self.packet_ul_mbit),
            ("packet_dl_mbit", self.packet_dl_mbit),
            ("gv_placement.radius_km", self.gv_placement.radius_km),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(key, format!("{v} must be non-negative")));
            }
        }
        if self.n_gvs == 0 {
            return Err(ConfigError::invalid("n_gvs", "must be at least 1"));
        }
        if self.constellation.size == Some(0) {
            return Err(ConfigError::invalid("constellation.size", "must be at least 1"));
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            return Err(ConfigError::invalid("min_elevation_deg", "must be in [0, 90)"));
        }
        GeoPoint::new(self.gv_placement.center.lat, self.gv_placement.center.lon)
            .map_err(|e| ConfigError::invalid("gv_placement.center", e.to_string()))?;
        self.channel
            .validate()
            .map_err(|e| ConfigError::invalid("channel", e.to_string()))?;
        for (key, ep) in [("gv_antenna", &self.gv_antenna), ("sat_antenna", &self.sat_antenna)] {
            if !ep.eirp_dbw.is_finite() || !ep.g_over_t_dbk.is_finite() {
                return Err(ConfigError::invalid(key, "values must be finite"));
            }
        }
        self.policy_config()
            .validate()
            .map_err(|e| ConfigError::invalid("policy", e))?;
        self.start_time()?;
        Ok(())
    }

    /// Parse JSON text, resolving a relative constellation path against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_value(value, base_dir, &[])
    }

    fn from_value(value: Value, base_dir: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if !overrides.is_empty() {
            let mut full = serde_json::to_value(&cfg).expect("config serializes");
            for (k, v) in overrides {
                apply_override(&mut full, k, v)?;
            }
            cfg = serde_json::from_value(full).map_err(|e| ConfigError::Parse(e.to_string()))?;
        }
        if let Some(dir) = base_dir {
            let src = &cfg.constellation.source;
            if !src.starts_with("builtin:") && Path::new(src).is_relative() {
                cfg.constellation.source = dir.join(src).to_string_lossy().into_owned();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let value = serde_json::to_value(self).expect("config serializes");
        Self::from_value(value, None, overrides)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::MalformedOverride(s.to_string()))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ConfigError::MalformedOverride(s.to_string()));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<(), ConfigError> {
    let mut node = root;
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

/// Read a scenario file and apply overrides.
pub fn load_scenario(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    ScenarioConfig::from_value(value, path.parent(), overrides)
}
