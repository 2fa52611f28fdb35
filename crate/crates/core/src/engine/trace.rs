//! Elevation time series and pass (visibility interval) extraction.

use rayon::prelude::*;
use serde::Serialize;

use super::{EngineError, Fleet};
use crate::orbit::{GeoPoint, Geometry, UtcInstant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub t_s: f64,
    pub sat_id: u32,
    pub elevation_deg: f64,
    pub slant_km: f64,
}

/// Elevation samples of the chosen satellites (or of every satellite above the
/// horizon at t = 0) every `step_s` over `[0, duration_s]`. Samples below the
/// horizon are omitted.
pub fn elevation_trace(
    fleet: &Fleet,
    gv: GeoPoint,
    start_jd: f64,
    duration_s: f64,
    step_s: f64,
    sat_ids: Option<&[u32]>,
) -> Result<Vec<TraceSample>, EngineError> {
    let chosen: Vec<usize> = match sat_ids {
        Some(ids) => ids.iter().filter_map(|id| fleet.index_of(*id)).collect(),
        None => {
            let t0 = UtcInstant::new(start_jd, 0.0);
            let mut v = Vec::new();
            for (k, p) in fleet.propagators.iter().enumerate() {
                if Geometry::evaluate(gv, &p.state_at(t0)?).is_some() {
                    v.push(k);
                }
            }
            v
        }
    };
    if chosen.is_empty() {
        return Err(EngineError::NoVisibleSatellite);
    }
    let steps = (duration_s / step_s + 1e-9).floor() as u64;
    let mut out = Vec::new();
    for i in 0..=steps {
        let t = i as f64 * step_s;
        let instant = UtcInstant::new(start_jd, t);
        for &k in &chosen {
            let s = fleet.propagators[k].state_at(instant)?;
            if let Some(g) = Geometry::evaluate(gv, &s) {
                out.push(TraceSample {
                    t_s: t,
                    sat_id: fleet.ids[k],
                    elevation_deg: g.elevation_deg,
                    slant_km: g.slant_km,
                });
            }
        }
    }
    Ok(out)
}

/// A contiguous run of samples above an elevation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityInterval {
    pub sat_id: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub peak_elevation_deg: f64,
    /// False when the run touches either end of the window (duration censored).
    pub complete: bool,
}

impl VisibilityInterval {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Runs of θ > `threshold_deg` for every satellite, sampled every `step_s`.
/// A run's duration is the span between its first and last samples.
pub fn visibility_intervals(
    fleet: &Fleet,
    gv: GeoPoint,
    start_jd: f64,
    duration_s: f64,
    step_s: f64,
    threshold_deg: f64,
) -> Result<Vec<VisibilityInterval>, EngineError> {
    let steps = (duration_s / step_s + 1e-9).floor() as u64;
    let per_sat: Result<Vec<Vec<VisibilityInterval>>, EngineError> = (0..fleet.len())
        .into_par_iter()
        .map(|k| {
            let p = &fleet.propagators[k];
            let mut out = Vec::new();
            let mut open: Option<VisibilityInterval> = None;
            for i in 0..=steps {
                let t = i as f64 * step_s;
                let s = p.state_at(UtcInstant::new(start_jd, t))?;
                let elev = Geometry::evaluate(gv, &s).map(|g| g.elevation_deg);
                match (elev.filter(|e| *e > threshold_deg), open.as_mut()) {
                    (Some(e), Some(iv)) => {
                        iv.end_s = t;
                        iv.peak_elevation_deg = iv.peak_elevation_deg.max(e);
                    }
                    (Some(e), None) => {
                        open = Some(VisibilityInterval {
                            sat_id: fleet.ids[k],
                            start_s: t,
                            end_s: t,
                            peak_elevation_deg: e,
                            complete: i > 0,
                        })
                    }
                    (None, Some(_)) => out.extend(open.take()),
                    (None, None) => {}
                }
            }
            if let Some(mut iv) = open {
                iv.complete = false;
                out.push(iv);
            }
            Ok(out)
        })
        .collect();
    Ok(per_sat?.into_iter().flatten().collect())
}
