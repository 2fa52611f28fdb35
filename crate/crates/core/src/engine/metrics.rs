//! Aggregate statistics over per-frame records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::policy::Decision;
use crate::queueing::FrameTask;

/// Five-number summary of completed-frame delays [s].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

impl BoxStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&v, p);
        Some(Self {
            min: *v.first()?,
            q1: q(0.25)?,
            median: q(0.5)?,
            q3: q(0.75)?,
            max: *v.last()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub generated: u64,
    pub onboard: u64,
    pub offloaded: u64,
    pub dropped: u64,
    pub drops_by_reason: BTreeMap<String, u64>,
    /// Non-dropped frames whose result arrived by the end of the run.
    pub completed: u64,
    /// Non-dropped frames still in progress at the end of the run.
    pub in_flight: u64,
    pub on_time: u64,
    /// Completed within the deadline, over generated frames.
    pub p_rt: f64,
    pub p_d: f64,
    /// Late completions plus in-flight frames, over generated frames.
    pub p_late: f64,
    pub frac_onboard: f64,
    pub frac_offload: f64,
    pub frac_drop: f64,
    pub delay: Option<BoxStats>,
    /// Mean load factor over satellites that received at least one frame.
    pub rho: f64,
    pub satellites_loaded: usize,
}

/// Per-satellite load factors and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadFactors {
    pub per_satellite: Vec<(u32, f64)>,
    pub mean: f64,
}

/// ρ_i = arrivals_i · service / window for satellites with at least one arrival.
pub fn load_factors(arrivals: &[(u32, u64)], service_s: f64, window_s: f64) -> LoadFactors {
    let per_satellite: Vec<(u32, f64)> = arrivals
        .iter()
        .filter(|(_, a)| *a > 0)
        .map(|&(id, a)| (id, a as f64 * service_s / window_s))
        .collect();
    let mean = if per_satellite.is_empty() {
        0.0
    } else {
        per_satellite.iter().map(|(_, r)| r).sum::<f64>() / per_satellite.len() as f64
    };
    LoadFactors { per_satellite, mean }
}

/// A frame is complete when its result arrived no later than `horizon_s`.
pub fn is_completed(f: &FrameTask, horizon_s: f64) -> bool {
    !matches!(f.decision, Decision::Drop(_) | Decision::Pending) && f.done_s.is_some_and(|d| d <= horizon_s)
}

pub fn compute_metrics(records: &[FrameTask], deadline_s: f64, horizon_s: f64, loads: &LoadFactors) -> Metrics {
    let mut m = Metrics {
        generated: records.len() as u64,
        onboard: 0,
        offloaded: 0,
        dropped: 0,
        drops_by_reason: BTreeMap::new(),
        completed: 0,
        in_flight: 0,
        on_time: 0,
        p_rt: 0.0,
        p_d: 0.0,
        p_late: 0.0,
        frac_onboard: 0.0,
        frac_offload: 0.0,
        frac_drop: 0.0,
        delay: None,
        rho: loads.mean,
        satellites_loaded: loads.per_satellite.len(),
    };
    let mut delays = Vec::new();
    for f in records {
        match f.decision {
            Decision::Onboard => m.onboard += 1,
            Decision::Offload(_) => m.offloaded += 1,
            Decision::Drop(r) => {
                m.dropped += 1;
                *m.drops_by_reason.entry(r.as_str().to_string()).or_default() += 1;
                continue;
            }
            Decision::Pending => {}
        }
        if is_completed(f, horizon_s) {
            m.completed += 1;
            let t_d = f.total_delay_s.expect("completed frames carry a delay");
            delays.push(t_d);
            if t_d < deadline_s {
                m.on_time += 1;
            }
        } else {
            m.in_flight += 1;
        }
    }
    if m.generated > 0 {
        let n = m.generated as f64;
        m.p_rt = m.on_time as f64 / n;
        m.p_d = m.dropped as f64 / n;
        m.p_late = (m.completed - m.on_time + m.in_flight) as f64 / n;
        m.frac_onboard = m.onboard as f64 / n;
        m.frac_offload = m.offloaded as f64 / n;
        m.frac_drop = m.dropped as f64 / n;
    }
    m.delay = BoxStats::from_samples(&delays);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::DropReason;

    fn frame(decision: Decision, delay: Option<f64>) -> FrameTask {
        let mut f = FrameTask::new(0, 0, 0.0, 3e6, 1e5, 0.06);
        f.decision = decision;
        f.total_delay_s = delay;
        f.done_s = delay;
        f
    }

    #[test]
    fn all_on_time() {
        let recs: Vec<_> = (0..10).map(|_| frame(Decision::Onboard, Some(0.12))).collect();
        let m = compute_metrics(&recs, 0.15, 60.0, &load_factors(&[], 0.003, 60.0));
        assert_eq!(m.p_rt, 1.0);
        assert_eq!(m.p_d, 0.0);
        assert_eq!(m.delay.unwrap().median, 0.12);
    }

    #[test]
    fn drops_count_against_real_time() {
        let mut recs: Vec<_> = (0..6823).map(|_| frame(Decision::Offload(1), Some(0.05))).collect();
        recs.extend((0..3177).map(|_| frame(Decision::Drop(DropReason::LightDrop), None)));
        let m = compute_metrics(&recs, 0.15, 60.0, &load_factors(&[], 0.003, 60.0));
        assert!((m.p_rt - 0.6823).abs() < 1e-12);
        assert!((m.p_d - 0.3177).abs() < 1e-12);
        assert!((m.frac_onboard + m.frac_offload + m.frac_drop - 1.0).abs() < 1e-12);
        assert!((m.p_rt + m.p_late + m.p_d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn in_flight_and_late_frames() {
        let recs = vec![
            frame(Decision::Onboard, Some(0.2)),
            frame(Decision::Offload(3), Some(100.0)),
            frame(Decision::Offload(3), None),
            frame(Decision::Onboard, Some(0.1)),
        ];
        let m = compute_metrics(&recs, 0.15, 60.0, &load_factors(&[], 0.003, 60.0));
        assert_eq!(m.completed, 2);
        assert_eq!(m.in_flight, 2);
        assert_eq!(m.on_time, 1);
        assert_eq!(m.p_rt, 0.25);
        assert_eq!(m.p_late, 0.75);
        assert_eq!(m.delay.unwrap().max, 0.2);
    }

    #[test]
    fn load_factor_example() {
        let lf = load_factors(&[(1, 100), (2, 0)], 0.003, 1.0);
        assert_eq!(lf.per_satellite.len(), 1);
        assert!((lf.mean - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), Some(2.5));
        assert_eq!(quantile_sorted(&v, 0.25), Some(1.75));
        assert_eq!(quantile_sorted(&v, 1.0), Some(4.0));
        assert_eq!(quantile_sorted(&[], 0.5), None);
        let b = BoxStats::from_samples(&[5.0, 1.0, 3.0]).unwrap();
        assert_eq!((b.min, b.median, b.max), (1.0, 3.0, 5.0));
    }
}
