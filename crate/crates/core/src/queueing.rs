//! Deterministic-service FIFO compute queues and the delay estimators used by
//! the offloading policies.
//!
//! With a constant service time the whole queue state collapses to the
//! instant at which it would drain with no further arrivals, so each arrival
//! is O(1).

use serde::Serialize;
use thiserror::Error;

use crate::policy::Decision;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("compute capacity must be positive")]
    ZeroCapacity,
    #[error("arrival at {t_now} precedes previous arrival at {last}")]
    TimeRegression { t_now: f64, last: f64 },
    #[error("no serving satellite")]
    NoAssociation,
}

/// Processing time of one frame of `load_flop` on a platform of `capacity_flops`.
/// Units only need to agree (e.g. TFLOP and TFLOPS).
pub fn service_time(load_flop: f64, capacity_flops: f64) -> Result<f64, QueueError> {
    if !(capacity_flops > 0.0) {
        return Err(QueueError::ZeroCapacity);
    }
    Ok(load_flop / capacity_flops)
}

/// Outcome of one enqueue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enqueued {
    pub wait_s: f64,
    pub service_start_s: f64,
    pub completion_s: f64,
}

/// Infinite FIFO with deterministic service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkQueue {
    pub service_time_s: f64,
    pub last_completion_s: f64,
    pub arrived_count: u64,
    pub busy_seconds: f64,
    last_arrival_s: f64,
}

impl WorkQueue {
    pub fn new(service_time_s: f64) -> Self {
        Self {
            service_time_s,
            last_completion_s: f64::NEG_INFINITY,
            arrived_count: 0,
            busy_seconds: 0.0,
            last_arrival_s: f64::NEG_INFINITY,
        }
    }

    /// Remaining work [s] at `t`.
    pub fn backlog(&self, t: f64) -> f64 {
        (self.last_completion_s - t).max(0.0)
    }

    pub fn enqueue(&mut self, t_now: f64) -> Result<Enqueued, QueueError> {
        if t_now < self.last_arrival_s {
            return Err(QueueError::TimeRegression {
                t_now,
                last: self.last_arrival_s,
            });
        }
        let wait_s = self.backlog(t_now);
        let service_start_s = t_now + wait_s;
        let completion_s = service_start_s + self.service_time_s;
        self.last_completion_s = completion_s;
        self.last_arrival_s = t_now;
        self.arrived_count += 1;
        self.busy_seconds += self.service_time_s;
        Ok(Enqueued {
            wait_s,
            service_start_s,
            completion_s,
        })
    }

    /// Frames fully served by `t`. Every frame still in the system occupies
    /// one service slot of the backlog.
    pub fn served_by(&self, t: f64) -> u64 {
        if self.service_time_s <= 0.0 {
            return self.arrived_count;
        }
        let remaining = (self.backlog(t) / self.service_time_s - 1e-9).ceil().max(0.0) as u64;
        self.arrived_count - remaining.min(self.arrived_count)
    }
}

/// Estimated onboard delay: current backlog plus one service time.
pub fn estimate_onboard_delay(queue: &WorkQueue, t_now: f64) -> f64 {
    queue.backlog(t_now) + queue.service_time_s
}

/// Most recent queue report received by a GV from a satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackView {
    pub sat_id: u32,
    /// Satellite backlog [s] right after enqueueing the reporting frame.
    pub reported_backlog_s: f64,
    pub sat_stamp_s: f64,
    pub received_s: f64,
    /// Offloads this GV made to `sat_id` after the reporting frame.
    pub frames_sent_since: u32,
    /// Sequence number of the frame that triggered the report.
    pub frame_seq: u64,
}

/// Link terms of the offload delay, evaluated at the current geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadLink {
    pub sat_id: u32,
    pub prop_delay_s: f64,
    pub t_ul_s: f64,
    pub t_dl_s: f64,
    pub snr_ul_db: f64,
    pub snr_dl_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadEstimate {
    pub waiting_s: f64,
    pub total_s: f64,
}

/// Satellite waiting time from a feedback report: the reported backlog
/// drained at the known rate since it was measured, plus this GV's own later
/// offloads. Zero when the report is absent, for another satellite, or older
/// than `freshness_s`.
pub fn estimate_satellite_wait(
    fb: Option<&FeedbackView>,
    sat_id: u32,
    t_now: f64,
    freshness_s: f64,
    service_leo_s: f64,
) -> f64 {
    match fb {
        Some(fb) if fb.sat_id == sat_id && t_now - fb.sat_stamp_s <= freshness_s => {
            (fb.reported_backlog_s - (t_now - fb.sat_stamp_s)).max(0.0)
                + fb.frames_sent_since as f64 * service_leo_s
        }
        _ => 0.0,
    }
}

/// t̂_LEO = 2τ_p + t_UL + t_DL + Ŵ + C/C_LEO.
pub fn estimate_offload_delay(
    fb: Option<&FeedbackView>,
    t_now: f64,
    freshness_s: f64,
    link: Option<&OffloadLink>,
    service_leo_s: f64,
) -> Result<OffloadEstimate, QueueError> {
    let link = link.ok_or(QueueError::NoAssociation)?;
    let waiting_s = estimate_satellite_wait(fb, link.sat_id, t_now, freshness_s, service_leo_s);
    Ok(OffloadEstimate {
        waiting_s,
        total_s: 2.0 * link.prop_delay_s + link.t_ul_s + link.t_dl_s + waiting_s + service_leo_s,
    })
}

/// Lifecycle of one sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTask {
    pub gv_id: u32,
    pub seq: u64,
    pub gen_time_s: f64,
    pub size_ul_bits: f64,
    pub size_dl_bits: f64,
    pub load_flop: f64,
    pub decision: Decision,
    pub uplink_start_s: Option<f64>,
    pub t_ul_s: Option<f64>,
    pub t_dl_s: Option<f64>,
    /// One-way propagation delay of the offload path.
    pub prop_delay_s: Option<f64>,
    /// Delay estimate that drove the decision (t̂_GV or t̂_LEO).
    pub t_hat_s: Option<f64>,
    pub enqueue_s: Option<f64>,
    pub wait_s: Option<f64>,
    pub service_start_s: Option<f64>,
    pub service_end_s: Option<f64>,
    /// Time the result is available at the GV.
    pub done_s: Option<f64>,
    /// End-to-end delay; `None` for drops and for frames still in flight.
    pub total_delay_s: Option<f64>,
}

impl FrameTask {
    pub fn new(gv_id: u32, seq: u64, gen_time_s: f64, size_ul_bits: f64, size_dl_bits: f64, load_flop: f64) -> Self {
        Self {
            gv_id,
            seq,
            gen_time_s,
            size_ul_bits,
            size_dl_bits,
            load_flop,
            decision: Decision::Pending,
            uplink_start_s: None,
            t_ul_s: None,
            t_dl_s: None,
            prop_delay_s: None,
            t_hat_s: None,
            enqueue_s: None,
            wait_s: None,
            service_start_s: None,
            service_end_s: None,
            done_s: None,
            total_delay_s: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook Lindley recursion: W₁ = 0, W_{k+1} = max(0, W_k + S − A_k).
    fn lindley(arrivals: &[f64], service: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(arrivals.len());
        let mut w = 0.0f64;
        for (k, _) in arrivals.iter().enumerate() {
            if k > 0 {
                w = (w + service - (arrivals[k] - arrivals[k - 1])).max(0.0);
            }
            out.push(w);
        }
        out
    }

    #[test]
    fn service_time_examples() {
        assert!((service_time(0.06, 0.5).unwrap() - 0.12).abs() < 1e-15);
        assert!((service_time(0.06, 20.0).unwrap() - 0.003).abs() < 1e-15);
        assert_eq!(service_time(0.0, 20.0).unwrap(), 0.0);
        assert_eq!(service_time(0.06, 0.0), Err(QueueError::ZeroCapacity));
    }

    #[test]
    fn enqueue_examples() {
        let mut q = WorkQueue::new(0.12);
        let a = q.enqueue(0.0).unwrap();
        assert_eq!(a.wait_s, 0.0);
        assert_eq!(a.completion_s, 0.12);
        let b = q.enqueue(0.1).unwrap();
        assert!((b.wait_s - 0.02).abs() < 1e-15);
        let c = q.enqueue(0.2).unwrap();
        assert!((c.wait_s - 0.04).abs() < 1e-15);
        assert_eq!(q.enqueue(0.15), Err(QueueError::TimeRegression { t_now: 0.15, last: 0.2 }));
    }

    #[test]
    fn served_count_and_work_conservation() {
        let mut q = WorkQueue::new(0.12);
        for t in [0.0, 0.1, 0.2] {
            q.enqueue(t).unwrap();
        }
        assert_eq!(q.served_by(0.2), 1);
        assert_eq!(q.served_by(0.25), 2);
        assert_eq!(q.served_by(10.0), 3);
        assert!((q.busy_seconds - q.served_by(10.0) as f64 * 0.12).abs() < 1e-12);
    }

    #[test]
    fn onboard_estimate_examples() {
        let q = WorkQueue::new(0.12);
        assert_eq!(estimate_onboard_delay(&q, 0.0), 0.12);
        let mut q = WorkQueue::new(0.12);
        q.enqueue(0.0).unwrap();
        assert!((estimate_onboard_delay(&q, 0.07) - 0.17).abs() < 1e-15);
    }

    fn link() -> OffloadLink {
        OffloadLink {
            sat_id: 7,
            prop_delay_s: 0.002,
            t_ul_s: 0.0265,
            t_dl_s: 0.0009,
            snr_ul_db: 34.0,
            snr_dl_db: 35.0,
        }
    }

    #[test]
    fn offload_estimate_examples() {
        let l = link();
        let est = estimate_offload_delay(None, 1.0, 0.15, Some(&l), 0.003).unwrap();
        assert_eq!(est.waiting_s, 0.0);
        assert!((est.total_s - (0.004 + 0.0265 + 0.0009 + 0.003)).abs() < 1e-15);

        let fb = FeedbackView {
            sat_id: 7,
            reported_backlog_s: 0.10,
            sat_stamp_s: 0.96,
            received_s: 0.965,
            frames_sent_since: 0,
            frame_seq: 3,
        };
        let w = estimate_satellite_wait(Some(&fb), 7, 1.0, 0.15, 0.003);
        assert!((w - 0.06).abs() < 1e-12);

        let fb = FeedbackView {
            reported_backlog_s: 0.02,
            sat_stamp_s: 0.99,
            frames_sent_since: 2,
            ..fb
        };
        let w = estimate_satellite_wait(Some(&fb), 7, 1.0, 0.15, 0.003);
        assert!((w - 0.016).abs() < 1e-12);

        // Stale or foreign reports are ignored.
        assert_eq!(estimate_satellite_wait(Some(&fb), 7, 1.2, 0.15, 0.003), 0.0);
        assert_eq!(estimate_satellite_wait(Some(&fb), 8, 1.0, 0.15, 0.003), 0.0);
        assert_eq!(
            estimate_offload_delay(None, 1.0, 0.15, None, 0.003),
            Err(QueueError::NoAssociation)
        );
    }

    proptest! {
        #[test]
        fn matches_lindley(gaps in proptest::collection::vec(0.0f64..0.3, 1..200), service in 0.0f64..0.2) {
            let mut t = 0.0;
            let arrivals: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
            let oracle = lindley(&arrivals, service);
            let mut q = WorkQueue::new(service);
            for (a, w) in arrivals.iter().zip(oracle) {
                let got = q.enqueue(*a).unwrap().wait_s;
                prop_assert!((got - w).abs() < 1e-12, "{got} vs {w}");
            }
        }

        #[test]
        fn uncongested_never_waits(n in 1usize..100, service in 0.0f64..0.099) {
            let mut q = WorkQueue::new(service);
            for k in 0..n {
                prop_assert_eq!(q.enqueue(k as f64 * 0.1).unwrap().wait_s, 0.0);
            }
        }
    }
}
