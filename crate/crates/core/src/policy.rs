//! Satellite selection (MS / SR), association upkeep, and the BOO / LDBOO
//! offload-or-drop decision ladder with feedback-driven back-off.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::queueing::{estimate_offload_delay, FeedbackView, OffloadLink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Maximum SNR.
    Ms,
    /// Sufficient-random: uniform among satellites above the selection threshold.
    Sr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Offload {
    Boo,
    Ldboo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Backoff,
    NoCoverage,
    Overload,
    LightDrop,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::Backoff => "backoff",
            DropReason::NoCoverage => "no_coverage",
            DropReason::Overload => "overload",
            DropReason::LightDrop => "light_drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Pending,
    Onboard,
    Offload(u32),
    Drop(DropReason),
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Pending => "pending",
            Decision::Onboard => "onboard",
            Decision::Offload(_) => "offload",
            Decision::Drop(_) => "drop",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub selection: Selection,
    pub offload: Offload,
    pub sigma: f64,
    pub backoff_max_frames: u32,
    pub snr_serve_th_db: f64,
    pub snr_select_th_db: f64,
    pub deadline_s: f64,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma > 0.0) {
            return Err("sigma must be positive".into());
        }
        if self.backoff_max_frames < 1 {
            return Err("backoff_max_frames must be at least 1".into());
        }
        if !(self.snr_select_th_db >= self.snr_serve_th_db) {
            return Err("snr_select_th_db must be >= snr_serve_th_db".into());
        }
        if !(self.deadline_s > 0.0) {
            return Err("deadline_s must be positive".into());
        }
        Ok(())
    }
}

/// Random streams consumed by the policy. Kept separate so that, e.g.,
/// switching BOO to LDBOO does not shift the SR selection sequence.
pub struct PolicyRngs<R> {
    pub selection: R,
    pub light_drop: R,
    pub backoff: R,
}

/// Per-GV policy state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GvPolicyState {
    pub serving_sat: Option<u32>,
    pub backoff_frames_left: u32,
    pub last_feedback: Option<FeedbackView>,
    /// (frame seq, deadline) of offloaded frames awaiting feedback.
    pub pending_feedback: Vec<(u64, f64)>,
}

/// Pick a satellite from `(sat_id, snr_db)` candidates, or `None` when no
/// satellite exceeds the serving threshold.
pub fn select_satellite<R: Rng>(visible: &[(u32, f64)], cfg: &PolicyConfig, rng: &mut R) -> Option<u32> {
    let best = || {
        visible
            .iter()
            .filter(|(_, g)| *g > cfg.snr_serve_th_db)
            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
            .map(|(id, _)| *id)
    };
    match cfg.selection {
        Selection::Ms => best(),
        Selection::Sr => {
            let mut candidates: Vec<u32> = visible
                .iter()
                .filter(|(_, g)| *g > cfg.snr_select_th_db)
                .map(|(id, _)| *id)
                .collect();
            if candidates.is_empty() {
                return best();
            }
            candidates.sort_unstable();
            Some(candidates[rng.gen_range(0..candidates.len())])
        }
    }
}

/// Keep the serving satellite while its SNR stays above the serving
/// threshold; otherwise hand over. `serving_snr_db` is `None` when the
/// serving satellite is no longer visible. Returns true on reselection.
pub fn maintain_association<R: Rng>(
    state: &mut GvPolicyState,
    serving_snr_db: Option<f64>,
    visible: &[(u32, f64)],
    cfg: &PolicyConfig,
    rng: &mut R,
) -> bool {
    if state.serving_sat.is_some() && serving_snr_db.is_some_and(|g| g > cfg.snr_serve_th_db) {
        return false;
    }
    state.serving_sat = select_satellite(visible, cfg, rng);
    true
}

/// min(1, (t̂_LEO / δ)^σ).
pub fn drop_probability(t_hat_leo: f64, deadline_s: f64, sigma: f64) -> f64 {
    (t_hat_leo / deadline_s).max(0.0).powf(sigma).min(1.0)
}

/// Back-off length in frames, uniform on {1, …, max_frames}.
pub fn draw_backoff<R: Rng>(rng: &mut R, max_frames: u32) -> u32 {
    rng.gen_range(1..=max_frames.max(1))
}

/// Everything the ladder needs about the offload path, computed lazily.
pub struct LadderOutcome {
    pub decision: Decision,
    pub t_hat_leo: Option<f64>,
    pub link: Option<OffloadLink>,
}

/// One decision per generated frame.
///
/// `link_for` evaluates the current link to the serving satellite; it is only
/// called when the ladder reaches the offload estimate.
#[allow(clippy::too_many_arguments)]
pub fn decide_frame<R: Rng>(
    state: &mut GvPolicyState,
    seq: u64,
    t_now: f64,
    t_hat_gv: f64,
    service_leo_s: f64,
    link_for: impl FnOnce(u32) -> Option<OffloadLink>,
    cfg: &PolicyConfig,
    rngs: &mut PolicyRngs<R>,
) -> LadderOutcome {
    let outcome = |decision| LadderOutcome {
        decision,
        t_hat_leo: None,
        link: None,
    };
    if t_hat_gv < cfg.deadline_s {
        return outcome(Decision::Onboard);
    }
    if state.backoff_frames_left > 0 {
        state.backoff_frames_left -= 1;
        return outcome(Decision::Drop(DropReason::Backoff));
    }
    let Some(link) = state.serving_sat.and_then(link_for) else {
        return outcome(Decision::Drop(DropReason::NoCoverage));
    };
    let t_hat = estimate_offload_delay(state.last_feedback.as_ref(), t_now, cfg.deadline_s, Some(&link), service_leo_s)
        .expect("link present")
        .total_s;
    let with = |decision| LadderOutcome {
        decision,
        t_hat_leo: Some(t_hat),
        link: Some(link),
    };
    if t_hat >= cfg.deadline_s {
        state.backoff_frames_left = draw_backoff(&mut rngs.backoff, cfg.backoff_max_frames);
        return with(Decision::Drop(DropReason::Overload));
    }
    if cfg.offload == Offload::Ldboo {
        let u: f64 = rngs.light_drop.gen();
        if u < drop_probability(t_hat, cfg.deadline_s, cfg.sigma) {
            return with(Decision::Drop(DropReason::LightDrop));
        }
    }
    state.pending_feedback.push((seq, t_now + cfg.deadline_s));
    if let Some(fb) = state.last_feedback.as_mut() {
        if fb.sat_id == link.sat_id {
            fb.frames_sent_since += 1;
        }
    }
    with(Decision::Offload(link.sat_id))
}

/// Feedback for frame `fb.frame_seq` arrived. Offloads of that GV to the same
/// satellite with a larger sequence number count as sent since the report.
pub fn on_feedback(state: &mut GvPolicyState, mut fb: FeedbackView, sent_after: u32) {
    state.pending_feedback.retain(|(s, _)| *s != fb.frame_seq);
    let newer = state
        .last_feedback
        .as_ref()
        .is_none_or(|old| fb.sat_stamp_s > old.sat_stamp_s);
    if newer {
        fb.frames_sent_since = sent_after;
        state.last_feedback = Some(fb);
    }
}

/// Clock check: if any offloaded frame's feedback deadline passed without a
/// report, clear the pending list and enter back-off (unless already in one).
/// Returns true when a new back-off was drawn.
pub fn on_tick<R: Rng>(state: &mut GvPolicyState, t_now: f64, cfg: &PolicyConfig, rng: &mut R) -> bool {
    if !state.pending_feedback.iter().any(|(_, d)| *d <= t_now) {
        return false;
    }
    state.pending_feedback.clear();
    if state.backoff_frames_left > 0 {
        return false;
    }
    state.backoff_frames_left = draw_backoff(rng, cfg.backoff_max_frames);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(selection: Selection, offload: Offload, sigma: f64) -> PolicyConfig {
        PolicyConfig {
            selection,
            offload,
            sigma,
            backoff_max_frames: 10,
            snr_serve_th_db: 0.0,
            snr_select_th_db: 10.0,
            deadline_s: 0.15,
        }
    }

    fn rngs(seed: u64) -> PolicyRngs<ChaCha8Rng> {
        PolicyRngs {
            selection: ChaCha8Rng::seed_from_u64(seed),
            light_drop: ChaCha8Rng::seed_from_u64(seed + 1),
            backoff: ChaCha8Rng::seed_from_u64(seed + 2),
        }
    }

    fn link_with_total(total: f64) -> OffloadLink {
        // 2τ_p + t_UL + t_DL + service = total with no feedback.
        OffloadLink {
            sat_id: 9,
            prop_delay_s: 0.002,
            t_ul_s: total - 0.004 - 0.001 - 0.003,
            t_dl_s: 0.001,
            snr_ul_db: 30.0,
            snr_dl_db: 30.0,
        }
    }

    #[test]
    fn ms_picks_argmax() {
        let mut r = ChaCha8Rng::seed_from_u64(0);
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        assert_eq!(select_satellite(&[(7, 12.0), (9, 18.5)], &c, &mut r), Some(9));
        assert_eq!(select_satellite(&[(9, 18.5), (7, 18.5)], &c, &mut r), Some(7));
        assert_eq!(select_satellite(&[(7, -1.0)], &c, &mut r), None);
        assert_eq!(select_satellite(&[], &c, &mut r), None);
    }

    #[test]
    fn ms_invariant_under_monotone_transform() {
        let mut r = ChaCha8Rng::seed_from_u64(0);
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        let vis: Vec<(u32, f64)> = (0..50).map(|i| (i, ((i * 37) % 23) as f64 + 1.0)).collect();
        let warped: Vec<(u32, f64)> = vis.iter().map(|(i, g)| (*i, g.powi(3) + 5.0)).collect();
        assert_eq!(select_satellite(&vis, &c, &mut r), select_satellite(&warped, &c, &mut r));
    }

    #[test]
    fn sr_is_uniform() {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        let c = cfg(Selection::Sr, Offload::Boo, 4.0);
        let n = 10_000;
        let sevens = (0..n)
            .filter(|_| select_satellite(&[(7, 12.0), (9, 18.5)], &c, &mut r) == Some(7))
            .count();
        let f = sevens as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn sr_falls_back_to_ms() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let c = cfg(Selection::Sr, Offload::Boo, 4.0);
        assert_eq!(select_satellite(&[(7, 4.0)], &c, &mut r), Some(7));
        assert_eq!(select_satellite(&[(7, 4.0), (8, 6.0)], &c, &mut r), Some(8));
    }

    #[test]
    fn association_upkeep() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        let mut s = GvPolicyState {
            serving_sat: Some(3),
            ..Default::default()
        };
        assert!(!maintain_association(&mut s, Some(0.5), &[(4, 20.0)], &c, &mut r));
        assert_eq!(s.serving_sat, Some(3));
        assert!(maintain_association(&mut s, Some(-1.0), &[(4, 20.0), (5, 12.0)], &c, &mut r));
        assert_eq!(s.serving_sat, Some(4));
        assert!(maintain_association(&mut s, None, &[], &c, &mut r));
        assert_eq!(s.serving_sat, None);
    }

    #[test]
    fn drop_probability_examples() {
        for sigma in [0.5, 1.0, 4.0, 6.0] {
            assert_eq!(drop_probability(0.15, 0.15, sigma), 1.0);
            assert_eq!(drop_probability(0.0, 0.15, sigma), 0.0);
        }
        assert!((drop_probability(0.075, 0.15, 4.0) - 0.0625).abs() < 1e-15);
        assert_eq!(drop_probability(0.3, 0.15, 2.0), 1.0);
    }

    #[test]
    fn backoff_draws() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        assert!((0..100).all(|_| draw_backoff(&mut r, 1) == 1));
        let n = 100_000;
        let draws: Vec<u32> = (0..n).map(|_| draw_backoff(&mut r, 10)).collect();
        assert!(draws.iter().all(|d| (1..=10).contains(d)));
        let mean = draws.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
        assert!((mean - 5.5).abs() < 0.1, "{mean}");
    }

    #[test]
    fn ladder_onboard_first() {
        let c = cfg(Selection::Ms, Offload::Ldboo, 4.0);
        let mut s = GvPolicyState {
            backoff_frames_left: 3,
            ..Default::default()
        };
        let out = decide_frame(&mut s, 0, 0.0, 0.12, 0.003, |_| panic!("not needed"), &c, &mut rngs(0));
        assert_eq!(out.decision, Decision::Onboard);
        assert_eq!(s.backoff_frames_left, 3);
    }

    #[test]
    fn ladder_backoff_then_coverage() {
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        let mut s = GvPolicyState {
            backoff_frames_left: 3,
            ..Default::default()
        };
        let out = decide_frame(&mut s, 0, 0.0, 0.17, 0.003, |_| panic!("not needed"), &c, &mut rngs(0));
        assert_eq!(out.decision, Decision::Drop(DropReason::Backoff));
        assert_eq!(s.backoff_frames_left, 2);
        s.backoff_frames_left = 0;
        let out = decide_frame(&mut s, 1, 0.0, 0.17, 0.003, |_| panic!("no serving sat"), &c, &mut rngs(0));
        assert_eq!(out.decision, Decision::Drop(DropReason::NoCoverage));
    }

    #[test]
    fn ladder_overload_enters_backoff() {
        for offload in [Offload::Boo, Offload::Ldboo] {
            let c = cfg(Selection::Ms, offload, 4.0);
            let mut s = GvPolicyState {
                serving_sat: Some(9),
                ..Default::default()
            };
            let out = decide_frame(&mut s, 0, 0.0, 0.17, 0.003, |_| Some(link_with_total(0.16)), &c, &mut rngs(0));
            assert_eq!(out.decision, Decision::Drop(DropReason::Overload));
            assert!((1..=10).contains(&s.backoff_frames_left));
            assert!(s.pending_feedback.is_empty());
        }
    }

    #[test]
    fn boo_never_light_drops() {
        let c = cfg(Selection::Ms, Offload::Boo, 1.0);
        let mut rg = rngs(3);
        for k in 0..1000 {
            let mut s = GvPolicyState {
                serving_sat: Some(9),
                ..Default::default()
            };
            let out = decide_frame(&mut s, k, 0.0, 0.17, 0.003, |_| Some(link_with_total(0.149)), &c, &mut rg);
            assert_eq!(out.decision, Decision::Offload(9));
            assert_eq!(s.backoff_frames_left, 0);
            assert_eq!(s.pending_feedback, vec![(k, 0.15)]);
        }
    }

    #[test]
    fn ldboo_light_drop_frequency() {
        let c = cfg(Selection::Ms, Offload::Ldboo, 4.0);
        let mut rg = rngs(11);
        let n = 100_000;
        let mut drops = 0;
        for k in 0..n {
            let mut s = GvPolicyState {
                serving_sat: Some(9),
                ..Default::default()
            };
            let out = decide_frame(&mut s, k, 0.0, 0.17, 0.003, |_| Some(link_with_total(0.075)), &c, &mut rg);
            match out.decision {
                Decision::Drop(DropReason::LightDrop) => {
                    drops += 1;
                    assert_eq!(s.backoff_frames_left, 0);
                }
                Decision::Offload(9) => {}
                d => panic!("{d:?}"),
            }
        }
        let f = drops as f64 / n as f64;
        assert!((f - 0.0625).abs() < 0.01, "{f}");
    }

    #[test]
    fn feedback_clears_deadline_and_timeout_backs_off() {
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let mut s = GvPolicyState {
            serving_sat: Some(9),
            pending_feedback: vec![(0, 0.15), (1, 0.183)],
            ..Default::default()
        };
        let fb = FeedbackView {
            sat_id: 9,
            reported_backlog_s: 0.01,
            sat_stamp_s: 0.1,
            received_s: 0.135,
            frames_sent_since: 0,
            frame_seq: 0,
        };
        on_feedback(&mut s, fb, 1);
        assert_eq!(s.pending_feedback, vec![(1, 0.183)]);
        assert_eq!(s.last_feedback.unwrap().frames_sent_since, 1);
        assert!(!on_tick(&mut s, 0.18, &c, &mut r));
        assert_eq!(s.backoff_frames_left, 0);
        assert!(on_tick(&mut s, 0.183, &c, &mut r));
        assert!((1..=10).contains(&s.backoff_frames_left));
        assert!(s.pending_feedback.is_empty());

        // No nesting while a back-off is active.
        let left = s.backoff_frames_left;
        s.pending_feedback.push((5, 0.3));
        assert!(!on_tick(&mut s, 0.31, &c, &mut r));
        assert_eq!(s.backoff_frames_left, left);
        assert!(s.pending_feedback.is_empty());

        // Older reports do not replace newer ones.
        let older = FeedbackView { sat_stamp_s: 0.05, frame_seq: 7, ..fb };
        on_feedback(&mut s, older, 0);
        assert_eq!(s.last_feedback.unwrap().frame_seq, 0);
    }

    #[test]
    fn stale_feedback_means_zero_wait() {
        let c = cfg(Selection::Ms, Offload::Boo, 4.0);
        let fb = FeedbackView {
            sat_id: 9,
            reported_backlog_s: 10.0,
            sat_stamp_s: 0.0,
            received_s: 0.01,
            frames_sent_since: 50,
            frame_seq: 0,
        };
        let mut s = GvPolicyState {
            serving_sat: Some(9),
            last_feedback: Some(fb),
            ..Default::default()
        };
        let out = decide_frame(&mut s, 1, 0.2, 0.17, 0.003, |_| Some(link_with_total(0.05)), &c, &mut rngs(0));
        assert_eq!(out.decision, Decision::Offload(9));
        assert!((out.t_hat_leo.unwrap() - 0.05).abs() < 1e-12);
    }
}
