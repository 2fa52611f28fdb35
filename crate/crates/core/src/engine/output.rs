//! Per-frame CSV and summary JSON writers.

use std::io::Write;

use super::metrics::is_completed;
use super::SimReport;
use crate::policy::Decision;
use crate::queueing::FrameTask;

pub const FRAME_HEADER: [&str; 11] = [
    "gv_id",
    "seq",
    "gen_t",
    "decision",
    "sat_id",
    "t_ul",
    "t_dl",
    "w_q",
    "t_d",
    "deadline_met",
    "drop_reason",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn frame_row(f: &FrameTask, deadline_s: f64, horizon_s: f64) -> [String; 11] {
    let completed = is_completed(f, horizon_s);
    let t_d = if completed { f.total_delay_s } else { None };
    let sat = match f.decision {
        Decision::Offload(s) => s.to_string(),
        _ => String::new(),
    };
    let reason = match f.decision {
        Decision::Drop(r) => r.as_str().to_string(),
        _ => String::new(),
    };
    [
        f.gv_id.to_string(),
        f.seq.to_string(),
        f.gen_time_s.to_string(),
        f.decision.to_string(),
        sat,
        opt(f.t_ul_s),
        opt(f.t_dl_s),
        opt(f.wait_s),
        opt(t_d),
        t_d.is_some_and(|d| d < deadline_s).to_string(),
        reason,
    ]
}

pub fn write_frames_csv<W: Write>(report: &SimReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FRAME_HEADER)?;
    let (deadline, horizon) = (report.config.deadline_s, report.config.sim_time_s);
    for f in &report.frames {
        out.write_record(frame_row(f, deadline, horizon))?;
    }
    out.flush()?;
    Ok(())
}

pub fn frames_csv_bytes(report: &SimReport) -> Vec<u8> {
    let mut buf = Vec::new();
    write_frames_csv(report, &mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn summary_json(report: &SimReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// One-line human summary.
pub fn summary_line(report: &SimReport) -> String {
    let m = &report.metrics;
    format!(
        "seed={} frames={} P_RT={:.4} P_D={:.4} onboard={:.4} offload={:.4} rho={:.3} median_t_d={}",
        report.seed,
        m.generated,
        m.p_rt,
        m.p_d,
        m.frac_onboard,
        m.frac_offload,
        m.rho,
        m.delay.map_or("-".to_string(), |d| format!("{:.4}", d.median)),
    )
}
