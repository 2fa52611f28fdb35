//! Bar-chart and box-plot tables from run summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::write_file;
use crate::config::ScenarioConfig;
use crate::engine::metrics::quantile_sorted;
use crate::engine::Metrics;
use crate::policy::{Offload, Selection};
use crate::Error;

pub const POLICY_TABLE: &str = "policy_table.csv";
pub const SPLIT_TABLE: &str = "split_table.csv";
pub const BOXPLOT_TABLE: &str = "delay_boxplot.csv";

#[derive(Debug, Deserialize)]
struct RunSummary {
    seed: u64,
    config: ScenarioConfig,
    metrics: Metrics,
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_json(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    Ok(())
}

fn load_summaries(dir: &Path) -> Result<Vec<RunSummary>, Error> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p)?;
        if let Ok(s) = serde_json::from_str::<RunSummary>(&text) {
            out.push(s);
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5).unwrap_or(f64::NAN)
}

/// Sort key for a float that keeps numeric order.
fn key(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn policy_table(runs: &[RunSummary]) -> Result<Vec<u8>, Error> {
    type Acc = (String, Vec<f64>, Vec<f64>);
    let mut groups: BTreeMap<(String, i64, u32), Acc> = BTreeMap::new();
    for r in runs {
        let p = &r.config.policy;
        let (name, sigma) = match p.offload {
            Offload::Boo => ("boo", None),
            Offload::Ldboo => ("ldboo", Some(p.sigma)),
        };
        let e = groups
            .entry((name.to_string(), sigma.map_or(i64::MIN, key), p.backoff_max_frames))
            .or_insert_with(|| (sigma.map(|s| s.to_string()).unwrap_or_default(), Vec::new(), Vec::new()));
        e.1.push(r.metrics.p_rt);
        e.2.push(r.metrics.p_d);
    }
    let rows = groups
        .into_iter()
        .map(|((name, _, t_o), (sigma, prt, pd))| {
            vec![name, sigma, t_o.to_string(), median(prt).to_string(), median(pd).to_string()]
        })
        .collect();
    table(&["policy", "sigma", "t_o_max", "P_RT", "P_D"], rows)
}

fn split_table(runs: &[RunSummary]) -> Result<Vec<u8>, Error> {
    type Acc = (f64, String, [Vec<f64>; 4]);
    let mut groups: BTreeMap<(i64, usize), Acc> = BTreeMap::new();
    for r in runs {
        let c = r.config.leo_capacity_tflops;
        let s = r.config.constellation.size;
        let e = groups.entry((key(c), s.unwrap_or(usize::MAX))).or_insert_with(|| {
            (
                c,
                s.map_or("all".to_string(), |v| v.to_string()),
                Default::default(),
            )
        });
        let m = &r.metrics;
        for (acc, v) in e.2.iter_mut().zip([m.frac_onboard, m.frac_offload, m.frac_drop, m.rho]) {
            acc.push(v);
        }
    }
    let rows = groups
        .into_values()
        .map(|(c, s, [on, off, drop, rho])| {
            vec![
                c.to_string(),
                s,
                median(on).to_string(),
                median(off).to_string(),
                median(drop).to_string(),
                median(rho).to_string(),
            ]
        })
        .collect();
    table(&["C_LEO", "s", "frac_onboard", "frac_offload", "frac_drop", "rho"], rows)
}

fn boxplot_table(runs: &[RunSummary]) -> Result<Vec<u8>, Error> {
    let mut rows: Vec<(String, u32, i64, u64, Vec<String>)> = runs
        .iter()
        .filter_map(|r| {
            let d = r.metrics.delay?;
            let sel = match r.config.policy.selection {
                Selection::Ms => "ms",
                Selection::Sr => "sr",
            };
            Some((
                sel.to_string(),
                r.config.n_gvs,
                key(r.config.frame_rate_fps),
                r.seed,
                vec![
                    sel.to_string(),
                    r.config.n_gvs.to_string(),
                    r.config.frame_rate_fps.to_string(),
                    r.seed.to_string(),
                    d.min.to_string(),
                    d.q1.to_string(),
                    d.median.to_string(),
                    d.q3.to_string(),
                    d.max.to_string(),
                ],
            ))
        })
        .collect();
    rows.sort_by(|a, b| (&a.0, a.1, a.2, a.3).cmp(&(&b.0, b.1, b.2, b.3)));
    table(
        &["selection", "n_gvs", "frame_rate_fps", "seed", "min", "q1", "median", "q3", "max"],
        rows.into_iter().map(|r| r.4).collect(),
    )
}

/// Write the three tables for every run summary found under `results`.
pub fn run_report(results: &Path, out: &Path) -> Result<(), Error> {
    let runs = if results.is_dir() { load_summaries(results)? } else { Vec::new() };
    if runs.is_empty() {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no run summaries under {}", results.display()),
        )));
    }
    write_file(&out.join(POLICY_TABLE), &policy_table(&runs)?)?;
    write_file(&out.join(SPLIT_TABLE), &split_table(&runs)?)?;
    write_file(&out.join(BOXPLOT_TABLE), &boxplot_table(&runs)?)?;
    println!("{} runs -> {}", runs.len(), out.display());
    Ok(())
}
