//! Cartesian parameter sweeps with per-cell flushing.

use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;

use super::{thread_pool, write_file};
use crate::config::{ConfigError, ScenarioConfig};
use crate::engine::metrics::quantile_sorted;
use crate::engine::{output, run_simulation, SimReport};
use crate::Error;

/// One sweep dimension: a config key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    /// Parse `key=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let (key, vals) = s
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("malformed axis `{s}` (expected key=v1,v2,...)")))?;
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(Error::Usage(format!("malformed axis `{s}` (expected key=v1,v2,...)")));
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub jobs: usize,
    pub cell_limit: Option<usize>,
}

/// One (cell, seed) result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub params: Vec<String>,
    pub seed: u64,
    pub p_rt: f64,
    pub p_d: f64,
    pub rho: f64,
    pub median_t_d: Option<f64>,
    pub frac_onboard: f64,
    pub frac_offload: f64,
    pub frac_drop: f64,
}

impl SweepRow {
    fn from_report(cell: usize, params: &[String], r: &SimReport) -> Self {
        let m = &r.metrics;
        Self {
            cell,
            params: params.to_vec(),
            seed: r.seed,
            p_rt: m.p_rt,
            p_d: m.p_d,
            rho: m.rho,
            median_t_d: m.delay.map(|d| d.median),
            frac_onboard: m.frac_onboard,
            frac_offload: m.frac_offload,
            frac_drop: m.frac_drop,
        }
    }

    fn record(&self) -> Vec<String> {
        let mut v = vec![self.cell.to_string()];
        v.extend(self.params.iter().cloned());
        v.extend([
            self.seed.to_string(),
            self.p_rt.to_string(),
            self.p_d.to_string(),
            self.rho.to_string(),
            self.median_t_d.map(|x| x.to_string()).unwrap_or_default(),
            self.frac_onboard.to_string(),
            self.frac_offload.to_string(),
            self.frac_drop.to_string(),
        ]);
        v
    }
}

pub const SWEEP_FILE: &str = "sweep.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";

fn header(axes: &[Axis]) -> Vec<String> {
    let mut h = vec!["cell".to_string()];
    h.extend(axes.iter().map(|a| a.key.clone()));
    h.extend(
        ["seed", "P_RT", "P_D", "rho", "median_t_d", "frac_onboard", "frac_offload", "frac_drop"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// Grid points in canonical order (first axis outermost).
pub fn grid(axes: &[Axis]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

fn csv_line(fields: &[String]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Run every cell × seed. Rows are appended to `sweep.csv` as each cell
/// completes; once all cells finish the file is rewritten in canonical order
/// and the heatmap pivot is written.
pub fn run_sweep(base: &ScenarioConfig, axes: &[Axis], opts: &SweepOptions) -> Result<Vec<SweepRow>, Error> {
    let mut cells = grid(axes);
    if let Some(limit) = opts.cell_limit {
        cells.truncate(limit);
    }
    let configs = cells
        .iter()
        .map(|params| {
            let ov: Vec<(String, String)> = axes.iter().map(|a| a.key.clone()).zip(params.iter().cloned()).collect();
            base.with_overrides(&ov)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    fs::create_dir_all(opts.out.join("runs"))?;
    let sweep_path = opts.out.join(SWEEP_FILE);
    let mut file = File::create(&sweep_path)?;
    file.write_all(&csv_line(&header(axes))?)?;
    file.flush()?;
    let sink = Mutex::new(file);

    let pool = thread_pool(opts.jobs)?;
    let results: Vec<Vec<SweepRow>> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(k, cfg)| -> Result<Vec<SweepRow>, Error> {
                let reports = opts
                    .seeds
                    .par_iter()
                    .map(|&seed| {
                        let mut c = cfg.clone();
                        c.seed = seed;
                        run_simulation(&c)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut lines = Vec::new();
                let mut rows = Vec::new();
                for r in &reports {
                    write_file(
                        &opts.out.join("runs").join(format!("cell{k}_seed{}.json", r.seed)),
                        output::summary_json(r).as_bytes(),
                    )?;
                    let row = SweepRow::from_report(k, &cells[k], r);
                    lines.extend(csv_line(&row.record())?);
                    rows.push(row);
                }
                let mut f = sink.lock().expect("collector lock");
                f.write_all(&lines)?;
                f.flush()?;
                Ok(rows)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    drop(sink);

    let rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    let mut canonical = csv_line(&header(axes))?;
    for r in &rows {
        canonical.extend(csv_line(&r.record())?);
    }
    let tmp = opts.out.join(format!(".{SWEEP_FILE}.tmp"));
    fs::write(&tmp, &canonical)?;
    fs::rename(&tmp, &sweep_path)?;
    write_file(&opts.out.join(HEATMAP_FILE), &heatmap(axes, &rows)?)?;
    for r in &rows {
        println!(
            "cell={} {} seed={} P_RT={:.4} P_D={:.4} rho={:.3}",
            r.cell,
            axes.iter()
                .zip(&r.params)
                .map(|(a, v)| format!("{}={}", a.key, v))
                .collect::<Vec<_>>()
                .join(" "),
            r.seed,
            r.p_rt,
            r.p_d,
            r.rho
        );
    }
    Ok(rows)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Median P_RT over seeds, pivoted with the second axis as columns and the
/// remaining axes as row keys.
pub fn heatmap(axes: &[Axis], rows: &[SweepRow]) -> Result<Vec<u8>, Error> {
    let cell_median = |pred: &dyn Fn(&SweepRow) -> bool| -> String {
        median(rows.iter().filter(|r| pred(r)).map(|r| r.p_rt).collect())
            .map(|m| m.to_string())
            .unwrap_or_default()
    };
    let mut out = Vec::new();
    if axes.len() < 2 {
        let mut h: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
        h.push("P_RT".into());
        out.extend(csv_line(&h)?);
        for params in grid(axes) {
            let mut line = params.clone();
            line.push(cell_median(&|r| r.params == params));
            out.extend(csv_line(&line)?);
        }
        return Ok(out);
    }
    let col = &axes[1];
    let row_axes: Vec<Axis> = axes.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, a)| a.clone()).collect();
    let mut h: Vec<String> = row_axes.iter().map(|a| a.key.clone()).collect();
    h.extend(col.values.iter().map(|v| format!("{}={}", col.key, v)));
    out.extend(csv_line(&h)?);
    for key in grid(&row_axes) {
        let mut line = key.clone();
        for cv in &col.values {
            let mut params = key.clone();
            params.insert(1, cv.clone());
            line.push(cell_median(&|r| r.params == params));
        }
        out.extend(csv_line(&line)?);
    }
    Ok(out)
}
