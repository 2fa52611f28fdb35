//! Command-line front end: `simulate`, `sweep`, `trace-elevation`,
//! `fetch-tle` and `report`.

mod report;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{load_scenario, parse_override, ScenarioConfig};
use crate::engine::{self, output, trace, Fleet};
use crate::tle::fetch::{fetch_tle_group, HttpTransport, Transport};
use crate::Error;

pub use report::run_report;
pub use sweep::{run_sweep, Axis, SweepOptions};

pub const CACHE_ENV: &str = "LEOVEC_CACHE";
pub const DEFAULT_ENDPOINT: &str = "https://celestrak.org/NORAD/elements/gp.php";

#[derive(Debug, Parser)]
#[command(name = "leovec", version, about = "LEO vehicular edge-computing offloading simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario once per seed.
    Simulate(RunArgs),
    /// Run a parameter grid.
    Sweep(SweepArgs),
    /// Elevation time series of satellites seen from the placement centre.
    TraceElevation(TraceArgs),
    /// Download (or read from cache) a TLE group.
    FetchTle(FetchArgs),
    /// Reshape simulate / sweep outputs into plot-ready tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// `key=value`, dotted keys for nested settings. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<ScenarioConfig, Error> {
        let ov = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(load_scenario(&self.scenario, &ov)?)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Seeds, comma separated. Defaults to the scenario's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `key=v1,v2,...`. Repeatable; the grid is the Cartesian product.
    #[arg(long = "axis", value_name = "KEY=V1,V2,...", required = true)]
    pub axes: Vec<String>,
    /// Stop after this many cells.
    #[arg(long)]
    pub cell_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Catalog ids; defaults to every satellite above the horizon at t = 0.
    #[arg(long, value_delimiter = ',')]
    pub sats: Vec<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Trace length [s]; defaults to the scenario's simulated time.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long, default_value = "starlink")]
    pub group: String,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Cache directory; falls back to $LEOVEC_CACHE.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Serve from cache only.
    #[arg(long)]
    pub offline: bool,
    /// Write the blob here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding simulate / sweep outputs.
    #[arg(long)]
    pub results: PathBuf,
    /// Where to write the tables; defaults to the results directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Sweep(a) => {
            let cfg = a.run.scenario.load()?;
            let axes = a.axes.iter().map(|s| Axis::parse(s)).collect::<Result<Vec<_>, _>>()?;
            let opts = SweepOptions {
                seeds: seeds_or_default(&a.run.seeds, &cfg),
                out: a.run.out.clone(),
                jobs: a.run.jobs,
                cell_limit: a.cell_limit,
            };
            run_sweep(&cfg, &axes, &opts).map(|_| ())
        }
        Command::TraceElevation(a) => trace_elevation(&a),
        Command::FetchTle(a) => fetch(&a, None),
        Command::Report(a) => run_report(&a.results, a.out.as_deref().unwrap_or(&a.results)),
    }
}

fn seeds_or_default(seeds: &[u64], cfg: &ScenarioConfig) -> Vec<u64> {
    if seeds.is_empty() {
        vec![cfg.seed]
    } else {
        seeds.to_vec()
    }
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(io::Error::other(e)))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn frames_file(seed: u64) -> String {
    format!("frames_seed{seed}.csv")
}

pub fn summary_file(seed: u64) -> String {
    format!("summary_seed{seed}.json")
}

fn simulate(a: &RunArgs) -> Result<(), Error> {
    let cfg = a.scenario.load()?;
    let seeds = seeds_or_default(&a.seeds, &cfg);
    fs::create_dir_all(&a.out)?;
    let pool = thread_pool(a.jobs)?;
    let reports = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                engine::run_simulation(&c)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    for r in &reports {
        write_file(&a.out.join(frames_file(r.seed)), &output::frames_csv_bytes(r))?;
        write_file(&a.out.join(summary_file(r.seed)), output::summary_json(r).as_bytes())?;
        println!("{}", output::summary_line(r));
    }
    Ok(())
}

fn trace_elevation(a: &TraceArgs) -> Result<(), Error> {
    let cfg = a.scenario.load()?;
    let constellation = engine::load_scenario_constellation(&cfg)?;
    let fleet = Fleet::new(&constellation)?;
    let start = engine::start_jd(&cfg, &fleet)?;
    let sats = (!a.sats.is_empty()).then_some(a.sats.as_slice());
    let samples = trace::elevation_trace(
        &fleet,
        cfg.gv_placement.center,
        start,
        a.duration.unwrap_or(cfg.sim_time_s),
        a.step,
        sats,
    )?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            Box::new(fs::File::create(p)?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t_s", "sat_id", "elevation_deg", "slant_km"])?;
    for s in samples {
        w.write_record([
            s.t_s.to_string(),
            s.sat_id.to_string(),
            s.elevation_deg.to_string(),
            s.slant_km.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `fetch-tle`; `transport` overrides the HTTP client (tests).
pub fn fetch(a: &FetchArgs, transport: Option<&dyn Transport>) -> Result<(), Error> {
    let cache = a
        .cache
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .ok_or_else(|| Error::Usage(format!("no cache directory: pass --cache or set {CACHE_ENV}")))?;
    let http = HttpTransport;
    let t: Option<&dyn Transport> = if a.offline { None } else { Some(transport.unwrap_or(&http)) };
    let today = chrono::Utc::now().date_naive();
    let blob = fetch_tle_group(t, &a.endpoint, &a.group, &cache, today)?;
    let records = crate::tle::parse_blob(&blob)?;
    eprintln!("{} records in group {}", records.len(), a.group);
    match &a.out {
        Some(p) => write_file(p, blob.as_bytes())?,
        None => io::stdout().write_all(blob.as_bytes())?,
    }
    Ok(())
}
