//! Monte-Carlo driver: runs every variant on shared channel realizations and
//! writes per-run traces plus an aggregate summary.
//!
//! Seeds. Realization `r` at sweep index `s` uses
//! `run_seed = derive_seed_path(master_seed, [s, r])`; the channel is drawn
//! from `derive_seed(run_seed, 0)` and `θ⁽⁰⁾` from `derive_seed(run_seed, 1)`.
//! Every variant of a realization sees the same channel and `θ⁽⁰⁾`; the
//! solvers themselves draw no random numbers.
//!
//! Layout of `output_dir`:
//!
//! * `summary.csv`, one row per (sweep value, variant)
//! * `runs.csv`, one row per run, including failed ones
//! * `traces/s{s}_r{r}_{variant}.csv`, per-iteration traces
//! * `channels/s{s}_r{r}.bin`, channel replay files (optional)

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::ao::{solve, AlgorithmVariant, SolveResult};
use crate::channel::{io as chan_io, ChannelSet};
use crate::error::{Error, Result};
use crate::harness::spec::ExperimentSpec;
use crate::model::{PhaseVector, SolveTrace};
use crate::rates::nats_to_bits;
use crate::seeding::{derive_seed, derive_seed_path, rng_from_seed};

/// Per-run seed for sweep index `sweep_idx` and realization `realization`.
pub fn run_seed(master_seed: u64, sweep_idx: usize, realization: usize) -> u64 {
    derive_seed_path(master_seed, &[sweep_idx as u64, realization as u64])
}

/// Channel and initial phases of one realization.
pub fn realization(spec: &ExperimentSpec, sweep_idx: usize, realization: usize) -> Result<(ChannelSet, PhaseVector)> {
    let cfg = spec.config_at(spec.sweep_points()[sweep_idx]);
    let seed = run_seed(spec.master_seed, sweep_idx, realization);
    let ch = ChannelSet::random_realization(&cfg, &spec.geometry, derive_seed(seed, 0))?;
    let theta0 = PhaseVector::random(cfg.n_ris, &mut rng_from_seed(derive_seed(seed, 1)));
    Ok((ch, theta0))
}

/// Outcome of one (sweep value, realization, variant) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub sweep_value: String,
    pub realization: usize,
    pub variant: AlgorithmVariant,
    pub seed: u64,
    pub ok: bool,
    pub wsr_nats: f64,
    pub outer_iters: usize,
    pub cmul: u64,
    pub mean_ls_steps: f64,
    pub stalls: usize,
    pub lstsq_fallbacks: usize,
    pub time_sec: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub sweep_value: String,
    pub variant: AlgorithmVariant,
    pub mean_wsr: f64,
    pub std_wsr: f64,
    pub mean_cmul: f64,
    pub mean_outer_iters: f64,
    pub mean_time_sec: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    /// Sorted by sweep index, realization, variant.
    pub runs: Vec<RunRecord>,
    pub output_dir: PathBuf,
}

impl ExperimentSummary {
    pub fn n_failed(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok).count()
    }

    pub fn row(&self, sweep_value: &str, variant: AlgorithmVariant) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.variant == variant)
    }
}

#[derive(Serialize)]
struct TraceRow {
    outer_iter: usize,
    wsr_nats: f64,
    wsr_bits: f64,
    alpha: f64,
    ls_steps: usize,
    sca_iters: usize,
    cum_cmul: u64,
    elapsed_sec: f64,
}

pub fn write_trace(path: &Path, trace: &SolveTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..trace.outer_iters() {
        w.serialize(TraceRow {
            outer_iter: i + 1,
            wsr_nats: trace.wsr_per_outer_iter[i],
            wsr_bits: nats_to_bits(trace.wsr_per_outer_iter[i]),
            alpha: trace.step_sizes[i],
            ls_steps: trace.line_search_steps[i],
            sca_iters: trace.sca_iters[i],
            cum_cmul: trace.cum_cmul[i],
            elapsed_sec: trace.elapsed_sec[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

fn sweep_label(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record(
    value: &str,
    realization: usize,
    variant: AlgorithmVariant,
    seed: u64,
    out: &Result<SolveResult>,
) -> RunRecord {
    let mut r = RunRecord {
        sweep_value: value.to_string(),
        realization,
        variant,
        seed,
        ok: false,
        wsr_nats: f64::NAN,
        outer_iters: 0,
        cmul: 0,
        mean_ls_steps: f64::NAN,
        stalls: 0,
        lstsq_fallbacks: 0,
        time_sec: 0.0,
        error: String::new(),
    };
    match out {
        Ok(s) => {
            let t = &s.trace;
            r.ok = true;
            r.wsr_nats = s.wsr_final;
            r.outer_iters = t.outer_iters();
            r.cmul = t.complex_mult_count;
            r.mean_ls_steps = t.line_search_steps.iter().sum::<usize>() as f64 / t.outer_iters().max(1) as f64;
            r.stalls = t.stalls;
            r.lstsq_fallbacks = t.lstsq_fallbacks;
            r.time_sec = t.wall_time_sec;
        }
        Err(e) => r.error = e.to_string(),
    }
    r
}

/// Runs all variants on one realization, writing traces (and the channel)
/// as it goes.
fn run_realization(spec: &ExperimentSpec, si: usize, ri: usize, dirs: &Dirs) -> Result<Vec<RunRecord>> {
    let value = spec.sweep_points()[si];
    let label = sweep_label(value);
    let cfg = spec.config_at(value);
    let seed = run_seed(spec.master_seed, si, ri);
    let (ch, theta0) = match realization(spec, si, ri) {
        Ok(x) => x,
        Err(e) => {
            let msg: Result<SolveResult> = Err(e);
            return Ok(spec.variants.iter().map(|&v| record(&label, ri, v, seed, &msg)).collect());
        }
    };
    if spec.write_channels {
        chan_io::save(&dirs.channels.join(format!("s{si}_r{ri}.bin")), &ch)?;
    }
    let mut out = Vec::with_capacity(spec.variants.len());
    for &v in &spec.variants {
        let res = solve(&ch, &cfg, v, &theta0);
        if let Ok(s) = &res {
            write_trace(&dirs.traces.join(format!("s{si}_r{ri}_{v}.csv")), &s.trace)?;
        }
        if let Err(e) = &res {
            log::warn!("run s{si} r{ri} {v} failed: {e}");
        }
        out.push(record(&label, ri, v, seed, &res));
    }
    Ok(out)
}

struct Dirs {
    traces: PathBuf,
    channels: PathBuf,
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (if n > 0 { s / n as f64 } else { f64::NAN }, n)
}

/// Aggregates run records into one row per (sweep value, variant), in
/// sweep order and then variant order of the spec.
pub fn summarize(spec: &ExperimentSpec, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let param = spec.sweep.as_ref().map(|s| s.parameter.to_string()).unwrap_or_default();
    let mut rows = Vec::new();
    for value in spec.sweep_points() {
        let label = sweep_label(value);
        for &v in &spec.variants {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.sweep_value == label && r.variant == v).collect();
            let ok: Vec<&&RunRecord> = mine.iter().filter(|r| r.ok).collect();
            let (mean_wsr, n) = mean(ok.iter().map(|r| r.wsr_nats));
            let std_wsr = if n > 1 {
                (ok.iter().map(|r| (r.wsr_nats - mean_wsr).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                sweep_param: param.clone(),
                sweep_value: label.clone(),
                variant: v,
                mean_wsr,
                std_wsr,
                mean_cmul: mean(ok.iter().map(|r| r.cmul as f64)).0,
                mean_outer_iters: mean(ok.iter().map(|r| r.outer_iters as f64)).0,
                mean_time_sec: mean(ok.iter().map(|r| r.time_sec)).0,
                n_ok: n,
                n_failed: mine.len() - n,
            });
        }
    }
    rows
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the whole experiment. Solver failures are recorded per run; only
/// filesystem errors and an invalid spec abort.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    spec.validate()?;
    let dirs = Dirs {
        traces: spec.output_dir.join("traces"),
        channels: spec.output_dir.join("channels"),
    };
    fs::create_dir_all(&dirs.traces)?;
    if spec.write_channels {
        fs::create_dir_all(&dirs.channels)?;
    }

    let jobs: Vec<(usize, usize)> = (0..spec.sweep_points().len())
        .flat_map(|s| (0..spec.n_realizations).map(move |r| (s, r)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Spec(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<RunRecord>>> =
        pool.install(|| jobs.par_iter().map(|&(s, r)| run_realization(spec, s, r, &dirs)).collect());

    // collect() keeps job order, which already is (sweep, realization, variant)
    let mut runs = Vec::with_capacity(jobs.len() * spec.variants.len());
    for r in results {
        runs.extend(r?);
    }
    let rows = summarize(spec, &runs);
    write_rows(&spec.output_dir.join("summary.csv"), &rows)?;
    write_rows(&spec.output_dir.join("runs.csv"), &runs)?;
    Ok(ExperimentSummary {
        rows,
        runs,
        output_dir: spec.output_dir.clone(),
    })
}
