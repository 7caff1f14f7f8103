use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_wsr::gradcheck::{check_equivalent_gradient, check_wsr_gradient, DEFAULT_DELTA};
use ris_wsr::harness::{experiment_lipschitz, run_experiment, ExperimentSpec, LipschitzSpec, Preset, Sweep, SweepParam};
use ris_wsr::model::{dbm_to_watts, SystemConfig};
use ris_wsr::{AlgorithmVariant, Result};

#[derive(Parser)]
#[command(name = "ris-wsr", version, about = "Weighted sum-rate optimization for RIS-assisted MU-MIMO downlink")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte-Carlo experiment and write CSV results.
    Run(RunArgs),
    /// Compare gradient Lipschitz estimates of the original and reduced objectives.
    Lipschitz(LipschitzArgs),
    /// Check the phase gradients against central finite differences.
    Gradcheck(GradArgs),
    /// Lint an experiment spec file.
    Validate {
        spec: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment spec; flags below override it.
    spec: Option<PathBuf>,
    /// Base preset when no spec file is given.
    #[arg(long, default_value = "desk")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<AlgorithmVariant>>,
    #[arg(long)]
    n_tx: Option<usize>,
    #[arg(long)]
    n_ris: Option<usize>,
    #[arg(long)]
    power_dbm: Option<f64>,
    /// Sweep parameter: n_ris, n_tx or power_bs_dbm.
    #[arg(long, requires = "sweep_values")]
    sweep: Option<SweepParam>,
    #[arg(long, value_delimiter = ',')]
    sweep_values: Option<Vec<f64>>,
    /// Skip the channel replay files.
    #[arg(long)]
    no_channels: bool,
}

#[derive(Args)]
struct LipschitzArgs {
    #[arg(long, default_value_t = 16)]
    n_tx: usize,
    #[arg(long, default_value_t = 32)]
    n_ris: usize,
    #[arg(long, default_value_t = 2)]
    users: usize,
    #[arg(long, default_value_t = 50)]
    realizations: usize,
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradArgs {
    #[arg(long, default_value_t = 20)]
    instances: u64,
    /// Coordinates checked per instance.
    #[arg(long, default_value_t = 16)]
    coords: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build_spec(a: RunArgs) -> Result<ExperimentSpec> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec::from_preset(a.preset),
    };
    if let Some(v) = a.seed {
        spec.master_seed = v;
    }
    if let Some(v) = a.realizations {
        spec.n_realizations = v;
    }
    if let Some(v) = a.out {
        spec.output_dir = v;
    }
    if a.threads.is_some() {
        spec.threads = a.threads;
    }
    if let Some(v) = a.variants {
        spec.variants = v;
    }
    if let Some(v) = a.n_tx {
        spec.base_config.n_tx = v;
    }
    if let Some(v) = a.n_ris {
        spec.base_config.n_ris = v;
    }
    if let Some(v) = a.power_dbm {
        spec.base_config.power_bs = dbm_to_watts(v);
    }
    if let (Some(parameter), Some(values)) = (a.sweep, a.sweep_values) {
        spec.sweep = Some(Sweep { parameter, values });
    }
    if a.no_channels {
        spec.write_channels = false;
    }
    Ok(spec)
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let spec = build_spec(a)?;
    for v in spec.lint().iter().filter(|v| !v.fatal) {
        log::warn!("{v}");
    }
    let s = run_experiment(&spec)?;
    println!("{:<12} {:<22} {:>10} {:>9} {:>9} {:>12} {:>6}", "sweep", "variant", "mean_wsr", "std", "iters", "cmul", "ok");
    for r in &s.rows {
        println!(
            "{:<12} {:<22} {:>10.4} {:>9.4} {:>9.1} {:>12.3e} {:>3}/{}",
            r.sweep_value,
            r.variant.label(),
            r.mean_wsr,
            r.std_wsr,
            r.mean_outer_iters,
            r.mean_cmul,
            r.n_ok,
            r.n_ok + r.n_failed
        );
    }
    for r in s.runs.iter().filter(|r| !r.ok) {
        eprintln!("failed: sweep {} realization {} {}: {}", r.sweep_value, r.realization, r.variant, r.error);
    }
    println!("results in {}", s.output_dir.display());
    Ok(s.n_failed() == 0)
}

fn cmd_lipschitz(a: LipschitzArgs) -> Result<bool> {
    let spec = LipschitzSpec {
        config: SystemConfig::miso(a.n_tx, a.n_ris, a.users),
        n_realizations: a.realizations,
        n_pairs: a.pairs,
        master_seed: a.seed,
        output_dir: a.out,
        ..LipschitzSpec::desk()
    };
    let rep = experiment_lipschitz(&spec)?;
    println!("{:<8} {:>14} {:>14} {:>8}", "row", "L_original", "L_equivalent", "ratio");
    for r in &rep.rows {
        println!("{:<8} {:>14.6e} {:>14.6e} {:>8.3}", r.row, r.l_original, r.l_equivalent, r.ratio);
    }
    Ok(true)
}

fn cmd_gradcheck(a: GradArgs) -> Result<bool> {
    let mimo = SystemConfig::desk();
    let miso = SystemConfig::miso(16, 32, 2);
    let mut ok = true;
    for (name, cfg, equivalent) in [("wsr (desk MIMO)", &mimo, false), ("reduced (MISO)", &miso, true)] {
        let mut worst = 0.0f64;
        for i in 0..a.instances {
            let seed = a.seed.wrapping_add(i);
            let r = if equivalent {
                check_equivalent_gradient(cfg, seed, a.coords, a.delta)?
            } else {
                check_wsr_gradient(cfg, seed, a.coords, a.delta)?
            };
            worst = worst.max(r.max_rel_err);
        }
        let pass = worst <= a.tol;
        ok &= pass;
        println!(
            "{name:<16} instances {} max rel err {worst:.3e} {}",
            a.instances,
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(ok)
}

fn cmd_validate(path: PathBuf) -> Result<bool> {
    let spec = ExperimentSpec::load(&path)?;
    let lint = spec.lint();
    for v in &lint {
        println!("{}: {v}", if v.fatal { "error" } else { "warning" });
    }
    let fatal = lint.iter().any(|v| v.fatal);
    if !fatal {
        println!("{} is valid", path.display());
    }
    Ok(!fatal)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Lipschitz(a) => cmd_lipschitz(a),
        Cmd::Gradcheck(a) => cmd_gradcheck(a),
        Cmd::Validate { spec } => cmd_validate(spec),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
