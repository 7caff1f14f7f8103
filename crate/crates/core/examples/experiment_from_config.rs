//! Parses an experiment spec, runs it, and prints the summary table.
//! Pass a TOML file path to use it instead of the built-in spec.

use ris_wsr::harness::{run_experiment, ExperimentSpec};

const SPEC: &str = r#"
preset = "desk"
master_seed = 4
n_realizations = 4
variants = ["proposed", "random_phase", "without_ris"]
write_channels = false

[system]
n_tx = 8

[sweep]
parameter = "power_bs_dbm"
values = [20.0, 30.0]
"#;

fn main() -> ris_wsr::Result<()> {
    let mut spec = match std::env::args().nth(1) {
        Some(p) => ExperimentSpec::load(p.as_ref())?,
        None => ExperimentSpec::from_toml_str(SPEC)?,
    };
    spec.output_dir = std::env::temp_dir().join("ris_wsr_example_experiment");
    let s = run_experiment(&spec)?;
    for r in &s.rows {
        println!(
            "{}={:<6} {:<22} WSR {:.4} ± {:.4}  iters {:.1}  ok {}/{}",
            r.sweep_param,
            r.sweep_value,
            r.variant.label(),
            r.mean_wsr,
            r.std_wsr,
            r.mean_outer_iters,
            r.n_ok,
            r.n_ok + r.n_failed
        );
    }
    println!("CSV files in {}", s.output_dir.display());
    Ok(())
}
