use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-wsr"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_accepts_shipped_configs() {
    for f in ["desk.toml", "sweep_nris.toml", "full.toml"] {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(f);
        let out = bin().arg("validate").arg(&p).output().unwrap();
        assert!(out.status.success(), "{f}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn validate_flags_fatal_and_warns_otherwise() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "n_realizations = 0\n[system]\nn_streams = 3\n");
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("n_realizations") && text.contains("n_streams exceeds n_rx"), "{text}");

    let warn = write(dir.path(), "warn.toml", "[system]\nweights = [0.5, 0.7]\n");
    let out = bin().arg("validate").arg(&warn).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("warning: weights"));

    let typo = write(dir.path(), "typo.toml", "n_realisations = 3\n");
    let out = bin().arg("validate").arg(&typo).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_results_and_flag_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", "n_realizations = 5\nvariants = [\"proposed\"]\n");
    let out_dir = dir.path().join("out");
    let out = bin()
        .arg("run")
        .arg(&spec)
        .args(["--realizations", "2", "--n-tx", "4", "--n-ris", "8", "--variants", "proposed,without_ris", "--threads", "2"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_param,sweep_value,variant,mean_wsr,std_wsr,mean_cmul,mean_outer_iters,mean_time_sec,n_ok,n_failed"
    );
    assert_eq!(lines.count(), 2);
    assert_eq!(std::fs::read_dir(out_dir.join("traces")).unwrap().count(), 4);
    let trace = std::fs::read_to_string(out_dir.join("traces/s0_r0_proposed.csv")).unwrap();
    assert!(trace.starts_with("outer_iter,wsr_nats,wsr_bits,alpha,ls_steps,sca_iters,cum_cmul,elapsed_sec"));
}

#[test]
fn run_rejects_invalid_spec() {
    let out = bin()
        .args(["run", "--variants", "bls2_equivalent_theta", "--realizations", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bls2_equivalent_theta"));
}

#[test]
fn gradcheck_and_lipschitz_subcommands() {
    let out = bin().args(["gradcheck", "--instances", "2", "--coords", "4"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches(" ok").count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["lipschitz", "--n-tx", "4", "--n-ris", "8", "--realizations", "2", "--pairs", "50", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("lipschitz.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
