//! Experiment description and its TOML file format.
//!
//! The file is a flat overlay on a preset: every key is optional and
//! replaces the preset value. Powers are given in dBm here and converted to
//! watts for the solvers.
//!
//! ```toml
//! preset = "desk"            # or "full"
//! master_seed = 7
//! n_realizations = 20
//! output_dir = "out/desk"
//! variants = ["proposed", "bls1_conventional_pg", "random_phase", "without_ris"]
//! threads = 4                # worker pool size, default: all cores
//! write_channels = true      # replay files under output_dir/channels
//!
//! [system]
//! n_tx = 16
//! n_ris = 64
//! power_bs_dbm = 30.0
//! noise_dbm = -90.0
//!
//! [geometry]
//! user_center = [200.0, 30.0]
//! rician_k = 10.0
//!
//! [sweep]
//! parameter = "n_ris"        # n_ris | n_tx | power_bs_dbm
//! values = [32, 64, 128]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::ao::AlgorithmVariant;
use crate::channel::{GeometryConfig, Point};
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, default_weights, validate_config, ConfigViolation, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NRis,
    NTx,
    /// Transmit power in dBm.
    PowerBsDbm,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::NRis => "n_ris",
            SweepParam::NTx => "n_tx",
            SweepParam::PowerBsDbm => "power_bs_dbm",
        }
    }

    fn is_count(self) -> bool {
        !matches!(self, SweepParam::PowerBsDbm)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "n_ris" => Ok(SweepParam::NRis),
            "n_tx" => Ok(SweepParam::NTx),
            "power_bs_dbm" | "power_bs" => Ok(SweepParam::PowerBsDbm),
            other => Err(Error::Spec(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Full,
    #[default]
    Desk,
}

impl Preset {
    pub fn config(self) -> SystemConfig {
        match self {
            Preset::Full => SystemConfig::full_scale(),
            Preset::Desk => SystemConfig::desk(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Spec(format!("unknown preset {other:?} (expected full or desk)"))),
        }
    }
}

/// A Monte-Carlo experiment: every variant on `n_realizations` channels
/// for each sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base_config: SystemConfig,
    pub geometry: GeometryConfig,
    pub variants: Vec<AlgorithmVariant>,
    pub sweep: Option<Sweep>,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub write_channels: bool,
}

impl ExperimentSpec {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            base_config: preset.config(),
            geometry: GeometryConfig::default(),
            variants: vec![
                AlgorithmVariant::Proposed,
                AlgorithmVariant::Bls1ConventionalPg,
                AlgorithmVariant::RandomPhase,
                AlgorithmVariant::WithoutRis,
            ],
            sweep: None,
            n_realizations: 10,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            threads: None,
            write_channels: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        file.into_spec()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Sweep values, or the single implicit point of an unswept spec.
    pub fn sweep_points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Configuration at one sweep point.
    pub fn config_at(&self, value: Option<f64>) -> SystemConfig {
        let mut cfg = self.base_config.clone();
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            match s.parameter {
                SweepParam::NRis => cfg.n_ris = v as usize,
                SweepParam::NTx => cfg.n_tx = v as usize,
                SweepParam::PowerBsDbm => cfg.power_bs = dbm_to_watts(v),
            }
        }
        cfg
    }

    /// Every violation; fatal ones make [`ExperimentSpec::validate`] fail.
    pub fn lint(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        if self.n_realizations == 0 {
            fatal(&mut out, "n_realizations", "must be at least 1".into());
        }
        if self.variants.is_empty() {
            fatal(&mut out, "variants", "at least one variant is required".into());
        }
        if let Err(e) = self.geometry.validate() {
            fatal(&mut out, "geometry", e.to_string());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                fatal(&mut out, "sweep.values", "must not be empty".into());
            }
            if s.values.windows(2).any(|w| !(w[1] > w[0])) {
                fatal(&mut out, "sweep.values", "must be strictly increasing".into());
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                fatal(&mut out, "sweep.values", "must be finite".into());
            }
            if s.parameter.is_count() && s.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                fatal(&mut out, "sweep.values", format!("{} values must be positive integers", s.parameter));
            }
        }
        for value in self.sweep_points() {
            let cfg = self.config_at(value);
            if let Err(v) = validate_config(&cfg) {
                for mut v in v {
                    if let Some(x) = value {
                        v.message = format!("{} (at sweep value {x})", v.message);
                    }
                    out.push(v);
                }
            }
            if !cfg.is_miso() && self.variants.contains(&AlgorithmVariant::Bls2EquivalentTheta) {
                fatal(&mut out, "variants", "bls2_equivalent_theta requires n_rx = n_streams = 1".into());
            }
        }
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fatal: Vec<_> = self.lint().into_iter().filter(|v| v.fatal).collect();
        if fatal.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(fatal))
        }
    }
}

fn fatal(out: &mut Vec<ConfigViolation>, field: &'static str, message: String) {
    out.push(ConfigViolation {
        field,
        message,
        fatal: true,
    });
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    preset: Option<Preset>,
    master_seed: Option<u64>,
    n_realizations: Option<usize>,
    output_dir: Option<PathBuf>,
    variants: Option<Vec<AlgorithmVariant>>,
    threads: Option<usize>,
    write_channels: Option<bool>,
    #[serde(default)]
    system: SystemFile,
    #[serde(default)]
    geometry: GeometryFile,
    sweep: Option<Sweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n_tx: Option<usize>,
    n_ris: Option<usize>,
    n_users: Option<usize>,
    n_rx: Option<usize>,
    n_streams: Option<usize>,
    power_bs_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    weights: Option<Vec<f64>>,
    sca_tol: Option<f64>,
    sca_max_iters: Option<usize>,
    ao_tol: Option<f64>,
    ls_shrink: Option<f64>,
    ls_beta: Option<f64>,
    ls_max_steps: Option<usize>,
    ao_max_iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    bs_pos: Option<Point>,
    ris_pos: Option<Point>,
    user_center: Option<Point>,
    user_radius: Option<f64>,
    rician_k: Option<f64>,
    ris_user_los: Option<bool>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl SpecFile {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::from_preset(self.preset.unwrap_or_default());
        set(&mut spec.master_seed, self.master_seed);
        set(&mut spec.n_realizations, self.n_realizations);
        set(&mut spec.output_dir, self.output_dir);
        set(&mut spec.variants, self.variants);
        set(&mut spec.write_channels, self.write_channels);
        spec.threads = self.threads.or(spec.threads);
        spec.sweep = self.sweep;

        let c = &mut spec.base_config;
        let s = self.system;
        // a new user count without explicit weights gets the default weights
        if let Some(k) = s.n_users {
            c.n_users = k;
            c.weights = default_weights(k);
        }
        set(&mut c.n_tx, s.n_tx);
        set(&mut c.n_ris, s.n_ris);
        set(&mut c.n_rx, s.n_rx);
        set(&mut c.n_streams, s.n_streams);
        set(&mut c.power_bs, s.power_bs_dbm.map(dbm_to_watts));
        set(&mut c.noise_power, s.noise_dbm.map(dbm_to_watts));
        set(&mut c.weights, s.weights);
        set(&mut c.sca_tol, s.sca_tol);
        set(&mut c.sca_max_iters, s.sca_max_iters);
        set(&mut c.ao_tol, s.ao_tol);
        set(&mut c.ls_shrink, s.ls_shrink);
        set(&mut c.ls_beta, s.ls_beta);
        set(&mut c.ls_max_steps, s.ls_max_steps);
        set(&mut c.ao_max_iters, s.ao_max_iters);

        let g = &mut spec.geometry;
        let f = self.geometry;
        set(&mut g.bs_pos, f.bs_pos);
        set(&mut g.ris_pos, f.ris_pos);
        set(&mut g.user_center, f.user_center);
        set(&mut g.user_radius, f.user_radius);
        set(&mut g.rician_k, f.rician_k);
        set(&mut g.ris_user_los, f.ris_user_los);
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_desk_preset() {
        let spec = ExperimentSpec::from_toml_str("").unwrap();
        assert_eq!(spec, ExperimentSpec::from_preset(Preset::Desk));
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn overlay_and_units() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            preset = "full"
            master_seed = 9
            variants = ["proposed", "without_ris"]
            [system]
            n_users = 2
            power_bs_dbm = 20.0
            noise_dbm = -80.0
            [geometry]
            user_radius = 5.0
            [sweep]
            parameter = "n_ris"
            values = [32, 64]
            "#,
        )
        .unwrap();
        let c = &spec.base_config;
        assert_eq!((c.n_tx, c.n_ris, c.n_users), (64, 400, 2));
        assert_eq!(c.weights, default_weights(2));
        assert!((c.power_bs - 0.1).abs() < 1e-15);
        assert!((c.noise_power - 1e-11).abs() < 1e-24);
        assert_eq!(spec.geometry.user_radius, 5.0);
        assert_eq!(spec.config_at(Some(32.0)).n_ris, 32);
        assert_eq!(spec.sweep_points(), vec![Some(32.0), Some(64.0)]);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentSpec::from_toml_str("n_real = 3"), Err(Error::Spec(_))));
        assert!(ExperimentSpec::from_toml_str("[system]\npower_bs = 1.0").is_err());
        assert!(ExperimentSpec::from_toml_str("variants = [\"wmmse\"]").is_err());
    }

    #[test]
    fn lint_reports_bad_sweeps_and_variants() {
        let mut spec = ExperimentSpec::from_preset(Preset::Desk);
        spec.sweep = Some(Sweep {
            parameter: SweepParam::NRis,
            values: vec![64.0, 32.0, 16.5],
        });
        spec.variants.push(AlgorithmVariant::Bls2EquivalentTheta);
        spec.n_realizations = 0;
        let lint = spec.lint();
        let fields: Vec<_> = lint.iter().map(|v| v.field).collect();
        assert!(fields.contains(&"n_realizations"));
        assert!(fields.contains(&"variants"));
        assert_eq!(fields.iter().filter(|f| **f == "sweep.values").count(), 2);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn weight_sum_is_only_a_warning() {
        let mut spec = ExperimentSpec::from_preset(Preset::Desk);
        spec.base_config.weights = vec![0.5, 0.6];
        let lint = spec.lint();
        assert_eq!(lint.len(), 1);
        assert!(!lint[0].fatal);
        assert!(spec.validate().is_ok());
    }
}
