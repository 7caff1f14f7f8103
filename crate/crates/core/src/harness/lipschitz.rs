//! Empirical comparison of the gradient Lipschitz constants of the original
//! objective `R(θ)` and the reduced objective `R̃(θ)` (single-antenna users).
//!
//! Per realization: draw a channel and a random `θ`, solve for the
//! precoders once at that `θ`, then hold `W` (for `R`) and `F` (for `R̃`)
//! fixed and estimate both constants from the same sample pairs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::channel::{stack_channels, ChannelSet, GeometryConfig};
use crate::error::{Error, Result};
use crate::metrics::OpCounter;
use crate::model::{AuxPrecoderSet, PhaseVector, SystemConfig};
use crate::precoder::solve_precoder;
use crate::ris::{estimate_lipschitz, LipschitzTarget};
use crate::seeding::{derive_seed, derive_seed_path, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSpec {
    pub config: SystemConfig,
    pub geometry: GeometryConfig,
    pub n_realizations: usize,
    pub n_pairs: usize,
    pub master_seed: u64,
    /// `lipschitz.csv` is written here when set.
    pub output_dir: Option<PathBuf>,
}

impl LipschitzSpec {
    /// `N_t=16, N_s=32, K=2` single-antenna users, 50 realizations of 10⁴
    /// pairs.
    pub fn desk() -> Self {
        Self {
            config: SystemConfig::miso(16, 32, 2),
            geometry: GeometryConfig::default(),
            n_realizations: 50,
            n_pairs: 10_000,
            master_seed: 0,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzRow {
    /// Realization index, `median`, or `sanity`.
    pub row: String,
    pub seed: u64,
    pub l_original: f64,
    pub l_equivalent: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub rows: Vec<LipschitzRow>,
    pub median_ratio: f64,
    /// Both estimates on the RIS-free channel, where `θ` has no effect.
    pub sanity: LipschitzRow,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn estimate_pair(ch: &ChannelSet, cfg: &SystemConfig, theta: &PhaseVector, n_pairs: usize, seed: u64) -> Result<(f64, f64)> {
    let ops = &mut OpCounter::new();
    let h = stack_channels(ops, ch, theta);
    let sol = solve_precoder(ops, &AuxPrecoderSet::matched_filter(cfg), &h, cfg)?;
    let pair_seed = derive_seed(seed, 2);
    let lo = estimate_lipschitz(ch, LipschitzTarget::Original(&sol.w), cfg, n_pairs, pair_seed)?;
    let le = estimate_lipschitz(ch, LipschitzTarget::Equivalent(&sol.f), cfg, n_pairs, pair_seed)?;
    Ok((lo, le))
}

pub fn experiment_lipschitz(spec: &LipschitzSpec) -> Result<LipschitzReport> {
    let cfg = &spec.config;
    if !cfg.is_miso() {
        return Err(Error::UnsupportedConfig(
            "the Lipschitz comparison needs single-antenna users (n_rx = n_streams = 1)".into(),
        ));
    }
    cfg.ensure_solvable()?;
    if spec.n_realizations == 0 || spec.n_pairs == 0 {
        return Err(Error::Spec("n_realizations and n_pairs must be positive".into()));
    }

    let mut rows = Vec::with_capacity(spec.n_realizations + 2);
    let mut first: Option<(ChannelSet, PhaseVector, u64)> = None;
    for r in 0..spec.n_realizations {
        let seed = derive_seed_path(spec.master_seed, &[r as u64]);
        let ch = ChannelSet::random_realization(cfg, &spec.geometry, derive_seed(seed, 0))?;
        let theta = PhaseVector::random(cfg.n_ris, &mut rng_from_seed(derive_seed(seed, 1)));
        let (lo, le) = estimate_pair(&ch, cfg, &theta, spec.n_pairs, seed)?;
        rows.push(LipschitzRow {
            row: r.to_string(),
            seed,
            l_original: lo,
            l_equivalent: le,
            ratio: ratio(le, lo),
        });
        if first.is_none() {
            first = Some((ch, theta, seed));
        }
    }

    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let median_ratio = median(&ratios);
    rows.push(LipschitzRow {
        row: "median".into(),
        seed: spec.master_seed,
        l_original: median(&rows.iter().map(|r| r.l_original).collect::<Vec<_>>()),
        l_equivalent: median(&rows.iter().map(|r| r.l_equivalent).collect::<Vec<_>>()),
        ratio: median_ratio,
    });

    let (ch, theta, seed) = first.expect("at least one realization");
    let flat = ch.without_ris();
    let (lo, le) = estimate_pair(&flat, cfg, &theta, spec.n_pairs.min(100), seed)?;
    let sanity = LipschitzRow {
        row: "sanity".into(),
        seed,
        l_original: lo,
        l_equivalent: le,
        ratio: ratio(le, lo),
    };
    rows.push(sanity.clone());

    if let Some(dir) = &spec.output_dir {
        write_report(dir, &rows)?;
    }
    Ok(LipschitzReport {
        rows,
        median_ratio,
        sanity,
    })
}

fn write_report(dir: &Path, rows: &[LipschitzRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("lipschitz.csv"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn rows_and_sanity() {
        let dir = tempfile::tempdir().unwrap();
        let spec = LipschitzSpec {
            config: SystemConfig::miso(4, 8, 2),
            n_realizations: 3,
            n_pairs: 20,
            output_dir: Some(dir.path().to_path_buf()),
            ..LipschitzSpec::desk()
        };
        let rep = experiment_lipschitz(&spec).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert_eq!(rep.rows[3].row, "median");
        assert_eq!(rep.sanity.l_original, 0.0);
        assert_eq!(rep.sanity.l_equivalent, 0.0);
        assert!(rep.rows[..3].iter().all(|r| r.l_original > 0.0 && r.l_equivalent > 0.0));
        let text = fs::read_to_string(dir.path().join("lipschitz.csv")).unwrap();
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn mimo_is_rejected() {
        let spec = LipschitzSpec {
            config: SystemConfig::desk(),
            ..LipschitzSpec::desk()
        };
        assert!(matches!(experiment_lipschitz(&spec), Err(Error::UnsupportedConfig(_))));
    }
}
