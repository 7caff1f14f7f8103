//! Central finite-difference checks of the phase gradients.
//!
//! Coordinate `n` is perturbed by `±δ` along the real and the imaginary
//! axis (off the unit circle; both objectives are smooth there). With the
//! gradient convention of [`crate::ris`], the two difference quotients
//! approximate `2 Re ∇_n` and `2 Im ∇_n`. Errors are reported relative to
//! `max_n |∇_n|`, so coordinates with a tiny gradient do not dominate.

use rand::seq::index::sample;

use crate::channel::{stack_channels_with, ChannelSet, GeometryConfig};
use crate::error::Result;
use crate::linalg::{CVec, C64};
use crate::metrics::OpCounter;
use crate::model::{AuxPrecoderSet, PhaseVector, SystemConfig};
use crate::precoder::{solve_precoder, PrecoderSolution};
use crate::rates;
use crate::ris;
use crate::seeding::{derive_seed, rng_from_seed};

pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|fd − 2·part| / max|∇|` over the checked coordinates.
    pub max_rel_err: f64,
    pub grad_scale: f64,
    pub coords: usize,
}

/// Compares `grad` with central differences of `objective` on `coords`.
pub fn compare<F>(theta: &PhaseVector, grad: &CVec, coords: &[usize], delta: f64, mut objective: F) -> Result<GradCheck>
where
    F: FnMut(&CVec) -> Result<f64>,
{
    let scale = grad.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut worst = 0.0f64;
    for &n in coords {
        for (dir, part) in [(C64::new(delta, 0.0), grad[n].re), (C64::new(0.0, delta), grad[n].im)] {
            let mut plus = theta.as_vector().clone();
            let mut minus = plus.clone();
            plus[n] += dir;
            minus[n] -= dir;
            let fd = (objective(&plus)? - objective(&minus)?) / (2.0 * delta);
            let err = (fd - 2.0 * part).abs();
            worst = worst.max(if scale > 0.0 { err / scale } else { err });
        }
    }
    Ok(GradCheck {
        max_rel_err: worst,
        grad_scale: scale,
        coords: coords.len(),
    })
}

/// Random realization, random `θ`, and SCA precoders at that `θ`.
fn instance(cfg: &SystemConfig, seed: u64) -> Result<(ChannelSet, PhaseVector, PrecoderSolution)> {
    let ch = ChannelSet::random_realization(cfg, &GeometryConfig::default(), seed)?;
    let theta = PhaseVector::random(cfg.n_ris, &mut rng_from_seed(derive_seed(seed, 1)));
    let ops = &mut OpCounter::new();
    let h = stack_channels_with(ops, &ch, theta.as_vector());
    let sol = solve_precoder(ops, &AuxPrecoderSet::matched_filter(cfg), &h, cfg)?;
    Ok((ch, theta, sol))
}

fn pick_coords(n_ris: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut v = sample(&mut rng_from_seed(seed), n_ris, n.min(n_ris)).into_vec();
    v.sort_unstable();
    v
}

/// Checks the weighted-sum-rate gradient on one seeded instance.
pub fn check_wsr_gradient(cfg: &SystemConfig, seed: u64, n_coords: usize, delta: f64) -> Result<GradCheck> {
    let (ch, theta, sol) = instance(cfg, seed)?;
    let grad = ris::grad_wsr_theta(&mut OpCounter::new(), &ch, &theta, &sol.w, cfg)?;
    let coords = pick_coords(cfg.n_ris, n_coords, derive_seed(seed, 2));
    compare(&theta, &grad, &coords, delta, |t| {
        let ops = &mut OpCounter::new();
        let h = stack_channels_with(ops, &ch, t);
        rates::wsr_stacked(ops, &h, &sol.w, cfg)
    })
}

/// Checks the reduced-objective gradient (single-antenna users).
pub fn check_equivalent_gradient(cfg: &SystemConfig, seed: u64, n_coords: usize, delta: f64) -> Result<GradCheck> {
    let (ch, theta, sol) = instance(cfg, seed)?;
    let grad = ris::grad_equiv_theta_miso(&mut OpCounter::new(), &ch, &theta, &sol.f, cfg)?;
    let coords = pick_coords(cfg.n_ris, n_coords, derive_seed(seed, 2));
    compare(&theta, &grad, &coords, delta, |t| {
        let ops = &mut OpCounter::new();
        let h = stack_channels_with(ops, &ch, t);
        rates::equivalent_rate(ops, &h, &sol.f, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_of_quadratic() {
        // f(θ) = |θ_0|² + Re θ_1, ∇ = (θ_0, 1/2)
        let theta = PhaseVector::from_angles(&[0.3, 1.0]);
        let t = theta.as_vector();
        let grad = CVec::from_vec(vec![t[0], C64::new(0.5, 0.0)]);
        let r = compare(&theta, &grad, &[0, 1], 1e-5, |v| Ok(v[0].norm_sqr() + v[1].re)).unwrap();
        assert!(r.max_rel_err < 1e-9);

        let wrong = CVec::from_vec(vec![t[0].conj(), C64::new(0.5, 0.0)]);
        let r = compare(&theta, &wrong, &[0, 1], 1e-5, |v| Ok(v[0].norm_sqr() + v[1].re)).unwrap();
        assert!(r.max_rel_err > 0.1);
    }

    #[test]
    fn physical_scale_instances_pass() {
        let cfg = SystemConfig::desk();
        let r = check_wsr_gradient(&cfg, 3, 8, DEFAULT_DELTA).unwrap();
        assert!(r.max_rel_err <= 1e-4, "{r:?}");
        let miso = SystemConfig::miso(16, 32, 2);
        let r = check_equivalent_gradient(&miso, 4, 8, DEFAULT_DELTA).unwrap();
        assert!(r.max_rel_err <= 1e-4, "{r:?}");
    }
}
