//! Objective evaluation: per-user rates, the weighted sum rate, the reduced
//! (equivalent) objective over `F`, and the `F → W` recovery.

use crate::channel::{stack_channels, user_block, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::metrics::OpCounter;
use crate::model::{AuxPrecoderSet, PhaseVector, PrecoderSet, SystemConfig};

/// `ln 2`, for display conversions to bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

pub fn nats_to_bits(r: f64) -> f64 {
    r / LN_2
}

fn check_finite(w: &PrecoderSet) -> Result<()> {
    if w.w.iter().all(linalg::is_finite) {
        Ok(())
    } else {
        Err(Error::Domain("precoder has non-finite entries".into()))
    }
}

/// Rate of a user with composite channel `hk`:
/// `log det(σ²I + Σ_j E_j E_jᴴ) − log det(σ²I + Σ_{j≠k} E_j E_jᴴ)`, `E_j = H_k W_j`.
pub fn rate_from_channel(ops: &mut OpCounter, hk: &CMat, w: &PrecoderSet, k: usize, noise: f64) -> Result<f64> {
    if !linalg::is_finite(hk) {
        return Err(Error::Domain("channel has non-finite entries".into()));
    }
    let nr = hk.nrows();
    let mut interf = CMat::identity(nr, nr) * C64::new(noise, 0.0);
    let mut own = CMat::zeros(nr, nr);
    for (j, wj) in w.w.iter().enumerate() {
        let e = linalg::mul(ops, hk, wj);
        let m = linalg::mul_adj(ops, &e, &e);
        if j == k {
            own = m;
        } else {
            interf += m;
        }
    }
    linalg::hermitize_mut(&mut interf);
    let total = &interf + own;
    let r = linalg::logdet_hpd(ops, &total, "signal-plus-interference covariance")?
        - linalg::logdet_hpd(ops, &interf, "interference covariance")?;
    Ok(r.max(0.0))
}

pub fn user_rate(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    theta: &PhaseVector,
    w: &PrecoderSet,
    k: usize,
    noise: f64,
) -> Result<f64> {
    check_finite(w)?;
    let hk = crate::channel::composite_channel(ops, ch, theta, k);
    rate_from_channel(ops, &hk, w, k, noise)
}

/// Per-user rates from a stacked channel.
pub fn user_rates_stacked(ops: &mut OpCounter, h_stack: &CMat, w: &PrecoderSet, cfg: &SystemConfig) -> Result<Vec<f64>> {
    check_finite(w)?;
    (0..cfg.n_users)
        .map(|k| rate_from_channel(ops, &user_block(h_stack, k, cfg.n_rx), w, k, cfg.noise_power))
        .collect()
}

/// `Σ_k ω_k R_k` from a stacked channel.
pub fn wsr_stacked(ops: &mut OpCounter, h_stack: &CMat, w: &PrecoderSet, cfg: &SystemConfig) -> Result<f64> {
    let rates = user_rates_stacked(ops, h_stack, w, cfg)?;
    Ok(weighted_sum(&cfg.weights, &rates))
}

pub fn wsr(ops: &mut OpCounter, ch: &ChannelSet, theta: &PhaseVector, w: &PrecoderSet, cfg: &SystemConfig) -> Result<f64> {
    check_finite(w)?;
    let h = stack_channels(ops, ch, theta);
    wsr_stacked(ops, &h, w, cfg)
}

pub fn weighted_sum(weights: &[f64], rates: &[f64]) -> f64 {
    weights.iter().zip(rates).map(|(w, r)| w * r).sum()
}

/// `H̄ = H Hᴴ`, Hermitian `K N_r × K N_r`.
pub fn gram(ops: &mut OpCounter, h_stack: &CMat) -> CMat {
    let mut g = linalg::mul_adj(ops, h_stack, h_stack);
    linalg::hermitize_mut(&mut g);
    g
}

/// `c = (σ²/P) Σ_i tr(F_iᴴ H̄ F_i)`, the scaled noise level of the reduced
/// problem. Zero means `Hᴴ F = 0`.
pub fn reduced_noise(ops: &mut OpCounter, hbar: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> f64 {
    let mut acc = 0.0;
    for fi in &f.f {
        let p = linalg::mul(ops, hbar, fi);
        acc += linalg::inner_re(fi, &p);
    }
    cfg.noise_to_power() * acc.max(0.0)
}

/// Per-user reduced rates `R̃_k(F)` given the Gram matrix `H̄`.
pub fn equivalent_user_rates(ops: &mut OpCounter, hbar: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Result<Vec<f64>> {
    let nr = cfg.n_rx;
    let c = reduced_noise(ops, hbar, f, cfg);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::DegeneratePrecoder("H^H F is zero".into()));
    }
    let mut out = Vec::with_capacity(cfg.n_users);
    for k in 0..cfg.n_users {
        let hk = user_block(hbar, k, nr);
        let mut y = CMat::identity(nr, nr) * C64::new(c, 0.0);
        let mut xx = CMat::zeros(nr, nr);
        for (j, fj) in f.f.iter().enumerate() {
            let x = linalg::mul(ops, &hk, fj);
            let m = linalg::mul_adj(ops, &x, &x);
            if j == k {
                xx = m;
            } else {
                y += m;
            }
        }
        linalg::hermitize_mut(&mut y);
        let total = &y + xx;
        let r = linalg::logdet_hpd(ops, &total, "reduced signal-plus-interference")?
            - linalg::logdet_hpd(ops, &y, "reduced interference")?;
        out.push(r.max(0.0));
    }
    Ok(out)
}

/// `Σ_k ω_k R̃_k(F)` from the Gram matrix.
pub fn equivalent_rate_gram(ops: &mut OpCounter, hbar: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Result<f64> {
    let r = equivalent_user_rates(ops, hbar, f, cfg)?;
    Ok(weighted_sum(&cfg.weights, &r))
}

/// Reduced objective `R̃(F)` of a stacked channel.
pub fn equivalent_rate(ops: &mut OpCounter, h_stack: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Result<f64> {
    let hbar = gram(ops, h_stack);
    equivalent_rate_gram(ops, &hbar, f, cfg)
}

/// `W_k = √ξ Hᴴ F_k` with `ξ = P / ‖Hᴴ F‖²`, so the power budget is met
/// with equality.
pub fn recover_precoder(ops: &mut OpCounter, h_stack: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Result<PrecoderSet> {
    let raw: Vec<CMat> = f.f.iter().map(|fk| linalg::adj_mul(ops, h_stack, fk)).collect();
    let norm: f64 = raw.iter().map(linalg::frob_sq).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegeneratePrecoder("‖H^H F‖ is zero".into()));
    }
    let s = C64::new((cfg.power_bs / norm).sqrt(), 0.0);
    Ok(PrecoderSet::new(raw.into_iter().map(|m| m * s).collect()))
}
