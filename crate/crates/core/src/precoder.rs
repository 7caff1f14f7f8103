//! Precoder update by successive convex approximation on the reduced problem.
//!
//! With `H̄ = H Hᴴ` and `W = √ξ Hᴴ F`, the weighted sum rate depends on the
//! `K N_r × K N_d` matrix `F` only. Each SCA step lower-bounds every
//! `R̃_k` by a concave quadratic that is tight at the current point and
//! maximizes the sum in closed form,
//! `F = (μI + ÃH̄)⁻¹ B̃`, a single `K N_r`-dimensional linear solve.

use nalgebra::DMatrix;

use crate::channel::user_block;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::metrics::OpCounter;
use crate::model::{AuxPrecoderSet, PrecoderSet, SystemConfig};
use crate::rates::{self, gram, recover_precoder};

/// Quantities of the concave minorant built at an expansion point `F̂`.
#[derive(Debug, Clone)]
pub struct ScaIntermediates {
    /// `X̂_k = H̄_k F̂_k`, `N_r × N_d`.
    pub x_hat: Vec<CMat>,
    /// `Ŷ_k = Σ_{j≠k} H̄_k F̂_j F̂_jᴴ H̄_kᴴ + c I`.
    pub y_hat: Vec<CMat>,
    /// `Â_k = Ŷ_k⁻¹ − (X̂_k X̂_kᴴ + Ŷ_k)⁻¹`, clipped to PSD.
    pub a_hat: Vec<CMat>,
    /// `B̂_k = X̂_kᴴ Ŷ_k⁻¹`, `N_d × N_r`.
    pub b_hat: Vec<CMat>,
    /// `μ = (σ²/P) Σ_k ω_k tr(Â_k)`.
    pub mu: f64,
    /// Reduced noise level `c` at the expansion point.
    pub noise: f64,
    /// `R̃(F̂)`.
    pub rate: f64,
    /// Per user `log det(I + B̂_k X̂_k) − Re tr(B̂_k X̂_k)`.
    constant: Vec<f64>,
    /// Most negative eigenvalue of any `Â_k` before clipping, relative to
    /// its largest eigenvalue magnitude.
    pub min_rel_eig: f64,
}

impl ScaIntermediates {
    pub fn build(ops: &mut OpCounter, hbar: &CMat, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Result<Self> {
        let nr = cfg.n_rx;
        let k_users = cfg.n_users;
        let c = rates::reduced_noise(ops, hbar, f, cfg);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::DegeneratePrecoder("H^H F is zero at the expansion point".into()));
        }

        let mut out = Self {
            x_hat: Vec::with_capacity(k_users),
            y_hat: Vec::with_capacity(k_users),
            a_hat: Vec::with_capacity(k_users),
            b_hat: Vec::with_capacity(k_users),
            mu: 0.0,
            noise: c,
            rate: 0.0,
            constant: Vec::with_capacity(k_users),
            min_rel_eig: 0.0,
        };
        let mut tr_a = 0.0;
        for k in 0..k_users {
            let hk = user_block(hbar, k, nr);
            let mut y = CMat::identity(nr, nr) * C64::new(c, 0.0);
            let mut x = CMat::zeros(nr, cfg.n_streams);
            for (j, fj) in f.f.iter().enumerate() {
                let p = linalg::mul(ops, &hk, fj);
                if j == k {
                    x = p;
                } else {
                    y += linalg::mul_adj(ops, &p, &p);
                }
            }
            linalg::hermitize_mut(&mut y);
            let total = &y + linalg::mul_adj(ops, &x, &x);
            let y_inv = linalg::inv_hpd(ops, &y, "Y_k")?;
            let t_inv = linalg::inv_hpd(ops, &total, "X_k X_k^H + Y_k")?;
            let (a, min_eig, scale) = linalg::clip_psd(ops, &(&y_inv - &t_inv));
            if scale > 0.0 {
                out.min_rel_eig = out.min_rel_eig.min(min_eig / scale);
            }
            let b = linalg::adj_mul(ops, &x, &y_inv);
            let bx = linalg::mul(ops, &b, &x);
            let mut core = CMat::identity(cfg.n_streams, cfg.n_streams) + &bx;
            linalg::hermitize_mut(&mut core);
            let ld = linalg::logdet_hpd(ops, &core, "I + B_k X_k")?;
            out.rate += cfg.weights[k] * ld.max(0.0);
            out.constant.push(ld - linalg::trace(&bx).re);
            tr_a += cfg.weights[k] * linalg::trace(&a).re;
            out.x_hat.push(x);
            out.y_hat.push(y);
            out.a_hat.push(a);
            out.b_hat.push(b);
        }
        out.mu = (cfg.noise_to_power() * tr_a).max(0.0);
        Ok(out)
    }

    /// `Ã = blkdiag(ω_k Â_k)`, `K N_r × K N_r`.
    pub fn a_tilde(&self, cfg: &SystemConfig) -> CMat {
        let nr = cfg.n_rx;
        let mut a = CMat::zeros(cfg.stacked_rows(), cfg.stacked_rows());
        for (k, ak) in self.a_hat.iter().enumerate() {
            a.view_mut((k * nr, k * nr), (nr, nr))
                .copy_from(&(ak * C64::new(cfg.weights[k], 0.0)));
        }
        a
    }

    /// `B̃ = blkdiag(ω_k B̂_kᴴ)`, `K N_r × K N_d`.
    pub fn b_tilde(&self, cfg: &SystemConfig) -> CMat {
        let (nr, nd) = (cfg.n_rx, cfg.n_streams);
        let mut b = CMat::zeros(cfg.stacked_rows(), cfg.n_users * nd);
        for (k, bk) in self.b_hat.iter().enumerate() {
            b.view_mut((k * nr, k * nd), (nr, nd))
                .copy_from(&(bk.adjoint() * C64::new(cfg.weights[k], 0.0)));
        }
        b
    }
}

/// `Σ_k ω_k g_k(F)`, the concave minorant built at the point that produced
/// `inter`, evaluated at `f`.
pub fn minorant_value(
    ops: &mut OpCounter,
    f: &AuxPrecoderSet,
    inter: &ScaIntermediates,
    hbar: &CMat,
    cfg: &SystemConfig,
) -> f64 {
    let nr = cfg.n_rx;
    let c = rates::reduced_noise(ops, hbar, f, cfg);
    let mut total = 0.0;
    for k in 0..cfg.n_users {
        let hk = user_block(hbar, k, nr);
        let a = &inter.a_hat[k];
        let mut g = inter.constant[k] - c * linalg::trace(a).re;
        for (j, fj) in f.f.iter().enumerate() {
            let p = linalg::mul(ops, &hk, fj);
            if j == k {
                g += 2.0 * linalg::trace(&linalg::mul(ops, &inter.b_hat[k], &p)).re;
            }
            g -= linalg::inner_re(&p, &linalg::mul(ops, a, &p));
        }
        total += cfg.weights[k] * g;
    }
    total
}

/// Output of one closed-form update.
#[derive(Debug, Clone)]
pub struct ScaUpdate {
    pub f: AuxPrecoderSet,
    /// The LU solve failed and a least-squares solution was used instead.
    pub lstsq_fallback: bool,
}

/// Solves `(μI + ÃH̄) F = B̃` for the intermediates built at the current point.
pub fn closed_form(ops: &mut OpCounter, inter: &ScaIntermediates, hbar: &CMat, cfg: &SystemConfig) -> ScaUpdate {
    let n = cfg.stacked_rows();
    let a = inter.a_tilde(cfg);
    let b = inter.b_tilde(cfg);
    let mut m = linalg::mul(ops, &a, hbar);
    for i in 0..n {
        m[(i, i)] += inter.mu;
    }
    ops.charge(linalg::cube(n) + crate::metrics::count_matmul(n, n, b.ncols()));
    let (sol, fallback) = match m.clone().lu().solve(&b) {
        Some(x) if linalg::is_finite(&x) => (x, false),
        _ => {
            let x = lstsq(m, &b).unwrap_or_else(|| DMatrix::zeros(n, b.ncols()));
            (x, true)
        }
    };
    ScaUpdate {
        f: AuxPrecoderSet::from_stacked(&sol, cfg.n_users, cfg.n_streams),
        lstsq_fallback: fallback,
    }
}

/// Minimum-norm least-squares solution, singular values below `1e-14`
/// relative to the largest treated as zero.
fn lstsq(m: CMat, b: &CMat) -> Option<CMat> {
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    svd.solve(b, 1e-14 * smax).ok().filter(linalg::is_finite)
}

/// One SCA step from `f_prev` on the stacked channel `h_stack`.
pub fn sca_update(ops: &mut OpCounter, f_prev: &AuxPrecoderSet, h_stack: &CMat, cfg: &SystemConfig) -> Result<ScaUpdate> {
    let hbar = gram(ops, h_stack);
    sca_update_gram(ops, f_prev, &hbar, cfg)
}

pub fn sca_update_gram(ops: &mut OpCounter, f_prev: &AuxPrecoderSet, hbar: &CMat, cfg: &SystemConfig) -> Result<ScaUpdate> {
    let inter = ScaIntermediates::build(ops, hbar, f_prev, cfg)?;
    Ok(closed_form(ops, &inter, hbar, cfg))
}

#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    /// Recovered physical precoders, power budget met with equality.
    pub w: PrecoderSet,
    pub f: AuxPrecoderSet,
    /// Closed-form updates performed (`I_w`).
    pub iters: usize,
    /// `R̃` at the starting point and after every update.
    pub objectives: Vec<f64>,
    pub lstsq_fallbacks: usize,
    /// Most negative relative eigenvalue of any `Â_k` before clipping.
    pub min_rel_eig: f64,
}

impl PrecoderSolution {
    pub fn rate(&self) -> f64 {
        self.objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// SCA loop from `f0` until the relative improvement drops below
/// `cfg.sca_tol` or `cfg.sca_max_iters` updates have run.
pub fn solve_precoder(ops: &mut OpCounter, f0: &AuxPrecoderSet, h_stack: &CMat, cfg: &SystemConfig) -> Result<PrecoderSolution> {
    let hbar = gram(ops, h_stack);
    let mut f = f0.clone();
    let mut inter = ScaIntermediates::build(ops, &hbar, &f, cfg)?;
    let mut objectives = vec![inter.rate];
    let mut fallbacks = 0;
    let mut min_rel_eig = inter.min_rel_eig;
    let mut iters = 0;

    while iters < cfg.sca_max_iters {
        let step = closed_form(ops, &inter, &hbar, cfg);
        iters += 1;
        fallbacks += usize::from(step.lstsq_fallback);
        let next = match ScaIntermediates::build(ops, &hbar, &step.f, cfg) {
            Ok(next) => next,
            Err(Error::DegeneratePrecoder(_)) => break,
            Err(e) => return Err(e),
        };
        let (old, new) = (inter.rate, next.rate);
        objectives.push(new);
        min_rel_eig = min_rel_eig.min(next.min_rel_eig);
        if new < old {
            // rounding-level decrease at convergence: keep the better point
            break;
        }
        f = step.f;
        inter = next;
        if (new - old) / old.max(1e-12) < cfg.sca_tol {
            break;
        }
    }

    let w = recover_precoder(ops, h_stack, &f, cfg)?;
    Ok(PrecoderSolution {
        w,
        f,
        iters,
        objectives,
        lstsq_fallbacks: fallbacks,
        min_rel_eig,
    })
}

/// Reduced precoder whose recovery reproduces the effective channels of
/// `w` on `h_stack`: `F = H̄⁻¹ H W`, so that `Hᴴ F` is the projection of
/// `W` onto the row space of `H`. Falls back to the matched filter when the
/// projection vanishes.
pub fn aux_from_precoder(ops: &mut OpCounter, h_stack: &CMat, w: &PrecoderSet, cfg: &SystemConfig) -> AuxPrecoderSet {
    let hbar = gram(ops, h_stack);
    let n = cfg.stacked_rows();
    let hw: Vec<CMat> = w.w.iter().map(|wk| linalg::mul(ops, h_stack, wk)).collect();
    let rhs = AuxPrecoderSet::new(hw).stacked();
    ops.charge(linalg::cube(n) + crate::metrics::count_matmul(n, n, rhs.ncols()));
    let sol = hbar
        .clone()
        .lu()
        .solve(&rhs)
        .filter(linalg::is_finite)
        .or_else(|| lstsq(hbar, &rhs));
    match sol {
        Some(s) => {
            let f = AuxPrecoderSet::from_stacked(&s, cfg.n_users, cfg.n_streams);
            if f.is_zero() || !f.f.iter().all(linalg::is_finite) {
                AuxPrecoderSet::matched_filter(cfg)
            } else {
                f
            }
        }
        None => AuxPrecoderSet::matched_filter(cfg),
    }
}
