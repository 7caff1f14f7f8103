//! Reference implementations used as test oracles. Everything here is
//! written from the model definitions with plain nalgebra operations
//! (explicit loops, LU determinants and inverses) and shares no code with
//! the library's solvers.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use ris_wsr::{AuxPrecoderSet, ChannelSet, PrecoderSet, SystemConfig};

pub type M = DMatrix<C>;

/// `H_k = D_k + U_k diag(θ) G` by explicit summation.
#[allow(clippy::needless_range_loop)]
pub fn channel(ch: &ChannelSet, theta: &[C], k: usize) -> M {
    let (nr, nt, ns) = (ch.direct[k].nrows(), ch.bs_ris.ncols(), theta.len());
    let mut h = ch.direct[k].clone();
    for r in 0..nr {
        for t in 0..nt {
            let mut acc = C::new(0.0, 0.0);
            for n in 0..ns {
                acc += ch.ris_user[k][(r, n)] * theta[n] * ch.bs_ris[(n, t)];
            }
            h[(r, t)] += acc;
        }
    }
    h
}

pub fn stacked(ch: &ChannelSet, theta: &[C], cfg: &SystemConfig) -> M {
    let nr = cfg.n_rx;
    let mut h = M::zeros(cfg.n_users * nr, cfg.n_tx);
    for k in 0..cfg.n_users {
        h.view_mut((k * nr, 0), (nr, cfg.n_tx)).copy_from(&channel(ch, theta, k));
    }
    h
}

/// `ln det` of a Hermitian positive definite matrix via its LU determinant.
pub fn logdet(m: &M) -> f64 {
    let d = m.clone().lu().determinant();
    assert!(d.re > 0.0 && d.im.abs() <= 1e-8 * d.re, "not HPD: det = {d}");
    d.re.ln()
}

pub fn inv(m: &M) -> M {
    m.clone().try_inverse().expect("singular matrix")
}

/// `Σ_k ω_k [ln det(σ²I + Σ_j H_k W_j W_jᴴ H_kᴴ) − ln det(σ²I + Σ_{j≠k} …)]`.
pub fn wsr(ch: &ChannelSet, theta: &[C], w: &PrecoderSet, cfg: &SystemConfig) -> f64 {
    let nr = cfg.n_rx;
    let mut total = 0.0;
    for k in 0..cfg.n_users {
        let h = channel(ch, theta, k);
        let mut all = M::identity(nr, nr) * C::new(cfg.noise_power, 0.0);
        let mut others = all.clone();
        for (j, wj) in w.w.iter().enumerate() {
            let e = &h * wj;
            let s = &e * e.adjoint();
            all += &s;
            if j != k {
                others += &s;
            }
        }
        total += cfg.weights[k] * (logdet(&all) - logdet(&others));
    }
    total
}

/// `W_k = √(P / ‖Hᴴ F‖²) Hᴴ F_k`.
pub fn recover(h: &M, f: &AuxPrecoderSet, cfg: &SystemConfig) -> PrecoderSet {
    let raw: Vec<M> = f.f.iter().map(|fk| h.adjoint() * fk).collect();
    let norm: f64 = raw.iter().map(|m| m.norm_squared()).sum();
    let s = C::new((cfg.power_bs / norm).sqrt(), 0.0);
    PrecoderSet::new(raw.into_iter().map(|m| m * s).collect())
}

/// Reduced noise `c(F) = (σ²/P) Σ_i ‖Hᴴ F_i‖²`.
pub fn reduced_noise(h: &M, f: &AuxPrecoderSet, cfg: &SystemConfig) -> f64 {
    let s: f64 = f.f.iter().map(|fi| (h.adjoint() * fi).norm_squared()).sum();
    cfg.noise_power / cfg.power_bs * s
}

/// Reduced objective for single-antenna users from scalar quantities:
/// `s_kj = h_k h_kᴴ`-weighted inner products, `R̃_k = ln((Σ_j|s_kj|²+c)/(Σ_{j≠k}|s_kj|²+c))`.
pub fn equivalent_rate_miso(ch: &ChannelSet, theta: &[C], f: &AuxPrecoderSet, cfg: &SystemConfig) -> f64 {
    assert!(cfg.n_rx == 1 && cfg.n_streams == 1);
    let h = stacked(ch, theta, cfg);
    let c = reduced_noise(&h, f, cfg);
    let mut total = 0.0;
    for k in 0..cfg.n_users {
        let hk = h.row(k);
        let mut all = c;
        let mut others = c;
        for (j, fj) in f.f.iter().enumerate() {
            // s_kj = h_k (Hᴴ f_j)
            let v = h.adjoint() * fj;
            let s: C = (0..cfg.n_tx).map(|t| hk[t] * v[(t, 0)]).sum();
            all += s.norm_sqr();
            if j != k {
                others += s.norm_sqr();
            }
        }
        total += cfg.weights[k] * (all / others).ln();
    }
    total
}

/// Expansion-point quantities of the rate minorant, built with plain
/// inverses: `X̂_k = H̄_k F̂_k`, `Ŷ_k`, `Â_k = Ŷ⁻¹ − (X̂X̂ᴴ + Ŷ)⁻¹`,
/// `B̂_k = X̂ᴴ Ŷ⁻¹`.
pub struct Expansion {
    pub hbar: M,
    pub x: Vec<M>,
    pub y: Vec<M>,
    pub a: Vec<M>,
    pub b: Vec<M>,
}

/// Row block `k` of `m` (`N_r` rows).
pub fn block(m: &M, k: usize, nr: usize) -> M {
    m.rows(k * nr, nr).into_owned()
}

pub fn expansion(h: &M, f: &AuxPrecoderSet, cfg: &SystemConfig) -> Expansion {
    let nr = cfg.n_rx;
    let hbar = h * h.adjoint();
    let c = reduced_noise(h, f, cfg);
    let mut out = Expansion {
        hbar: hbar.clone(),
        x: vec![],
        y: vec![],
        a: vec![],
        b: vec![],
    };
    for k in 0..cfg.n_users {
        let hk = block(&hbar, k, nr);
        let x = &hk * &f.f[k];
        let mut y = M::identity(nr, nr) * C::new(c, 0.0);
        for (j, fj) in f.f.iter().enumerate() {
            if j != k {
                let p = &hk * fj;
                y += &p * p.adjoint();
            }
        }
        let yi = inv(&y);
        let a = &yi - inv(&(&x * x.adjoint() + &y));
        let b = x.adjoint() * &yi;
        out.x.push(x);
        out.y.push(y);
        out.a.push(a);
        out.b.push(b);
    }
    out
}

/// Reduced objective `R̃(F)` for any antenna configuration.
pub fn equivalent_rate(h: &M, f: &AuxPrecoderSet, cfg: &SystemConfig) -> f64 {
    let e = expansion(h, f, cfg);
    (0..cfg.n_users)
        .map(|k| {
            let all = &e.x[k] * e.x[k].adjoint() + &e.y[k];
            cfg.weights[k] * (logdet(&all) - logdet(&e.y[k]))
        })
        .sum()
}

/// `Σ_k ω_k g_k(F)` from the minorization inequality
/// `ln det(I + Xᴴ Y⁻¹ X) ≥ ln det(I + B̂X̂) − tr(B̂X̂) + 2 Re tr(B̂X) − tr(Â(XXᴴ + Y))`
/// with `X = H̄_k F_k`, `Y = Σ_{j≠k} H̄_k F_j F_jᴴ H̄_kᴴ + c(F) I`.
pub fn minorant(e: &Expansion, h: &M, f: &AuxPrecoderSet, cfg: &SystemConfig) -> f64 {
    let nr = cfg.n_rx;
    let c = reduced_noise(h, f, cfg);
    let mut total = 0.0;
    for k in 0..cfg.n_users {
        let hk = block(&e.hbar, k, nr);
        let bx = &e.b[k] * &e.x[k];
        let constant = logdet(&(M::identity(bx.nrows(), bx.ncols()) + &bx)) - bx.trace().re;
        let x = &hk * &f.f[k];
        let mut y = M::identity(nr, nr) * C::new(c, 0.0);
        for (j, fj) in f.f.iter().enumerate() {
            if j != k {
                let p = &hk * fj;
                y += &p * p.adjoint();
            }
        }
        let g = constant + 2.0 * (&e.b[k] * &x).trace().re - (&e.a[k] * (&x * x.adjoint() + y)).trace().re;
        total += cfg.weights[k] * g;
    }
    total
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> M {
    M::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let b: f64 = rng.random::<f64>() * 2.0 - 1.0;
        C::new(a, b)
    })
}

pub fn random_aux(cfg: &SystemConfig, rng: &mut impl rand::Rng) -> AuxPrecoderSet {
    AuxPrecoderSet::new(
        (0..cfg.n_users)
            .map(|_| random_matrix(cfg.stacked_rows(), cfg.n_streams, rng))
            .collect(),
    )
}

pub fn random_precoder(cfg: &SystemConfig, rng: &mut impl rand::Rng) -> PrecoderSet {
    let w: Vec<M> = (0..cfg.n_users).map(|_| random_matrix(cfg.n_tx, cfg.n_streams, rng)).collect();
    let p: f64 = w.iter().map(|m| m.norm_squared()).sum();
    let s = C::new((cfg.power_bs / p).sqrt(), 0.0);
    PrecoderSet::new(w.into_iter().map(|m| m * s).collect())
}

/// Central differences along the real and imaginary axis of coordinate
/// `n`, compared with `2 Re ∇_n` and `2 Im ∇_n`; returns
/// `max |fd − 2·part| / max_n |∇_n|`.
pub fn fd_rel_error(theta: &[C], grad: &[C], delta: f64, mut f: impl FnMut(&[C]) -> f64) -> f64 {
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.norm()));
    let mut worst = 0.0f64;
    for n in 0..theta.len() {
        for (d, part) in [(C::new(delta, 0.0), grad[n].re), (C::new(0.0, delta), grad[n].im)] {
            let mut p = theta.to_vec();
            let mut m = theta.to_vec();
            p[n] += d;
            m[n] -= d;
            let fd = (f(&p) - f(&m)) / (2.0 * delta);
            worst = worst.max((fd - 2.0 * part).abs() / scale);
        }
    }
    worst
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}
