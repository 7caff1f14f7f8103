//! Phase-shift update: complex gradients of the rate with respect to `θ`,
//! unit-modulus projection, the scaled projected-gradient (SPG) step and
//! the two backtracking line searches.
//!
//! Gradients follow the convention `∇f = ½(∂f/∂Re θ + j ∂f/∂Im θ)`, so a
//! first-order change of a real objective is `2 Re{∇ᴴ dθ}`.

use rayon::prelude::*;

use crate::channel::{stack_channels, user_block, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::metrics::OpCounter;
use crate::model::{AuxPrecoderSet, PhaseVector, PrecoderSet, SystemConfig};
use crate::rates;
use crate::seeding::rng_from_seed;

/// Moduli below this are treated as zero by the scaling and projection.
pub const SCALE_FLOOR: f64 = 1e-300;
pub const PROJECTION_FLOOR: f64 = 1e-12;

/// `∇_θ R(W, θ)` for fixed precoders.
pub fn grad_wsr_theta(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    theta: &PhaseVector,
    w: &PrecoderSet,
    cfg: &SystemConfig,
) -> Result<CVec> {
    let h = stack_channels(ops, ch, theta);
    grad_wsr_theta_stacked(ops, ch, &h, w, cfg)
}

/// Gradient given the stacked channel at the current `θ`.
///
/// Per user, with `E_j = H_k W_j`, `M_j = E_j E_jᴴ`, `N_j = E_j W_jᴴ`:
/// `Z_k = σ²I + Σ_j M_j`, `J_k = Σ_j N_j`, and the tilde versions drop
/// `j = k`. The contribution is `ω_k vecd(U_kᴴ (Z_k⁻¹J_k − Z̃_k⁻¹J̃_k) Gᴴ)`;
/// no `N_t × N_t` matrix is ever formed.
pub fn grad_wsr_theta_stacked(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    h_stack: &CMat,
    w: &PrecoderSet,
    cfg: &SystemConfig,
) -> Result<CVec> {
    let nr = cfg.n_rx;
    let ns = ch.n_ris();
    let mut grad = CVec::zeros(ns);
    for k in 0..cfg.n_users {
        let hk = user_block(h_stack, k, nr);
        let mut z_tilde = CMat::identity(nr, nr) * C64::new(cfg.noise_power, 0.0);
        let mut j_tilde = CMat::zeros(nr, ch.n_tx());
        let mut m_k = CMat::zeros(nr, nr);
        let mut n_k = CMat::zeros(nr, ch.n_tx());
        for (j, wj) in w.w.iter().enumerate() {
            let e = linalg::mul(ops, &hk, wj);
            let m = linalg::mul_adj(ops, &e, &e);
            let n = linalg::mul_adj(ops, &e, wj);
            if j == k {
                m_k = m;
                n_k = n;
            } else {
                z_tilde += m;
                j_tilde += n;
            }
        }
        linalg::hermitize_mut(&mut z_tilde);
        let z = &z_tilde + m_k;
        let j_full = &j_tilde + n_k;
        let zi = linalg::inv_hpd(ops, &z, "Z_k")?;
        let zti = linalg::inv_hpd(ops, &z_tilde, "Z~_k")?;
        let x = linalg::mul(ops, &zi, &j_full) - linalg::mul(ops, &zti, &j_tilde);
        let y = linalg::mul_adj(ops, &x, &ch.bs_ris);
        let u = &ch.ris_user[k];
        ops.charge((nr * ns) as u64);
        let wk = cfg.weights[k];
        for n in 0..ns {
            let mut acc = linalg::ZERO;
            for r in 0..nr {
                acc += u[(r, n)].conj() * y[(r, n)];
            }
            grad[n] += acc * wk;
        }
    }
    Ok(grad)
}

/// Diagonal of `Ξ = diag(1/|∇_n|)`; coordinates with a vanishing gradient
/// get 0 and stay frozen.
pub fn scaling_matrix(grad: &CVec) -> Vec<f64> {
    grad.iter()
        .map(|g| {
            let m = g.norm();
            if m < SCALE_FLOOR {
                0.0
            } else {
                1.0 / m
            }
        })
        .collect()
}

/// Radial projection onto the unit-modulus torus. Entries with modulus at
/// or below [`PROJECTION_FLOOR`] keep the phase of `fallback`; entries
/// already on the circle to rounding are returned as is, which makes the
/// projection exactly idempotent.
pub fn project_unit_modulus(v: &CVec, fallback: &PhaseVector) -> PhaseVector {
    let fb = fallback.as_vector();
    let out = CVec::from_iterator(
        v.len(),
        v.iter().enumerate().map(|(n, &z)| {
            let m = z.norm();
            if (m - 1.0).abs() <= 2.0 * f64::EPSILON {
                z
            } else if m > PROJECTION_FLOOR {
                z / m
            } else {
                fb[n]
            }
        }),
    );
    PhaseVector::from_unit_unchecked(out)
}

/// `Π(θ + α Ξ ∇)`.
pub fn spg_step(theta: &PhaseVector, grad: &CVec, xi: &[f64], alpha: f64) -> PhaseVector {
    let t = theta.as_vector();
    let v = CVec::from_iterator(t.len(), (0..t.len()).map(|n| t[n] + grad[n] * (alpha * xi[n])));
    project_unit_modulus(&v, theta)
}

/// Unscaled projected-gradient step `Π(θ + α ∇)`.
pub fn pg_step(theta: &PhaseVector, grad: &CVec, alpha: f64) -> PhaseVector {
    let v = theta.as_vector() + grad * C64::new(alpha, 0.0);
    project_unit_modulus(&v, theta)
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub theta: PhaseVector,
    /// Accepted step; 0 when the search stalled.
    pub alpha: f64,
    /// Candidates evaluated, including the accepted one.
    pub steps: usize,
    pub stalled: bool,
    /// Objective at the returned `θ`.
    pub value: f64,
}

fn initial_step(r_current: f64) -> f64 {
    if r_current > 0.0 {
        1.0 / r_current
    } else {
        1.0
    }
}

/// Backtracking on a generic objective. `candidate(α)` builds the trial
/// point, `accept(value, Δ-norm², Δ, α)` is the sufficient-increase test.
fn backtrack<O, C, A>(
    ops: &mut OpCounter,
    theta: &PhaseVector,
    cfg: &SystemConfig,
    r_current: f64,
    mut objective: O,
    candidate: C,
    accept: A,
) -> Result<LineSearchOutcome>
where
    O: FnMut(&mut OpCounter, &PhaseVector) -> Result<f64>,
    C: Fn(f64) -> PhaseVector,
    A: Fn(f64, f64, &CVec, f64) -> bool,
{
    let mut alpha = initial_step(r_current);
    for step in 1..=cfg.ls_max_steps {
        let cand = candidate(alpha);
        let delta = cand.as_vector() - theta.as_vector();
        let d2 = delta.norm_squared();
        let value = if d2 == 0.0 {
            r_current
        } else {
            objective(ops, &cand)?
        };
        if accept(value, d2, &delta, alpha) {
            return Ok(LineSearchOutcome {
                theta: cand,
                alpha,
                steps: step,
                stalled: false,
                value,
            });
        }
        alpha *= cfg.ls_shrink;
    }
    Ok(LineSearchOutcome {
        theta: theta.clone(),
        alpha: 0.0,
        steps: cfg.ls_max_steps,
        stalled: true,
        value: r_current,
    })
}

/// SPG step with the sufficient-increase test
/// `R(θ⁺) ≥ R(θ) + β/(2N_s)·‖θ⁺ − θ‖²`, starting from `α = 1/R(θ)`.
pub fn line_search_proposed_by<O>(
    ops: &mut OpCounter,
    objective: O,
    theta: &PhaseVector,
    grad: &CVec,
    xi: &[f64],
    cfg: &SystemConfig,
    r_current: f64,
) -> Result<LineSearchOutcome>
where
    O: FnMut(&mut OpCounter, &PhaseVector) -> Result<f64>,
{
    let c = cfg.ls_beta / (2.0 * theta.len() as f64);
    backtrack(
        ops,
        theta,
        cfg,
        r_current,
        objective,
        |a| spg_step(theta, grad, xi, a),
        |v, d2, _, _| v >= r_current + c * d2,
    )
}

/// [`line_search_proposed_by`] on the weighted sum rate with `w` fixed.
#[allow(clippy::too_many_arguments)]
pub fn line_search_proposed(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    w: &PrecoderSet,
    theta: &PhaseVector,
    grad: &CVec,
    xi: &[f64],
    cfg: &SystemConfig,
    r_current: f64,
) -> Result<LineSearchOutcome> {
    line_search_proposed_by(ops, |o, t| rates::wsr(o, ch, t, w, cfg), theta, grad, xi, cfg, r_current)
}

/// Armijo-type acceptance test
/// `R(θ⁺) ≥ R(θ) + 2Re{∇ᴴΔ} + (α/2)‖Δ‖²` with `Δ = θ⁺ − θ`.
pub fn armijo_condition(value: f64, r_current: f64, grad: &CVec, delta: &CVec, alpha: f64) -> bool {
    let lin = 2.0 * grad.dotc(delta).re;
    value >= r_current + lin + 0.5 * alpha * delta.norm_squared()
}

/// Unscaled projected-gradient step with Armijo backtracking on
/// `objective`, starting from `α = 1/R(θ)`.
pub fn line_search_armijo_by<O>(
    ops: &mut OpCounter,
    objective: O,
    theta: &PhaseVector,
    grad: &CVec,
    cfg: &SystemConfig,
    r_current: f64,
) -> Result<LineSearchOutcome>
where
    O: FnMut(&mut OpCounter, &PhaseVector) -> Result<f64>,
{
    backtrack(
        ops,
        theta,
        cfg,
        r_current,
        objective,
        |a| pg_step(theta, grad, a),
        |v, _, delta, a| armijo_condition(v, r_current, grad, delta, a),
    )
}

/// [`line_search_armijo_by`] on the weighted sum rate with `w` fixed.
pub fn line_search_armijo(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    w: &PrecoderSet,
    theta: &PhaseVector,
    grad: &CVec,
    cfg: &SystemConfig,
    r_current: f64,
) -> Result<LineSearchOutcome> {
    line_search_armijo_by(ops, |o, t| rates::wsr(o, ch, t, w, cfg), theta, grad, cfg, r_current)
}

/// `R̃(θ)` for a fixed reduced precoder `F`.
pub fn equivalent_objective_theta(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    theta: &PhaseVector,
    f: &AuxPrecoderSet,
    cfg: &SystemConfig,
) -> Result<f64> {
    let h = stack_channels(ops, ch, theta);
    rates::equivalent_rate(ops, &h, f, cfg)
}

/// `∇_θ R̃(θ)` for fixed `F` in the single-antenna-user case.
///
/// With `v_j = Hᴴf_j`, `s_kj = h_k v_j`, `q_k = G h_kᴴ` and
/// `ũ_j = Σ_i f_{j,i} conj(u_i)`:
/// `∇|s_kj|² = conj(s_kj)·conj(q_k)⊙ũ_j + s_kj·conj(u_k⊙Gv_j)` and
/// `∇‖v_m‖² = conj(Gv_m)⊙ũ_m`. Everything stays in `N_s`-vectors.
pub fn grad_equiv_theta_miso(
    ops: &mut OpCounter,
    ch: &ChannelSet,
    theta: &PhaseVector,
    f: &AuxPrecoderSet,
    cfg: &SystemConfig,
) -> Result<CVec> {
    if cfg.n_rx != 1 || cfg.n_streams != 1 {
        return Err(Error::UnsupportedConfig(format!(
            "equivalent-objective gradient needs single-antenna users, got N_r={} N_d={}",
            cfg.n_rx, cfg.n_streams
        )));
    }
    let k_users = cfg.n_users;
    let ns = ch.n_ris();
    let h = stack_channels(ops, ch, theta);
    let fs = f.stacked();
    let v = linalg::adj_mul(ops, &h, &fs);
    let s = linalg::mul(ops, &h, &v);
    let gv = linalg::mul(ops, &ch.bs_ris, &v);
    let q = linalg::mul_adj(ops, &ch.bs_ris, &h);
    let mut u_all = CMat::zeros(k_users, ns);
    for (i, ui) in ch.ris_user.iter().enumerate() {
        u_all.row_mut(i).copy_from(&ui.row(0));
    }
    let u_tilde = linalg::adj_mul(ops, &u_all, &fs);

    let c = cfg.noise_to_power() * linalg::frob_sq(&v);
    if !(c > 0.0) {
        return Err(Error::DegeneratePrecoder("H^H F is zero".into()));
    }
    let mut grad_c = CVec::zeros(ns);
    for m in 0..k_users {
        for n in 0..ns {
            grad_c[n] += gv[(n, m)].conj() * u_tilde[(n, m)];
        }
    }
    grad_c *= C64::new(cfg.noise_to_power(), 0.0);

    let mut grad = CVec::zeros(ns);
    let mut term = CVec::zeros(ns);
    let mut num_all = CVec::zeros(ns);
    for k in 0..k_users {
        num_all.copy_from(&grad_c);
        let mut num_int = grad_c.clone();
        let (mut den_all, mut den_int) = (c, c);
        for j in 0..k_users {
            let skj = s[(k, j)];
            for n in 0..ns {
                term[n] = skj.conj() * q[(n, k)].conj() * u_tilde[(n, j)] + skj * (u_all[(k, n)] * gv[(n, j)]).conj();
            }
            num_all += &term;
            den_all += skj.norm_sqr();
            if j != k {
                num_int += &term;
                den_int += skj.norm_sqr();
            }
        }
        ops.charge((3 * k_users * ns) as u64);
        let wk = cfg.weights[k];
        grad += num_all.map(|z| z * (wk / den_all)) - num_int.map(|z| z * (wk / den_int));
    }
    Ok(grad)
}

/// Objective whose gradient Lipschitz constant is estimated.
#[derive(Debug, Clone, Copy)]
pub enum LipschitzTarget<'a> {
    /// `R(θ)` with the physical precoders held fixed.
    Original(&'a PrecoderSet),
    /// `R̃(θ)` with the reduced precoder held fixed (single-antenna users).
    Equivalent(&'a AuxPrecoderSet),
}

/// `max ‖∇f(θ₁) − ∇f(θ₂)‖ / ‖θ₁ − θ₂‖` over `n_pairs` i.i.d. pairs of
/// uniformly random phase vectors. Pairs are drawn sequentially from
/// `seed`, so a larger `n_pairs` evaluates a superset of the pairs of a
/// smaller one.
pub fn estimate_lipschitz(
    ch: &ChannelSet,
    target: LipschitzTarget<'_>,
    cfg: &SystemConfig,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let pairs: Vec<(PhaseVector, PhaseVector)> = (0..n_pairs)
        .map(|_| {
            let a = PhaseVector::random(ch.n_ris(), &mut rng);
            let b = PhaseVector::random(ch.n_ris(), &mut rng);
            (a, b)
        })
        .collect();
    let grad = |t: &PhaseVector| -> Result<CVec> {
        let ops = &mut OpCounter::new();
        match target {
            LipschitzTarget::Original(w) => grad_wsr_theta(ops, ch, t, w, cfg),
            LipschitzTarget::Equivalent(f) => grad_equiv_theta_miso(ops, ch, t, f, cfg),
        }
    };
    let ratios = pairs
        .par_iter()
        .map(|(a, b)| {
            let d = (a.as_vector() - b.as_vector()).norm();
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok((grad(a)? - grad(b)?).norm() / d)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::model::default_weights;
    use proptest::prelude::*;

    fn cfg(k: usize, nr: usize, nt: usize, ns: usize) -> SystemConfig {
        SystemConfig {
            n_tx: nt,
            n_ris: ns,
            n_users: k,
            n_rx: nr,
            n_streams: nr,
            weights: default_weights(k),
            power_bs: 1.0,
            noise_power: 0.1,
            ..SystemConfig::full_scale()
        }
    }

    fn random_w(c: &SystemConfig, seed: u64) -> PrecoderSet {
        let mut rng = rng_from_seed(seed);
        let w = PrecoderSet::new((0..c.n_users).map(|_| complex_gaussian(c.n_tx, c.n_streams, &mut rng)).collect());
        let p = w.total_power();
        w.scaled((c.power_bs / p).sqrt())
    }

    // off-torus evaluation: both objectives are defined for any θ
    fn perturbed(theta: &PhaseVector, n: usize, d: C64) -> CVec {
        let mut v = theta.as_vector().clone();
        v[n] += d;
        v
    }

    fn wsr_at(ch: &ChannelSet, th: &CVec, w: &PrecoderSet, c: &SystemConfig) -> f64 {
        let ops = &mut OpCounter::new();
        let h = crate::channel::stack_channels_with(ops, ch, th);
        rates::wsr_stacked(ops, &h, w, c).unwrap()
    }

    fn equiv_at(ch: &ChannelSet, th: &CVec, f: &AuxPrecoderSet, c: &SystemConfig) -> f64 {
        let ops = &mut OpCounter::new();
        let h = crate::channel::stack_channels_with(ops, ch, th);
        rates::equivalent_rate(ops, &h, f, c).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let c = cfg(2, 2, 4, 6);
        let ch = ChannelSet::iid(&c, 0.7, 1);
        let th = PhaseVector::random(6, &mut rng_from_seed(2));
        let w = random_w(&c, 3);
        let ops = &mut OpCounter::new();
        let g = grad_wsr_theta(ops, &ch, &th, &w, &c).unwrap();
        let delta = 1e-6;
        let scale = g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for n in 0..6 {
            for (dir, part) in [(C64::new(delta, 0.0), g[n].re), (C64::new(0.0, delta), g[n].im)] {
                let fp = wsr_at(&ch, &perturbed(&th, n, dir), &w, &c);
                let fm = wsr_at(&ch, &perturbed(&th, n, -dir), &w, &c);
                let fd = (fp - fm) / (2.0 * delta);
                assert!((fd - 2.0 * part).abs() <= 1e-5 * scale, "n={n}: {fd} vs {}", 2.0 * part);
            }
        }
    }

    #[test]
    fn scalar_gradient_by_hand() {
        let c = SystemConfig {
            weights: vec![1.0],
            ..cfg(1, 1, 1, 1)
        };
        let ch = ChannelSet::iid(&c, 1.0, 7);
        let th = PhaseVector::from_angles(&[0.4]);
        let w = PrecoderSet::new(vec![CMat::from_element(1, 1, C64::new(0.6, 0.8))]);
        let (d, u, gg, t) = (ch.direct[0][(0, 0)], ch.ris_user[0][(0, 0)], ch.bs_ris[(0, 0)], th.as_vector()[0]);
        let p = w.w[0][(0, 0)].norm_sqr();
        let h = d + u * t * gg;
        // d/dθ* of log(1 + |h|²p/σ²) = h·conj(u g)·p / (σ² + |h|²p)
        let expect = h * (u * gg).conj() * p / (c.noise_power + h.norm_sqr() * p);
        let got = grad_wsr_theta(&mut OpCounter::new(), &ch, &th, &w, &c).unwrap()[0];
        assert!((got - expect).norm() < 1e-13 * expect.norm());
    }

    #[test]
    fn zero_precoder_zero_gradient() {
        let c = cfg(2, 2, 4, 5);
        let ch = ChannelSet::iid(&c, 1.0, 1);
        let g = grad_wsr_theta(&mut OpCounter::new(), &ch, &PhaseVector::ones(5), &PrecoderSet::zeros(&c), &c).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scaling_matrix(&CVec::from_vec(vec![C64::new(3.0, 4.0)])), vec![0.2]);
        assert_eq!(scaling_matrix(&CVec::from_vec(vec![C64::new(0.0, 1.0), C64::new(-2.0, 0.0)])), vec![1.0, 0.5]);
        assert_eq!(scaling_matrix(&CVec::from_vec(vec![linalg::ZERO])), vec![0.0]);
    }

    #[test]
    fn projection_examples() {
        let fb = PhaseVector::from_angles(&[0.3, 0.9, 1.7]);
        let v = CVec::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, -3.0), linalg::ZERO]);
        let p = project_unit_modulus(&v, &fb);
        assert_eq!(p.as_vector()[0], linalg::ONE);
        assert!((p.as_vector()[1] - C64::new(0.0, -1.0)).norm() < 1e-16);
        assert_eq!(p.as_vector()[2], fb.as_vector()[2]);
    }

    #[test]
    fn spg_examples() {
        let th = PhaseVector::ones(1);
        let g = CVec::from_vec(vec![C64::new(0.0, 1.0)]);
        let next = spg_step(&th, &g, &[1.0], 1.0);
        assert!((next.as_vector()[0] - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);

        let th = PhaseVector::random(8, &mut rng_from_seed(1));
        assert_eq!(spg_step(&th, &CVec::zeros(8), &[0.0; 8], 0.7), th);
        let g = CVec::from_element(8, C64::new(1.0, -2.0));
        let xi = scaling_matrix(&g);
        let tiny = spg_step(&th, &g, &xi, 1e-12);
        assert!((tiny.as_vector() - th.as_vector()).norm() < 1e-11);
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_bounded(re in prop::collection::vec(-5.0f64..5.0, 1..16), seed in 0u64..1000) {
            let n = re.len();
            let mut rng = rng_from_seed(seed);
            let v = CVec::from_iterator(n, re.iter().map(|&r| C64::new(r, rand::Rng::random_range(&mut rng, -5.0..5.0))));
            let w = complex_gaussian(n, 1, &mut rng).column(0).into_owned();
            let fb = PhaseVector::ones(n);
            let p = project_unit_modulus(&v, &fb);
            prop_assert!(p.modulus_error() <= 1e-15);
            prop_assert_eq!(project_unit_modulus(p.as_vector(), &fb), p.clone());
            let q = project_unit_modulus(&w, &fb);
            for i in 0..n {
                prop_assert!((p.as_vector()[i] - q.as_vector()[i]).norm() <= 2.0 + 1e-15);
            }
        }

        #[test]
        fn scaled_gradient_is_unit_modulus(re in prop::collection::vec(-1e3f64..1e3, 1..16)) {
            let g = CVec::from_iterator(re.len(), re.iter().map(|&r| C64::new(r, 0.5 * r + 1e-3)));
            let xi = scaling_matrix(&g);
            for (z, s) in g.iter().zip(&xi) {
                prop_assert!(((z * s).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gradient_search_accepts_immediately() {
        let c = cfg(2, 2, 4, 5);
        let ch = ChannelSet::iid(&c, 1.0, 1);
        let w = random_w(&c, 2);
        let th = PhaseVector::random(5, &mut rng_from_seed(3));
        let ops = &mut OpCounter::new();
        let r = rates::wsr(ops, &ch, &th, &w, &c).unwrap();
        let g = CVec::zeros(5);
        let out = line_search_proposed(ops, &ch, &w, &th, &g, &scaling_matrix(&g), &c, r).unwrap();
        assert_eq!((out.steps, out.stalled), (1, false));
        assert_eq!(out.theta, th);
        let out = line_search_armijo(ops, &ch, &w, &th, &g, &c, r).unwrap();
        assert_eq!((out.steps, out.stalled), (1, false));
        assert_eq!(out.theta, th);
    }

    #[test]
    fn accepted_steps_never_decrease_rate() {
        let c = cfg(2, 2, 6, 12);
        for seed in 0..20 {
            let ch = ChannelSet::iid(&c, 0.5, seed);
            let w = random_w(&c, seed + 1);
            let th = PhaseVector::random(12, &mut rng_from_seed(seed + 2));
            let ops = &mut OpCounter::new();
            let r = rates::wsr(ops, &ch, &th, &w, &c).unwrap();
            let g = grad_wsr_theta(ops, &ch, &th, &w, &c).unwrap();
            for out in [
                line_search_proposed(ops, &ch, &w, &th, &g, &scaling_matrix(&g), &c, r).unwrap(),
                line_search_armijo(ops, &ch, &w, &th, &g, &c, r).unwrap(),
            ] {
                let v = rates::wsr(ops, &ch, &out.theta, &w, &c).unwrap();
                assert!(v >= r);
                assert_eq!(v, out.value);
                if !out.stalled {
                    let delta = out.theta.as_vector() - th.as_vector();
                    assert!(out.steps < c.ls_max_steps);
                    assert!(out.alpha > 0.0 && delta.norm() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn equivalent_gradient_rejects_mimo() {
        let c = cfg(2, 2, 4, 5);
        let ch = ChannelSet::iid(&c, 1.0, 1);
        let f = AuxPrecoderSet::matched_filter(&c);
        let r = grad_equiv_theta_miso(&mut OpCounter::new(), &ch, &PhaseVector::ones(5), &f, &c);
        assert!(matches!(r, Err(Error::UnsupportedConfig(_))));
    }

    #[test]
    fn equivalent_gradient_finite_differences() {
        let c = cfg(3, 1, 5, 7);
        let ch = ChannelSet::iid(&c, 0.8, 4);
        let th = PhaseVector::random(7, &mut rng_from_seed(5));
        let mut rng = rng_from_seed(6);
        let f = AuxPrecoderSet::new((0..3).map(|_| complex_gaussian(3, 1, &mut rng)).collect());
        let ops = &mut OpCounter::new();
        let g = grad_equiv_theta_miso(ops, &ch, &th, &f, &c).unwrap();
        let scale = g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let delta = 1e-6;
        for n in 0..7 {
            for (dir, part) in [(C64::new(delta, 0.0), g[n].re), (C64::new(0.0, delta), g[n].im)] {
                let fp = equiv_at(&ch, &perturbed(&th, n, dir), &f, &c);
                let fm = equiv_at(&ch, &perturbed(&th, n, -dir), &f, &c);
                let fd = (fp - fm) / (2.0 * delta);
                assert!((fd - 2.0 * part).abs() <= 1e-5 * scale, "n={n}: {fd} vs {}", 2.0 * part);
            }
        }
    }

    #[test]
    fn equivalent_gradient_single_element_by_hand() {
        // K = 1, N_s = 1: R̃ = log(1 + P|h|²/σ²) independent of f, so the
        // gradient equals that of the scalar Shannon rate at full power.
        let c = SystemConfig {
            weights: vec![1.0],
            ..cfg(1, 1, 1, 1)
        };
        let ch = ChannelSet::iid(&c, 1.0, 9);
        let th = PhaseVector::from_angles(&[1.1]);
        let f = AuxPrecoderSet::new(vec![CMat::from_element(1, 1, C64::new(0.2, 0.5))]);
        let (d, u, gg, t) = (ch.direct[0][(0, 0)], ch.ris_user[0][(0, 0)], ch.bs_ris[(0, 0)], th.as_vector()[0]);
        let h = d + u * t * gg;
        let snr = c.power_bs / c.noise_power;
        let expect = h * (u * gg).conj() * snr / (1.0 + h.norm_sqr() * snr);
        let got = grad_equiv_theta_miso(&mut OpCounter::new(), &ch, &th, &f, &c).unwrap()[0];
        assert!((got - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn theta_independent_equivalent_gradient_vanishes() {
        let c = cfg(2, 1, 4, 6);
        let mut ch = ChannelSet::iid(&c, 1.0, 3).without_ris();
        ch.bs_ris.fill(linalg::ZERO);
        let f = AuxPrecoderSet::matched_filter(&c);
        let g = grad_equiv_theta_miso(&mut OpCounter::new(), &ch, &PhaseVector::ones(6), &f, &c).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lipschitz_basics() {
        let c = cfg(2, 1, 4, 6);
        let ch = ChannelSet::iid(&c, 1.0, 3);
        let zero = PrecoderSet::zeros(&c);
        assert_eq!(estimate_lipschitz(&ch, LipschitzTarget::Original(&zero), &c, 10, 1).unwrap(), 0.0);

        let w = random_w(&c, 4);
        let mut prev = 0.0;
        for n in [2, 5, 20, 50] {
            let l = estimate_lipschitz(&ch, LipschitzTarget::Original(&w), &c, n, 7).unwrap();
            assert!(l >= prev);
            prev = l;
        }
        assert!(prev > 0.0);
    }
}
