//! Channel realizations and the composite channel `H_k(θ) = D_k + U_k diag(θ) G`.
//!
//! Large-scale fading uses the 3GPP UMi path-loss fits (LoS for the
//! BS-RIS and RIS-user links, NLoS for the direct link) converted to a
//! linear power attenuation `L = 10^{-PL/10}`. The RIS links are Rician
//! with a half-wavelength ULA line-of-sight term; the direct link is
//! Rayleigh. Amplitudes carry `√L` on every link.

pub mod io;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::metrics::{count_matmul, OpCounter};
use crate::model::{PhaseVector, SystemConfig};
use crate::seeding::{derive_seed, rng_from_seed};

/// A point in the plane, meters.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub bs_pos: Point,
    pub ris_pos: Point,
    /// Center of the disk users are dropped in.
    pub user_center: Point,
    pub user_radius: f64,
    /// Rician factor `κ` (linear) of both RIS links.
    pub rician_k: f64,
    /// Path-loss model of the RIS-user link: LoS fit when `true`.
    pub ris_user_los: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bs_pos: [0.0, 0.0],
            ris_pos: [200.0, 0.0],
            user_center: [200.0, 30.0],
            user_radius: 10.0,
            rician_k: 10.0,
            ris_user_los: true,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.user_radius >= 0.0) {
            return Err(Error::Domain(format!("user_radius must be >= 0, got {}", self.user_radius)));
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::Domain(format!("rician_k must be >= 0, got {}", self.rician_k)));
        }
        Ok(())
    }

    /// Uniform drop in the user disk: angle uniform, radius `R·√u`.
    pub fn sample_user_positions<R: Rng + ?Sized>(&self, n_users: usize, rng: &mut R) -> Vec<Point> {
        (0..n_users)
            .map(|_| {
                let r = self.user_radius * rng.random::<f64>().sqrt();
                let a = rng.random_range(0.0..TAU);
                [self.user_center[0] + r * a.cos(), self.user_center[1] + r * a.sin()]
            })
            .collect()
    }

    /// BS-RIS angles from the layout, per-user angles uniform in `(−π/2, π/2)`.
    ///
    /// Both BS and RIS arrays face each other along the BS-RIS axis, so for
    /// any layout the BS-RIS departure and arrival angles are broadside (0).
    pub fn sample_angles<R: Rng + ?Sized>(&self, n_users: usize, rng: &mut R) -> SteeringAngles {
        let mut uniform = || rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        let ris_user_aod = (0..n_users).map(|_| uniform()).collect();
        let ris_user_aoa = (0..n_users).map(|_| uniform()).collect();
        SteeringAngles {
            bs_ris_aod: 0.0,
            bs_ris_aoa: 0.0,
            ris_user_aod,
            ris_user_aoa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringAngles {
    /// Departure angle at the BS toward the RIS (`φ`).
    pub bs_ris_aod: f64,
    /// Arrival angle at the RIS from the BS (`ϑ`).
    pub bs_ris_aoa: f64,
    /// Departure angle at the RIS toward user `k` (`φ_k`).
    pub ris_user_aod: Vec<f64>,
    /// Arrival angle at user `k` (`ψ_k`).
    pub ris_user_aoa: Vec<f64>,
}

/// One channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `G`, `N_s × N_t`.
    pub bs_ris: CMat,
    /// `U_k`, each `N_r × N_s`.
    pub ris_user: Vec<CMat>,
    /// `D_k`, each `N_r × N_t`.
    pub direct: Vec<CMat>,
}

/// 3GPP UMi path loss in dB.
pub fn path_loss_db(distance_m: f64, los: bool) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    let d = distance_m.log10();
    Ok(if los { 35.6 + 22.0 * d } else { 32.6 + 36.7 * d })
}

/// Linear power attenuation for a loss of `pl_db` dB.
pub fn db_to_gain(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// Half-wavelength ULA response, `[e^{jπ m sin(angle)}]_{m=0..n}`.
pub fn steering_vector(n: usize, angle: f64) -> CVec {
    let s = angle.sin();
    CVec::from_iterator(n, (0..n).map(|m| C64::from_polar(1.0, PI * m as f64 * s)))
}

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// `rows × cols` matrix of i.i.d. `CN(0, 1)` entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let n = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std");
    CMat::from_fn(rows, cols, |_, _| C64::new(n.sample(rng), n.sample(rng)))
}

/// `√(Lκ₁)·a_rx a_txᴴ + √(Lκ₂)·X̄` with `κ₂ = 1/(1+κ)`, `κ₁ = 1 − κ₂`.
fn rician<R: Rng + ?Sized>(gain: f64, kappa: f64, a_rx: &CVec, a_tx: &CVec, rng: &mut R) -> CMat {
    let k2 = 1.0 / (1.0 + kappa);
    let k1 = 1.0 - k2;
    let nlos = complex_gaussian(a_rx.len(), a_tx.len(), rng);
    let los = a_rx * a_tx.adjoint();
    los * C64::new((gain * k1).sqrt(), 0.0) + nlos * C64::new((gain * k2).sqrt(), 0.0)
}

/// Draws one realization. Small-scale fading comes from `rng_seed`; the
/// geometry, angles and user positions are inputs.
pub fn generate_channels(
    cfg: &SystemConfig,
    geo: &GeometryConfig,
    angles: &SteeringAngles,
    user_positions: &[Point],
    rng_seed: u64,
) -> Result<ChannelSet> {
    cfg.ensure_solvable()?;
    geo.validate()?;
    let k = cfg.n_users;
    if user_positions.len() != k || angles.ris_user_aod.len() != k || angles.ris_user_aoa.len() != k {
        return Err(Error::Dimension(format!(
            "need {k} user positions and angles, got {} / {} / {}",
            user_positions.len(),
            angles.ris_user_aod.len(),
            angles.ris_user_aoa.len()
        )));
    }
    let mut rng = rng_from_seed(rng_seed);

    let l1 = db_to_gain(path_loss_db(distance(geo.bs_pos, geo.ris_pos), true)?);
    let g = rician(
        l1,
        geo.rician_k,
        &steering_vector(cfg.n_ris, angles.bs_ris_aoa),
        &steering_vector(cfg.n_tx, angles.bs_ris_aod),
        &mut rng,
    );

    let mut ris_user = Vec::with_capacity(k);
    let mut direct = Vec::with_capacity(k);
    for (u, &pos) in user_positions.iter().enumerate() {
        let l2 = db_to_gain(path_loss_db(distance(geo.ris_pos, pos), geo.ris_user_los)?);
        ris_user.push(rician(
            l2,
            geo.rician_k,
            &steering_vector(cfg.n_rx, angles.ris_user_aoa[u]),
            &steering_vector(cfg.n_ris, angles.ris_user_aod[u]),
            &mut rng,
        ));
        let l3 = db_to_gain(path_loss_db(distance(geo.bs_pos, pos), false)?);
        direct.push(complex_gaussian(cfg.n_rx, cfg.n_tx, &mut rng) * C64::new(l3.sqrt(), 0.0));
    }

    Ok(ChannelSet {
        bs_ris: g,
        ris_user,
        direct,
    })
}

impl ChannelSet {
    /// Positions, angles and fading all derived from one seed.
    pub fn random_realization(cfg: &SystemConfig, geo: &GeometryConfig, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(derive_seed(seed, 0));
        let positions = geo.sample_user_positions(cfg.n_users, &mut rng);
        let angles = geo.sample_angles(cfg.n_users, &mut rng);
        generate_channels(cfg, geo, &angles, &positions, derive_seed(seed, 1))
    }

    /// I.i.d. `CN(0, 1)` entries on every link, scaled by `scale`. Meant for
    /// tests and gradient checks where geometry is irrelevant.
    pub fn iid(cfg: &SystemConfig, scale: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let s = C64::new(scale, 0.0);
        let bs_ris = complex_gaussian(cfg.n_ris, cfg.n_tx, &mut rng) * s;
        let ris_user = (0..cfg.n_users)
            .map(|_| complex_gaussian(cfg.n_rx, cfg.n_ris, &mut rng) * s)
            .collect();
        let direct = (0..cfg.n_users)
            .map(|_| complex_gaussian(cfg.n_rx, cfg.n_tx, &mut rng) * s)
            .collect();
        Self {
            bs_ris,
            ris_user,
            direct,
        }
    }

    /// The same realization with every RIS-user link removed.
    pub fn without_ris(&self) -> Self {
        Self {
            bs_ris: self.bs_ris.clone(),
            ris_user: self
                .ris_user
                .iter()
                .map(|u| CMat::zeros(u.nrows(), u.ncols()))
                .collect(),
            direct: self.direct.clone(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.direct.len()
    }

    pub fn n_tx(&self) -> usize {
        self.bs_ris.ncols()
    }

    pub fn n_ris(&self) -> usize {
        self.bs_ris.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.direct.first().map_or(0, |d| d.nrows())
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let ok = self.bs_ris.shape() == (cfg.n_ris, cfg.n_tx)
            && self.ris_user.len() == cfg.n_users
            && self.direct.len() == cfg.n_users
            && self.ris_user.iter().all(|u| u.shape() == (cfg.n_rx, cfg.n_ris))
            && self.direct.iter().all(|d| d.shape() == (cfg.n_rx, cfg.n_tx));
        if !ok {
            return Err(Error::Dimension(format!(
                "channel set does not match N_t={}, N_s={}, K={}, N_r={}",
                cfg.n_tx, cfg.n_ris, cfg.n_users, cfg.n_rx
            )));
        }
        if !self.is_finite() {
            return Err(Error::Domain("channel has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        linalg::is_finite(&self.bs_ris)
            && self.ris_user.iter().all(linalg::is_finite)
            && self.direct.iter().all(linalg::is_finite)
    }
}

/// `H_k = D_k + (U_k with column n scaled by θ_n)·G`.
pub fn composite_channel(ops: &mut OpCounter, ch: &ChannelSet, theta: &PhaseVector, k: usize) -> CMat {
    composite_channel_with(ops, ch, theta.as_vector(), k)
}

/// [`composite_channel`] for an arbitrary (not necessarily unit-modulus)
/// reflection vector.
pub fn composite_channel_with(ops: &mut OpCounter, ch: &ChannelSet, th: &CVec, k: usize) -> CMat {
    let u = &ch.ris_user[k];
    let mut scaled = u.clone();
    for (n, mut col) in scaled.column_iter_mut().enumerate() {
        col *= th[n];
    }
    ops.charge(count_matmul(u.nrows(), u.ncols(), 1));
    let mut h = linalg::mul(ops, &scaled, &ch.bs_ris);
    h += &ch.direct[k];
    h
}

/// `H = [H_1; …; H_K]`, `K·N_r × N_t`.
pub fn stack_channels(ops: &mut OpCounter, ch: &ChannelSet, theta: &PhaseVector) -> CMat {
    stack_channels_with(ops, ch, theta.as_vector())
}

/// [`stack_channels`] for an arbitrary reflection vector.
pub fn stack_channels_with(ops: &mut OpCounter, ch: &ChannelSet, th: &CVec) -> CMat {
    let nr = ch.n_rx();
    let mut h = CMat::zeros(ch.n_users() * nr, ch.n_tx());
    for k in 0..ch.n_users() {
        let hk = composite_channel_with(ops, ch, th, k);
        h.rows_mut(k * nr, nr).copy_from(&hk);
    }
    h
}

/// Row block `k` of a stacked matrix with `n_rx` rows per user.
pub fn user_block(h_stack: &CMat, k: usize, n_rx: usize) -> CMat {
    h_stack.rows(k * n_rx, n_rx).into_owned()
}
