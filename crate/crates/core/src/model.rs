//! Domain types shared by every solver: system configuration, the RIS phase
//! vector, physical and reduced precoders, and the per-solve trace.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::metrics::OpCounter;

/// Weights used for the four users of the reference setup.
pub const DEFAULT_WEIGHTS: [f64; 4] = [0.2449, 0.2509, 0.2570, 0.2472];

/// Tolerance on `|θ_n| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antennas `N_t`.
    pub n_tx: usize,
    /// RIS elements `N_s`.
    pub n_ris: usize,
    /// Users `K`.
    pub n_users: usize,
    /// Receive antennas per user `N_r`.
    pub n_rx: usize,
    /// Data streams per user `N_d`.
    pub n_streams: usize,
    /// Total BS transmit power, watts.
    pub power_bs: f64,
    /// Noise power `σ₀²`, watts.
    pub noise_power: f64,
    /// Per-user priority weights `ω_k`.
    pub weights: Vec<f64>,
    /// Inner SCA stop: relative objective improvement below this.
    pub sca_tol: f64,
    pub sca_max_iters: usize,
    /// Outer stop `ε`: absolute WSR improvement at or below this.
    pub ao_tol: f64,
    /// Line-search shrink factor `η`.
    pub ls_shrink: f64,
    /// Sufficient-increase constant `β`.
    pub ls_beta: f64,
    pub ls_max_steps: usize,
    pub ao_max_iters: usize,
}

impl SystemConfig {
    /// Full-scale reference setup: `N_t=64, N_s=400, K=4, N_r=N_d=2`,
    /// 30 dBm transmit power, −90 dBm noise.
    pub fn full_scale() -> Self {
        Self {
            n_tx: 64,
            n_ris: 400,
            n_users: 4,
            n_rx: 2,
            n_streams: 2,
            power_bs: dbm_to_watts(30.0),
            noise_power: dbm_to_watts(-90.0),
            weights: DEFAULT_WEIGHTS.to_vec(),
            sca_tol: 1e-4,
            sca_max_iters: 100,
            ao_tol: 1e-5,
            ls_shrink: 0.5,
            ls_beta: 1e-7,
            ls_max_steps: 60,
            ao_max_iters: 500,
        }
    }

    /// Desk-scale preset for CI: `N_t=16, N_s=64, K=2`, otherwise as
    /// [`SystemConfig::full_scale`].
    pub fn desk() -> Self {
        Self {
            n_tx: 16,
            n_ris: 64,
            n_users: 2,
            weights: default_weights(2),
            ..Self::full_scale()
        }
    }

    /// Single-antenna users (`N_r = N_d = 1`) at the given scale.
    pub fn miso(n_tx: usize, n_ris: usize, n_users: usize) -> Self {
        Self {
            n_tx,
            n_ris,
            n_users,
            n_rx: 1,
            n_streams: 1,
            weights: default_weights(n_users),
            ..Self::full_scale()
        }
    }

    pub fn with_users(mut self, n_users: usize) -> Self {
        self.n_users = n_users;
        self.weights = default_weights(n_users);
        self
    }

    pub fn is_miso(&self) -> bool {
        self.n_rx == 1 && self.n_streams == 1
    }

    /// `σ₀² / P_BS`.
    pub fn noise_to_power(&self) -> f64 {
        self.noise_power / self.power_bs
    }

    /// Rows of the stacked channel, `K·N_r`.
    pub fn stacked_rows(&self) -> usize {
        self.n_users * self.n_rx
    }

    /// Fails only on violations that make the problem ill-posed; a weight
    /// vector that does not sum to one is tolerated.
    pub fn ensure_solvable(&self) -> Result<()> {
        match validate_config(self) {
            Ok(()) => Ok(()),
            Err(v) => {
                let fatal: Vec<_> = v.into_iter().filter(|v| v.fatal).collect();
                if fatal.is_empty() {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(fatal))
                }
            }
        }
    }
}

/// The first `k` reference weights renormalized to sum to one; equal weights
/// beyond four users.
pub fn default_weights(k: usize) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    if k <= DEFAULT_WEIGHTS.len() {
        let s: f64 = DEFAULT_WEIGHTS[..k].iter().sum();
        DEFAULT_WEIGHTS[..k].iter().map(|w| w / s).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub field: &'static str,
    pub message: String,
    /// `false` for conditions the solvers can live with.
    pub fatal: bool,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every violated invariant of `cfg`, or `Ok`.
pub fn validate_config(cfg: &SystemConfig) -> std::result::Result<(), Vec<ConfigViolation>> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, message: String| {
        out.push(ConfigViolation {
            field,
            message,
            fatal: true,
        })
    };

    for (field, v) in [
        ("n_tx", cfg.n_tx),
        ("n_ris", cfg.n_ris),
        ("n_users", cfg.n_users),
        ("n_rx", cfg.n_rx),
        ("n_streams", cfg.n_streams),
        ("sca_max_iters", cfg.sca_max_iters),
        ("ls_max_steps", cfg.ls_max_steps),
        ("ao_max_iters", cfg.ao_max_iters),
    ] {
        if v == 0 {
            bad(field, "must be positive".into());
        }
    }
    if cfg.n_streams > cfg.n_rx {
        bad("n_streams", format!("n_streams exceeds n_rx ({} > {})", cfg.n_streams, cfg.n_rx));
    }
    if cfg.n_rx > cfg.n_tx {
        bad("n_rx", format!("n_rx exceeds n_tx ({} > {})", cfg.n_rx, cfg.n_tx));
    }
    if !(cfg.power_bs > 0.0 && cfg.power_bs.is_finite()) {
        bad("power_bs", format!("must be positive and finite, got {}", cfg.power_bs));
    }
    if !(cfg.noise_power > 0.0 && cfg.noise_power.is_finite()) {
        bad("noise_power", format!("must be positive and finite, got {}", cfg.noise_power));
    }
    if !(cfg.ls_shrink > 0.0 && cfg.ls_shrink < 1.0) {
        bad("ls_shrink", format!("must lie in (0, 1), got {}", cfg.ls_shrink));
    }
    if !(cfg.ls_beta > 0.0 && cfg.ls_beta.is_finite()) {
        bad("ls_beta", format!("must be positive, got {}", cfg.ls_beta));
    }
    if !(cfg.sca_tol >= 0.0) {
        bad("sca_tol", format!("must be nonnegative, got {}", cfg.sca_tol));
    }
    if !(cfg.ao_tol >= 0.0) {
        bad("ao_tol", format!("must be nonnegative, got {}", cfg.ao_tol));
    }
    if cfg.weights.len() != cfg.n_users {
        bad(
            "weights",
            format!("expected {} weights, got {}", cfg.n_users, cfg.weights.len()),
        );
    }
    if cfg.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        bad("weights", "all weights must be strictly positive".into());
    }
    let sum: f64 = cfg.weights.iter().sum();
    if !cfg.weights.is_empty() && (sum - 1.0).abs() > 1e-9 {
        out.push(ConfigViolation {
            field: "weights",
            message: format!("weights must sum to 1 (sum = {sum})"),
            fatal: false,
        });
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// RIS reflection vector `θ`, every entry on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(CVec);

impl PhaseVector {
    /// Checks `|θ_n| = 1` to within [`UNIT_MODULUS_TOL`].
    pub fn new(theta: CVec) -> Result<Self> {
        if let Some((n, z)) = theta
            .iter()
            .enumerate()
            .find(|(_, z)| !((z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL))
        {
            return Err(Error::Domain(format!(
                "theta[{n}] = {z} is not unit modulus"
            )));
        }
        Ok(Self(theta))
    }

    pub fn from_angles(phi: &[f64]) -> Self {
        Self(CVec::from_iterator(phi.len(), phi.iter().map(|&p| C64::from_polar(1.0, p))))
    }

    pub fn ones(n: usize) -> Self {
        Self(CVec::from_element(n, linalg::ONE))
    }

    /// Phases i.i.d. uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let phi: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        Self::from_angles(&phi)
    }

    /// Wraps a vector the caller guarantees to be unit modulus (projection
    /// output).
    pub(crate) fn from_unit_unchecked(theta: CVec) -> Self {
        debug_assert!(theta.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-9));
        Self(theta)
    }

    pub fn as_vector(&self) -> &CVec {
        &self.0
    }

    pub fn into_vector(self) -> CVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }

    /// `max_n ||θ_n| − 1|`.
    pub fn modulus_error(&self) -> f64 {
        self.0.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Physical precoders `W_k ∈ C^{N_t×N_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub w: Vec<CMat>,
}

impl PrecoderSet {
    pub fn new(w: Vec<CMat>) -> Self {
        Self { w }
    }

    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self {
            w: vec![CMat::zeros(cfg.n_tx, cfg.n_streams); cfg.n_users],
        }
    }

    /// `Σ_k tr(W_k W_kᴴ)`.
    pub fn total_power(&self) -> f64 {
        self.w.iter().map(linalg::frob_sq).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w: self.w.iter().map(|m| m * C64::new(c, 0.0)).collect(),
        }
    }

    /// `Σ_k W_k W_kᴴ` over all users, or all but `skip`.
    pub fn covariance(&self, skip: Option<usize>) -> CMat {
        let n = self.w.first().map_or(0, |m| m.nrows());
        let mut acc = CMat::zeros(n, n);
        for (j, wj) in self.w.iter().enumerate() {
            if Some(j) != skip {
                acc += wj * wj.adjoint();
            }
        }
        acc
    }

    /// Power constraint with relative slack `1e-9`.
    pub fn satisfies_power(&self, power_bs: f64) -> bool {
        self.total_power() <= power_bs * (1.0 + 1e-9)
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        if self.w.len() != cfg.n_users
            || self
                .w
                .iter()
                .any(|m| m.nrows() != cfg.n_tx || m.ncols() != cfg.n_streams)
        {
            return Err(Error::Dimension(format!(
                "precoders must be {} blocks of {}x{}",
                cfg.n_users, cfg.n_tx, cfg.n_streams
            )));
        }
        if !self.w.iter().all(linalg::is_finite) {
            return Err(Error::Domain("precoder has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Reduced precoders `F_k ∈ C^{K N_r × N_d}`, with `W_k ∝ Hᴴ F_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxPrecoderSet {
    pub f: Vec<CMat>,
}

impl AuxPrecoderSet {
    pub fn new(f: Vec<CMat>) -> Self {
        Self { f }
    }

    /// `F_k` is the `k`-th `N_r`-row block of the `K N_r` identity restricted
    /// to its first `N_d` columns, so `Hᴴ F_k` is a matched filter on the
    /// first `N_d` receive antennas of user `k`.
    pub fn matched_filter(cfg: &SystemConfig) -> Self {
        let rows = cfg.stacked_rows();
        let f = (0..cfg.n_users)
            .map(|k| {
                let mut m = CMat::zeros(rows, cfg.n_streams);
                for d in 0..cfg.n_streams {
                    m[(k * cfg.n_rx + d, d)] = linalg::ONE;
                }
                m
            })
            .collect();
        Self { f }
    }

    /// Splits a `K N_r × K N_d` matrix into its `K` column blocks.
    pub fn from_stacked(stacked: &CMat, n_users: usize, n_streams: usize) -> Self {
        let f = (0..n_users)
            .map(|k| stacked.columns(k * n_streams, n_streams).into_owned())
            .collect();
        Self { f }
    }

    /// `[F_1, …, F_K]`.
    pub fn stacked(&self) -> CMat {
        let rows = self.f.first().map_or(0, |m| m.nrows());
        let nd = self.f.first().map_or(0, |m| m.ncols());
        let mut out = CMat::zeros(rows, nd * self.f.len());
        for (k, fk) in self.f.iter().enumerate() {
            out.columns_mut(k * nd, nd).copy_from(fk);
        }
        out
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            f: self.f.iter().map(|m| m * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(|m| m.iter().all(|z| z.norm_sqr() == 0.0))
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let rows = cfg.stacked_rows();
        if self.f.len() != cfg.n_users
            || self
                .f
                .iter()
                .any(|m| m.nrows() != rows || m.ncols() != cfg.n_streams)
        {
            return Err(Error::Dimension(format!(
                "reduced precoders must be {} blocks of {}x{}",
                cfg.n_users, rows, cfg.n_streams
            )));
        }
        if !self.f.iter().all(linalg::is_finite) {
            return Err(Error::Domain("reduced precoder has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Per-iteration record of one solve.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    /// WSR after each outer iteration, nats/s/Hz.
    pub wsr_per_outer_iter: Vec<f64>,
    /// Accepted line-search step per outer iteration (0 when the search
    /// stalled or no θ-update ran).
    pub step_sizes: Vec<f64>,
    /// Candidates evaluated by the line search per outer iteration.
    pub line_search_steps: Vec<usize>,
    /// SCA iterations `I_w` per outer iteration.
    pub sca_iters: Vec<usize>,
    /// Equivalent-objective sequence of every SCA run, in order.
    pub sca_objectives: Vec<Vec<f64>>,
    /// Cumulative complex multiplications after each outer iteration.
    pub cum_cmul: Vec<u64>,
    /// Seconds since the start of the solve after each outer iteration.
    pub elapsed_sec: Vec<f64>,
    /// Outer iterations whose line search ran out of steps.
    pub stalls: usize,
    /// SCA updates that fell back to a least-squares solve.
    pub lstsq_fallbacks: usize,
    pub complex_mult_count: u64,
    pub ops: OpCounter,
    pub wall_time_sec: f64,
}

impl SolveTrace {
    pub fn outer_iters(&self) -> usize {
        self.wsr_per_outer_iter.len()
    }

    /// Every step of the WSR sequence is nondecreasing up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        is_nondecreasing(&self.wsr_per_outer_iter, slack)
    }
}

pub fn is_nondecreasing(xs: &[f64], slack: f64) -> bool {
    xs.windows(2).all(|p| p[1] >= p[0] - slack)
}
