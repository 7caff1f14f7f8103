//! Alternating optimization of precoders and phase shifts, and the
//! comparison schemes that share its code path.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{stack_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::metrics::{OpCounter, Phase};
use crate::model::{AuxPrecoderSet, PhaseVector, PrecoderSet, SolveTrace, SystemConfig};
use crate::precoder::{aux_from_precoder, solve_precoder};
use crate::rates::{self, recover_precoder, wsr_stacked};
use crate::ris::{self, LineSearchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmVariant {
    /// SCA precoder update and scaled projected gradient with the
    /// sufficient-increase line search.
    Proposed,
    /// Unscaled projected gradient with Armijo backtracking.
    #[serde(rename = "bls1_conventional_pg")]
    Bls1ConventionalPg,
    /// Phase update on the reduced objective `R̃(θ)` (single-antenna users).
    #[serde(rename = "bls2_equivalent_theta")]
    Bls2EquivalentTheta,
    /// `θ` kept at its initial value; precoders optimized once.
    RandomPhase,
    /// RIS links ignored; precoders optimized once for the direct channel.
    WithoutRis,
}

impl AlgorithmVariant {
    pub const ALL: [AlgorithmVariant; 5] = [
        AlgorithmVariant::Proposed,
        AlgorithmVariant::Bls1ConventionalPg,
        AlgorithmVariant::Bls2EquivalentTheta,
        AlgorithmVariant::RandomPhase,
        AlgorithmVariant::WithoutRis,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AlgorithmVariant::Proposed => "proposed",
            AlgorithmVariant::Bls1ConventionalPg => "bls1_conventional_pg",
            AlgorithmVariant::Bls2EquivalentTheta => "bls2_equivalent_theta",
            AlgorithmVariant::RandomPhase => "random_phase",
            AlgorithmVariant::WithoutRis => "without_ris",
        }
    }

    /// Whether the variant runs the outer loop (as opposed to one precoder
    /// solve).
    pub fn is_iterative(self) -> bool {
        !matches!(self, AlgorithmVariant::RandomPhase | AlgorithmVariant::WithoutRis)
    }
}

impl fmt::Display for AlgorithmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AlgorithmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|v| v.label() == s || v.label().split('_').next() == Some(s.as_str()))
            .ok_or_else(|| Error::Spec(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w_final: PrecoderSet,
    pub theta_final: PhaseVector,
    pub wsr_final: f64,
    pub trace: SolveTrace,
    /// `α·‖Ξ∇‖` of the last phase update, a rough stationarity measure
    /// (0 for the non-iterative variants).
    pub last_step_norm: f64,
    /// `‖θ⁺ − θ‖` of the last phase update. Unlike `last_step_norm` it goes
    /// to zero at a fixed point of the projected step.
    pub last_displacement: f64,
}

/// Runs `variant` from the initial phase vector `theta0`.
///
/// One outer iteration: stack the channel at `θ`, solve for the precoders
/// (warm-started from the previous ones mapped through the new channel),
/// take one projected-gradient phase step with backtracking, record the
/// weighted sum rate. The loop stops when the improvement over the previous
/// iteration is at most `cfg.ao_tol`, except that a first line-search stall
/// earns one more iteration; it also stops at `cfg.ao_max_iters`.
pub fn solve(ch: &ChannelSet, cfg: &SystemConfig, variant: AlgorithmVariant, theta0: &PhaseVector) -> Result<SolveResult> {
    cfg.ensure_solvable()?;
    ch.check_dims(cfg)?;
    if theta0.len() != cfg.n_ris {
        return Err(Error::Dimension(format!("theta0 has {} entries, expected {}", theta0.len(), cfg.n_ris)));
    }
    if variant == AlgorithmVariant::Bls2EquivalentTheta && !cfg.is_miso() {
        return Err(Error::UnsupportedConfig(
            "bls2_equivalent_theta requires single-antenna users (N_r = N_d = 1)".into(),
        ));
    }
    if variant.is_iterative() {
        outer_loop(ch, cfg, variant, theta0)
    } else {
        single_solve(ch, cfg, variant, theta0)
    }
}

fn finish(trace: &mut SolveTrace, ops: &OpCounter, start: &Instant) {
    trace.complex_mult_count = ops.total_cmul();
    trace.ops = ops.clone();
    trace.wall_time_sec = start.elapsed().as_secs_f64();
}

fn single_solve(ch: &ChannelSet, cfg: &SystemConfig, variant: AlgorithmVariant, theta0: &PhaseVector) -> Result<SolveResult> {
    let start = Instant::now();
    let mut ops = OpCounter::new();
    let ch: Cow<'_, ChannelSet> = match variant {
        AlgorithmVariant::WithoutRis => Cow::Owned(ch.without_ris()),
        _ => Cow::Borrowed(ch),
    };
    let h = stack_channels(&mut ops, &ch, theta0);
    ops.set_phase(Phase::WUpdate);
    let sol = solve_precoder(&mut ops, &AuxPrecoderSet::matched_filter(cfg), &h, cfg)?;
    let r = wsr_stacked(&mut ops, &h, &sol.w, cfg)?;

    let mut trace = SolveTrace {
        wsr_per_outer_iter: vec![r],
        step_sizes: vec![0.0],
        line_search_steps: vec![0],
        sca_iters: vec![sol.iters],
        sca_objectives: vec![sol.objectives],
        cum_cmul: vec![ops.total_cmul()],
        elapsed_sec: vec![start.elapsed().as_secs_f64()],
        lstsq_fallbacks: sol.lstsq_fallbacks,
        ..SolveTrace::default()
    };
    finish(&mut trace, &ops, &start);
    Ok(SolveResult {
        w_final: sol.w,
        theta_final: theta0.clone(),
        wsr_final: r,
        trace,
        last_step_norm: 0.0,
        last_displacement: 0.0,
    })
}

fn outer_loop(ch: &ChannelSet, cfg: &SystemConfig, variant: AlgorithmVariant, theta0: &PhaseVector) -> Result<SolveResult> {
    use AlgorithmVariant::*;

    let start = Instant::now();
    let mut ops = OpCounter::new();
    let mut trace = SolveTrace::default();
    let mut theta = theta0.clone();
    let mut f = AuxPrecoderSet::matched_filter(cfg);
    let mut w: Option<PrecoderSet> = None;
    let mut prev_stalled = false;
    let mut last_step_norm = 0.0;
    let mut last_displacement = 0.0;
    let mut wsr_now = 0.0;
    // stacked channel of the last line-search candidate, reused when accepted
    let mut cached: Option<(PhaseVector, CMat)> = None;

    for _ in 0..cfg.ao_max_iters {
        ops.set_phase(Phase::ChannelStack);
        let h = match cached.take() {
            Some((t, h)) if t == theta => h,
            _ => stack_channels(&mut ops, ch, &theta),
        };

        ops.set_phase(Phase::WUpdate);
        if let Some(w_prev) = &w {
            if variant != Bls2EquivalentTheta {
                f = aux_from_precoder(&mut ops, &h, w_prev, cfg);
            }
        }
        let sol = solve_precoder(&mut ops, &f, &h, cfg)?;
        trace.lstsq_fallbacks += sol.lstsq_fallbacks;
        let r = match variant {
            Bls2EquivalentTheta => rates::equivalent_rate(&mut ops, &h, &sol.f, cfg)?,
            _ => wsr_stacked(&mut ops, &h, &sol.w, cfg)?,
        };

        ops.set_phase(Phase::ThetaGradient);
        let grad = match variant {
            Bls2EquivalentTheta => ris::grad_equiv_theta_miso(&mut ops, ch, &theta, &sol.f, cfg)?,
            _ => ris::grad_wsr_theta_stacked(&mut ops, ch, &h, &sol.w, cfg)?,
        };
        let xi = ris::scaling_matrix(&grad);

        ops.set_phase(Phase::LineSearch);
        let wsr_at = |o: &mut OpCounter, t: &PhaseVector| -> Result<f64> {
            let h = stack_channels(o, ch, t);
            let v = wsr_stacked(o, &h, &sol.w, cfg)?;
            cached = Some((t.clone(), h));
            Ok(v)
        };
        let ls: LineSearchOutcome = match variant {
            Proposed => ris::line_search_proposed_by(&mut ops, wsr_at, &theta, &grad, &xi, cfg, r)?,
            Bls1ConventionalPg => ris::line_search_armijo_by(&mut ops, wsr_at, &theta, &grad, cfg, r)?,
            Bls2EquivalentTheta => ris::line_search_proposed_by(
                &mut ops,
                |o, t| ris::equivalent_objective_theta(o, ch, t, &sol.f, cfg),
                &theta,
                &grad,
                &xi,
                cfg,
                r,
            )?,
            RandomPhase | WithoutRis => unreachable!("non-iterative variant"),
        };
        last_step_norm = match variant {
            Bls1ConventionalPg => ls.alpha * grad.norm(),
            _ => ls.alpha * (xi.iter().filter(|&&x| x > 0.0).count() as f64).sqrt(),
        };

        last_displacement = (ls.theta.as_vector() - theta.as_vector()).norm();
        theta = ls.theta;
        let (w_next, value) = match variant {
            Bls2EquivalentTheta => {
                // the reduced precoder is held fixed across the phase step
                let h_new = stack_channels(&mut ops, ch, &theta);
                let w_new = recover_precoder(&mut ops, &h_new, &sol.f, cfg)?;
                let v = wsr_stacked(&mut ops, &h_new, &w_new, cfg)?;
                (w_new, v)
            }
            _ => (sol.w, ls.value),
        };
        f = sol.f;
        w = Some(w_next);

        let prev = trace.wsr_per_outer_iter.last().copied();
        trace.wsr_per_outer_iter.push(value);
        trace.step_sizes.push(ls.alpha);
        trace.line_search_steps.push(ls.steps);
        trace.sca_iters.push(sol.iters);
        trace.sca_objectives.push(sol.objectives);
        trace.cum_cmul.push(ops.total_cmul());
        trace.elapsed_sec.push(start.elapsed().as_secs_f64());
        trace.stalls += usize::from(ls.stalled);
        wsr_now = value;

        if let Some(p) = prev {
            if value - p <= cfg.ao_tol {
                if ls.stalled && !prev_stalled {
                    prev_stalled = true;
                    continue;
                }
                break;
            }
        }
        prev_stalled = ls.stalled;
    }

    finish(&mut trace, &ops, &start);
    Ok(SolveResult {
        w_final: w.expect("at least one outer iteration"),
        theta_final: theta,
        wsr_final: wsr_now,
        trace,
        last_step_norm,
        last_displacement,
    })
}
