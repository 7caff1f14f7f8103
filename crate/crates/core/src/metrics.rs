//! Complex-multiplication accounting.
//!
//! Only complex multiplications are counted. An `m×k` by `k×n` product costs
//! `m·k·n`; factoring or inverting an `n×n` Hermitian matrix costs `n³`.
//! Counters are plain values threaded through the solver calls, so
//! concurrent solves never share one.

use std::fmt;

use serde::Serialize;

use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ChannelStack,
    WUpdate,
    ThetaGradient,
    LineSearch,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::ChannelStack,
        Phase::WUpdate,
        Phase::ThetaGradient,
        Phase::LineSearch,
    ];

    fn index(self) -> usize {
        match self {
            Phase::ChannelStack => 0,
            Phase::WUpdate => 1,
            Phase::ThetaGradient => 2,
            Phase::LineSearch => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::ChannelStack => "channel_stack",
            Phase::WUpdate => "w_update",
            Phase::ThetaGradient => "theta_gradient",
            Phase::LineSearch => "line_search",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-phase complex-multiplication tally. Charges go to the phase set by
/// the most recent [`OpCounter::set_phase`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCounter {
    per_phase: [u64; 4],
    current: Phase,
}

impl Default for OpCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl OpCounter {
    pub fn new() -> Self {
        Self {
            per_phase: [0; 4],
            current: Phase::ChannelStack,
        }
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.current = phase;
    }

    pub fn phase(&self) -> Phase {
        self.current
    }

    pub fn charge(&mut self, n: u64) {
        self.per_phase[self.current.index()] += n;
    }

    pub fn get(&self, phase: Phase) -> u64 {
        self.per_phase[phase.index()]
    }

    pub fn total_cmul(&self) -> u64 {
        self.per_phase.iter().sum()
    }

    pub fn per_phase(&self) -> impl Iterator<Item = (Phase, u64)> + '_ {
        Phase::ALL.iter().map(move |&p| (p, self.get(p)))
    }

    /// Adds another counter's tallies into this one.
    pub fn absorb(&mut self, other: &OpCounter) {
        for (dst, src) in self.per_phase.iter_mut().zip(other.per_phase.iter()) {
            *dst += src;
        }
    }
}

/// Complex multiplications of an `m×k` by `k×n` product.
pub fn count_matmul(m: usize, k: usize, n: usize) -> u64 {
    m as u64 * k as u64 * n as u64
}

/// Dominant-term cost model of one outer iteration:
/// `N_t N_r N_d K² + I_θ·N_s N_t N_r K + I_w·N_r³ K³`.
pub fn predicted_outer_cost(cfg: &SystemConfig, i_theta: u64, i_w: u64) -> u64 {
    let nt = cfg.n_tx as u64;
    let ns = cfg.n_ris as u64;
    let k = cfg.n_users as u64;
    let nr = cfg.n_rx as u64;
    let nd = cfg.n_streams as u64;
    nt * nr * nd * k * k + i_theta * (ns * nt * nr * k) + i_w * (nr * nr * nr * k * k * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> SystemConfig {
        SystemConfig::desk()
    }

    #[test]
    fn matmul_counts() {
        assert_eq!(count_matmul(1, 1, 1), 1);
        assert_eq!(count_matmul(2, 3, 4), 24);
        // scale U_k columns by θ, then multiply by G
        let (nr, ns, nt) = (2, 8, 4);
        assert_eq!(count_matmul(nr, ns, 1) + count_matmul(nr, ns, nt), 80);
    }

    #[test]
    fn outer_cost_model() {
        assert_eq!(predicted_outer_cost(&desk(), 1, 5), 4672);

        let base = predicted_outer_cost(&desk(), 1, 5);
        let mut twice_ris = desk();
        twice_ris.n_ris *= 2;
        assert_eq!(predicted_outer_cost(&twice_ris, 1, 5) - base, 4096);

        let mut twice_tx = desk();
        twice_tx.n_tx *= 2;
        assert_eq!(predicted_outer_cost(&twice_tx, 1, 5), 2 * 256 + 2 * 4096 + 320);
    }

    #[test]
    fn counter_total_is_sum_of_phases() {
        let mut ops = OpCounter::new();
        ops.charge(3);
        ops.set_phase(Phase::LineSearch);
        ops.charge(10);
        ops.set_phase(Phase::WUpdate);
        ops.charge(7);
        assert_eq!(ops.get(Phase::ChannelStack), 3);
        assert_eq!(ops.get(Phase::LineSearch), 10);
        assert_eq!(ops.total_cmul(), ops.per_phase().map(|(_, n)| n).sum::<u64>());

        let mut other = OpCounter::new();
        other.absorb(&ops);
        other.absorb(&ops);
        assert_eq!(other.total_cmul(), 40);
    }
}
