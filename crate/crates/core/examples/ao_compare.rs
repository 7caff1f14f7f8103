//! Solves one desk-scale realization with every applicable scheme from the
//! same initial phases and prints the convergence summary.

use ris_wsr::seeding::rng_from_seed;
use ris_wsr::{solve, AlgorithmVariant, ChannelSet, GeometryConfig, PhaseVector, SystemConfig};

fn report(cfg: &SystemConfig, seed: u64, variants: &[AlgorithmVariant]) -> ris_wsr::Result<()> {
    let ch = ChannelSet::random_realization(cfg, &GeometryConfig::default(), seed)?;
    let theta0 = PhaseVector::random(cfg.n_ris, &mut rng_from_seed(seed + 1));
    println!("N_t={} N_s={} K={} N_r={}", cfg.n_tx, cfg.n_ris, cfg.n_users, cfg.n_rx);
    for &v in variants {
        let r = solve(&ch, cfg, v, &theta0)?;
        let t = &r.trace;
        println!(
            "  {:<22} WSR {:.4} nats  outer iters {:>4}  mean ls steps {:>5.2}  cmul {:.3e}",
            v.label(),
            r.wsr_final,
            t.outer_iters(),
            t.line_search_steps.iter().sum::<usize>() as f64 / t.outer_iters() as f64,
            t.complex_mult_count as f64
        );
    }
    Ok(())
}

fn main() -> ris_wsr::Result<()> {
    use AlgorithmVariant::*;
    report(&SystemConfig::desk(), 3, &[Proposed, Bls1ConventionalPg, RandomPhase, WithoutRis])?;
    report(&SystemConfig::miso(16, 32, 2), 3, &AlgorithmVariant::ALL)?;
    Ok(())
}
