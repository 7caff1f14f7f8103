//! Measured complex multiplications per outer iteration against the
//! dominant-term model, as the RIS and the BS array grow.

use ris_wsr::metrics::{predicted_outer_cost, Phase};
use ris_wsr::seeding::rng_from_seed;
use ris_wsr::{solve, AlgorithmVariant, ChannelSet, GeometryConfig, PhaseVector, SystemConfig};

fn main() -> ris_wsr::Result<()> {
    println!("{:>5} {:>5} {:>12} {:>12} {:>8} {:>8}  per phase", "N_t", "N_s", "measured", "model", "I_theta", "I_w");
    let grid = [(16, 32), (16, 64), (16, 128), (16, 256), (8, 64), (32, 64), (64, 64)];
    for (nt, ns) in grid {
        let cfg = SystemConfig {
            n_tx: nt,
            n_ris: ns,
            ..SystemConfig::desk()
        };
        let ch = ChannelSet::random_realization(&cfg, &GeometryConfig::default(), 5)?;
        let theta0 = PhaseVector::random(ns, &mut rng_from_seed(6));
        let r = solve(&ch, &cfg, AlgorithmVariant::Proposed, &theta0)?;
        let t = &r.trace;
        let n = t.outer_iters() as f64;
        let i_theta = t.line_search_steps.iter().sum::<usize>() as f64 / n;
        let i_w = t.sca_iters.iter().sum::<usize>() as f64 / n;
        let model = predicted_outer_cost(&cfg, i_theta.round().max(1.0) as u64, i_w.round().max(1.0) as u64);
        let phases: Vec<String> = Phase::ALL
            .iter()
            .map(|p| format!("{} {:.0}", p.label(), t.ops.get(*p) as f64 / n))
            .collect();
        println!(
            "{nt:>5} {ns:>5} {:>12.0} {model:>12} {i_theta:>8.2} {i_w:>8.2}  {}",
            t.complex_mult_count as f64 / n,
            phases.join(", ")
        );
    }
    Ok(())
}
