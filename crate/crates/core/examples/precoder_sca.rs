//! Runs the SCA precoder solver at a fixed random phase vector and shows the
//! objective sequence, the recovered power and the reduced/original match.

use ris_wsr::channel::stack_channels;
use ris_wsr::precoder::solve_precoder;
use ris_wsr::rates::{equivalent_rate, nats_to_bits, wsr};
use ris_wsr::seeding::rng_from_seed;
use ris_wsr::{AuxPrecoderSet, ChannelSet, GeometryConfig, OpCounter, PhaseVector, SystemConfig};

fn main() -> ris_wsr::Result<()> {
    let cfg = SystemConfig {
        sca_tol: 1e-8,
        ..SystemConfig::desk()
    };
    let ch = ChannelSet::random_realization(&cfg, &GeometryConfig::default(), 7)?;
    let theta = PhaseVector::random(cfg.n_ris, &mut rng_from_seed(8));

    let ops = &mut OpCounter::new();
    let h = stack_channels(ops, &ch, &theta);
    let sol = solve_precoder(ops, &AuxPrecoderSet::matched_filter(&cfg), &h, &cfg)?;
    for (i, r) in sol.objectives.iter().enumerate() {
        println!("iter {i:>3}: R~ = {r:.6} nats ({:.4} bit/s/Hz)", nats_to_bits(*r));
    }
    println!("updates: {}, least-squares fallbacks: {}", sol.iters, sol.lstsq_fallbacks);
    println!("transmit power {:.6} W (budget {} W)", sol.w.total_power(), cfg.power_bs);
    let r = wsr(ops, &ch, &theta, &sol.w, &cfg)?;
    let r_eq = equivalent_rate(ops, &h, &sol.f, &cfg)?;
    println!("WSR of recovered W {r:.12} vs reduced objective {r_eq:.12}");
    println!("complex multiplications: {}", ops.total_cmul());
    Ok(())
}
