//! Draws one channel realization at desk scale, reports link strengths, and
//! round-trips it through the replay file format.

use ris_wsr::channel::{self, io, path_loss_db};
use ris_wsr::model::PhaseVector;
use ris_wsr::{ChannelSet, GeometryConfig, OpCounter, SystemConfig};

fn main() -> ris_wsr::Result<()> {
    let cfg = SystemConfig::desk();
    let geo = GeometryConfig::default();
    let ch = ChannelSet::random_realization(&cfg, &geo, 42)?;

    let bs_ris = 200.0;
    println!("BS-RIS path loss at {bs_ris} m: {:.1} dB (LoS)", path_loss_db(bs_ris, true)?);
    println!("BS-user path loss at 202 m: {:.1} dB (NLoS)", path_loss_db(202.0, false)?);

    let mean_sq = |m: &ris_wsr::CMat| m.norm_squared() / (m.nrows() * m.ncols()) as f64;
    println!("mean |G|^2      = {:.3e}", mean_sq(&ch.bs_ris));
    for k in 0..cfg.n_users {
        println!(
            "user {k}: mean |U|^2 = {:.3e}, mean |D|^2 = {:.3e}",
            mean_sq(&ch.ris_user[k]),
            mean_sq(&ch.direct[k])
        );
    }

    let ops = &mut OpCounter::new();
    let h = channel::composite_channel(ops, &ch, &PhaseVector::ones(cfg.n_ris), 0);
    println!("composite H_0 at theta = 1: {}x{}, {} complex multiplications", h.nrows(), h.ncols(), ops.total_cmul());

    let path = std::env::temp_dir().join("ris_wsr_example_channel.bin");
    io::save(&path, &ch)?;
    let back = io::load(&path)?;
    println!("replay file {} reloads identically: {}", path.display(), back == ch);
    Ok(())
}
