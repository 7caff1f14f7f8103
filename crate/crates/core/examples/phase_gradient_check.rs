//! Compares both phase gradients with central finite differences.

use ris_wsr::gradcheck::{check_equivalent_gradient, check_wsr_gradient, DEFAULT_DELTA};
use ris_wsr::SystemConfig;

fn main() -> ris_wsr::Result<()> {
    let mimo = SystemConfig::desk();
    let miso = SystemConfig::miso(16, 32, 2);
    for seed in 0..5 {
        let a = check_wsr_gradient(&mimo, seed, 16, DEFAULT_DELTA)?;
        let b = check_equivalent_gradient(&miso, seed, 16, DEFAULT_DELTA)?;
        println!(
            "seed {seed}: WSR gradient rel err {:.2e} (|grad| max {:.2e}), reduced gradient rel err {:.2e} (|grad| max {:.2e})",
            a.max_rel_err, a.grad_scale, b.max_rel_err, b.grad_scale
        );
    }
    Ok(())
}
