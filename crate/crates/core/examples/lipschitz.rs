//! Estimates the gradient Lipschitz constants of the original and reduced
//! objectives for single-antenna users.

use ris_wsr::harness::{experiment_lipschitz, LipschitzSpec};

fn main() -> ris_wsr::Result<()> {
    let spec = LipschitzSpec {
        n_realizations: 10,
        n_pairs: 2000,
        ..LipschitzSpec::desk()
    };
    let rep = experiment_lipschitz(&spec)?;
    for r in &rep.rows {
        println!("{:<8} L(R) {:.4e}  L(R~) {:.4e}  ratio {:.3}", r.row, r.l_original, r.l_equivalent, r.ratio);
    }
    println!("median ratio {:.3}", rep.median_ratio);
    Ok(())
}
