//! Velocity decay for both model variants and both kernels.

use csb::experiments::{fig2_grid, run_fig2, velocity_decay_series};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (variant, kind) in fig2_grid() {
        let rec = run_fig2(variant, kind, 42)?;
        println!("{variant:?} / {kind:?}");
        for (t, v_max, scaled) in velocity_decay_series(&rec.trajectory).into_iter().step_by(100) {
            println!("  t = {t:6.1}  max |v| = {v_max:.3e}  t^1.5 max |v| = {scaled:.3e}");
        }
        println!("  velocity integral {:.4}", rec.certificates().velocity_integral);
        for v in rec.verdicts.iter().filter(|v| !v.passed) {
            println!("  failed {}: {} vs {}", v.criterion, v.value, v.limit);
        }
    }
    Ok(())
}
