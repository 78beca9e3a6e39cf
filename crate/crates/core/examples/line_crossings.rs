//! One-dimensional runs: the singular kernel keeps particles apart, the
//! regular one lets them meet.

use csb::diagnostics::{min_distance_over, min_step_distance};
use csb::experiments::run_fig3;
use csb::model::KernelKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for kind in [KernelKind::Singular, KernelKind::Regular] {
        let rec = run_fig3(kind, 42)?;
        let sampled = min_distance_over(&rec.trajectory).expect("samples");
        let stepped = min_step_distance(&rec.trajectory).expect("samples");
        println!("{kind:?}");
        println!("  sampled min gap {:.3e} at t = {:.2}", sampled.global_min, sampled.t_at_min);
        println!("  step-level min gap {:.3e} at t = {:.4}", stepped.global_min, stepped.t_at_min);
        let last = &rec.trajectory.last().state;
        let mut order: Vec<usize> = (0..last.n).collect();
        order.sort_by(|&a, &b| last.x[a].total_cmp(&last.x[b]));
        println!("  final order {order:?}");
    }
    Ok(())
}
