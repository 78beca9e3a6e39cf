//! Energy, dissipation and the bounds derived from the initial energy.

use csb::diagnostics::{
    certificates, check_dissipation_identity, collapse_threshold, distance_bound, energy_report,
};
use csb::init::{galilean_normalize, sample_initial, InitConfig, Interval};
use csb::integrator::{integrate, StepControl};
use csb::model::{KernelSpec, ModelParams, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 8;
    let state = galilean_normalize(&sample_initial(&InitConfig {
        n,
        dim: 2,
        pos_box: Interval::symmetric(5.0),
        vel_box: Interval::symmetric(5.0),
        seed: 3,
    })?);

    for variant in [Variant::Simplified, Variant::Original] {
        let params = ModelParams::unit(variant, KernelSpec::singular(1.0)?, 2.0, n, 2);
        let e = energy_report(&state, &params)?;
        println!("{variant:?}");
        println!("  E = {:.6} (kinetic {:.6}, potential {:.6})", e.e_tot, e.e_kin, e.e_pot);
        println!("  distance bound {:.4}, collapse threshold {:.4}", distance_bound(e.e_tot, &params), collapse_threshold(&params));
        for h in [1e-2, 5e-3] {
            let c = check_dissipation_identity(&state, &params, h)?;
            println!("  h = {h:.0e}: dE/dt ~ {:.10}  -P = {:.10}  gap {:.2e}", c.lhs, c.rhs, c.gap);
        }

        let traj = integrate(&state, &params, &StepControl::default(), 20.0, 1.0)?;
        let certs = certificates(&traj.samples, &params).expect("non-empty");
        println!("  after t = 20: E = {:.6}, velocity integral {:.4}, threshold crossed at {:?}",
            traj.last().energy.e_tot, certs.velocity_integral, certs.threshold_crossing_time);
    }
    Ok(())
}
