//! Adaptive integration of a head-on pair, compared with a fine RK4 run.

use csb::integrator::{integrate, reference_integrate, StepControl};
use csb::model::{KernelSpec, ModelParams, SimState, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::unit(Variant::Simplified, KernelSpec::singular(1.0)?, 1.0, 2, 1);
    let state = SimState::from_1d(&[-1.5, 1.5], &[2.0, -2.0])?;
    let ctl = StepControl::default();
    let traj = integrate(&state, &params, &ctl, 5.0, 0.5)?;

    let dts: Vec<f64> = traj.steps.iter().map(|s| s.dt).collect();
    let smallest = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = dts.iter().copied().fold(0.0, f64::max);
    println!("{} steps, dt in [{smallest:.3e}, {largest:.3e}]", dts.len());
    for s in &traj.samples {
        println!("t = {:4.1}  gap = {:.6}  e_tot = {:.10}", s.t, s.distance.r_min, s.energy.e_tot);
    }

    let reference = reference_integrate(&state, &params, 5.0, 1e-4)?;
    let last = &traj.last().state;
    let err = last.x.iter().zip(&reference.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max position difference vs RK4 reference: {err:.2e}");
    Ok(())
}
