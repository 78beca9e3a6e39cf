//! Energy envelope for ten planar particles: kinetic energy and the
//! distance from the potential to its equilibrium value.

use csb::experiments::{envelope_max, energy_series, run_fig5};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rec = run_fig5(42)?;
    let traj = &rec.trajectory;
    let series = energy_series(traj);
    let e_pot_final = series.last().expect("samples").2;
    for &(t, e_kin, e_pot, _) in series.iter().step_by(50) {
        println!("t = {t:6.1}  kinetic {e_kin:.3e}  |E_p - E_p(end)| {:.3e}", (e_pot - e_pot_final).abs());
    }
    for (lo, hi) in [(0.0, 10.0), (10.0, 50.0), (50.0, 250.0), (250.0, 500.0)] {
        println!("envelope on [{lo}, {hi}]: {:.3e}", envelope_max(traj, lo, hi));
    }
    Ok(())
}
