//! Kernel values and the pairwise forces on a small configuration.

use csb::model::{pairwise_geometry, rhs, KernelSpec, ModelParams, SimState, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let singular = KernelSpec::singular(1.0)?;
    let regular = KernelSpec::regular(1.0)?;
    println!("{:>6} {:>12} {:>12}", "s", "singular", "regular");
    for s in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0] {
        println!("{s:>6} {:>12.6} {:>12.6}", singular.eval(s)?, regular.eval(s)?);
    }

    // three particles on a line, the middle one moving
    let state = SimState::from_1d(&[-3.0, 0.5, 2.0], &[0.0, 1.0, 0.0])?;
    let table = pairwise_geometry(&state);
    for (i, j, r) in table.pairs() {
        println!("r[{i}{j}] = {r}");
    }
    for variant in [Variant::Simplified, Variant::Original] {
        let params = ModelParams::unit(variant, singular, 1.0, 3, 1);
        let d = rhs(&state, &params)?;
        let total: f64 = d.dv.iter().sum();
        println!("{variant:?}: dv = {:?} (sum {total:e})", d.dv);
    }
    Ok(())
}
