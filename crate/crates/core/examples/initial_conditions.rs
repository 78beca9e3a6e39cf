//! Seeded sampling, Galilean normalization and the collision check.

use csb::init::{assert_noncollisional, galilean_normalize, sample_initial, InitConfig, Interval};
use csb::model::{pairwise_geometry, DEFAULT_R_FLOOR};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = InitConfig {
        n: 6,
        dim: 2,
        pos_box: Interval::symmetric(5.0),
        vel_box: Interval::symmetric(2.0),
        seed: 42,
    };
    let raw = sample_initial(&cfg)?;
    let state = galilean_normalize(&raw);
    println!("position sum before {:?}, after {:?}", raw.position_sum(), state.position_sum());
    println!("velocity sum before {:?}, after {:?}", raw.velocity_sum(), state.velocity_sum());
    for i in 0..state.n {
        println!("x{i} = {:?}  v{i} = {:?}", state.position(i), state.velocity(i));
    }
    let (i, j, r) = pairwise_geometry(&state).min_pair().expect("n >= 2");
    println!("closest pair ({i}, {j}) at {r:.4}");
    match assert_noncollisional(&state, DEFAULT_R_FLOOR) {
        Ok(()) => println!("no collisions"),
        Err(v) => println!("collision: {v:?}"),
    }

    // the same seed always gives the same state
    assert_eq!(sample_initial(&cfg)?, raw);
    Ok(())
}
