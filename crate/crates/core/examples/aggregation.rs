//! Planar aggregation for several flock sizes; pass a seed as the first argument.

use csb::experiments::{run_many, fig1_scenario, FIG1_SIZES};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let runs: Vec<_> = FIG1_SIZES.iter().map(|&n| fig1_scenario(n, seed)).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    for (sc, rec) in runs.iter().zip(run_many(&runs, threads)) {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: {e}", sc.name);
                continue;
            }
        };
        let last = rec.trajectory.last();
        let certs = rec.certificates();
        println!(
            "{:>10}: E {:.4} -> {:.4}, r_max {:.3} (bound {:.3}), residual {:.2e}, {}",
            sc.name,
            rec.trajectory.samples[0].energy.e_tot,
            last.energy.e_tot,
            last.distance.r_max,
            certs.d_m,
            certs.equilibrium_residual,
            if rec.passed() { "ok" } else { "FAILED" }
        );
    }
}
