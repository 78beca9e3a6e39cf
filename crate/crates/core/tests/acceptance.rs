#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance gate. Runs every study at its documented seed and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::time::Instant;

use csb::diagnostics::{check_dissipation_identity, distance_bound, min_distance_over};
use csb::experiments::{
    fig1_scenario, fig2_grid, fig2_scenario, fig3_scenario, fig5_scenario, run_many, smoke_sweep, suite_verdicts,
    RunRecord, DEFAULT_SEED, FIG1_SIZES,
};
use csb::init::{assert_noncollisional, galilean_normalize, sample_initial, seeded_rng, unit_f64, InitConfig, Interval};
use csb::integrator::{integrate, reference_integrate, StepControl};
use csb::model::{pairwise_geometry, KernelKind, KernelSpec, ModelParams, SimState, Variant};
use rand_core::RngCore;

struct Runs {
    fig1: Vec<RunRecord>,
    fig2: Vec<RunRecord>,
    fig3: Vec<RunRecord>,
    fig5: RunRecord,
    smoke: Vec<RunRecord>,
}

impl Runs {
    fn all(&self) -> impl Iterator<Item = &RunRecord> {
        self.fig1
            .iter()
            .chain(&self.fig2)
            .chain(&self.fig3)
            .chain(std::iter::once(&self.fig5))
            .chain(&self.smoke)
    }
}

fn run_suite() -> Runs {
    let seed = DEFAULT_SEED;
    let mut scenarios: Vec<_> = FIG1_SIZES.iter().map(|&n| fig1_scenario(n, seed)).collect();
    scenarios.extend(fig2_grid().iter().map(|&(v, k)| fig2_scenario(v, k, seed)));
    scenarios.push(fig3_scenario(KernelKind::Singular, seed));
    scenarios.push(fig3_scenario(KernelKind::Regular, seed));
    scenarios.push(fig5_scenario(seed));
    scenarios.extend(smoke_sweep(seed));
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut out = run_many(&scenarios, threads)
        .into_iter()
        .map(|r| r.expect("valid scenario"));
    let mut take = |k: usize| out.by_ref().take(k).collect::<Vec<_>>();
    let fig1 = take(4);
    let fig2 = take(4);
    let fig3 = take(2);
    let fig5 = take(1).pop().unwrap();
    let smoke = take(10);
    Runs {
        fig1,
        fig2,
        fig3,
        fig5,
        smoke,
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn random_state(rng: &mut impl RngCore, n: usize, dim: usize, min_gap: f64) -> SimState {
    loop {
        let mut draw = |half: f64| -half + 2.0 * half * unit_f64(rng);
        let x: Vec<f64> = (0..n * dim).map(|_| draw(5.0)).collect();
        let v: Vec<f64> = (0..n * dim).map(|_| draw(2.0)).collect();
        let s = SimState::new(0.0, n, dim, x, v).unwrap();
        if pairwise_geometry(&s).min_pair().unwrap().2 > min_gap {
            return s;
        }
    }
}

fn dissipation_identity() -> Outcome {
    let mut rng = seeded_rng(2024);
    let h = 1e-4;
    let mut worst_equality = 0.0f64;
    let mut worst_inequality = f64::NEG_INFINITY;
    let mut failures = 0;
    for k in 0..100 {
        let n = 2 + (rng.next_u64() % 9) as usize;
        let dim = 1 + (rng.next_u64() % 3) as usize;
        let variant = if k % 2 == 0 { Variant::Simplified } else { Variant::Original };
        let kernel = if rng.next_u64().is_multiple_of(2) {
            KernelSpec::singular(1.0 + 2.0 * unit_f64(&mut rng)).unwrap()
        } else {
            KernelSpec::regular(0.2 + 2.8 * unit_f64(&mut rng)).unwrap()
        };
        let mut params = ModelParams::unit(variant, kernel, 0.5 + 2.5 * unit_f64(&mut rng), n, dim);
        params.k1 = 0.5 + 1.5 * unit_f64(&mut rng);
        params.k2 = 0.5 + 1.5 * unit_f64(&mut rng);
        params.k_tilde = 0.5 + 1.5 * unit_f64(&mut rng);
        let state = random_state(&mut rng, n, dim, 0.25);
        let c = check_dissipation_identity(&state, &params, h).unwrap();
        let tol = 1e-6 * c.rhs.abs().max(1.0);
        let ok = match variant {
            Variant::Simplified => {
                worst_equality = worst_equality.max(c.gap.abs() / tol);
                c.gap.abs() <= tol
            }
            Variant::Original => {
                worst_inequality = worst_inequality.max(c.gap / tol);
                c.lhs <= c.rhs + tol
            }
        };
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!(
            "100 states, {failures} failures; worst |gap|/tol {worst_equality:.2e} (simplified), worst gap/tol {worst_inequality:.2e} (original)"
        ),
    )
}

fn energy_monotone(runs: &Runs) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for r in &runs.fig2 {
        let s = &r.trajectory.samples;
        let slack = 1e-8 * s[0].energy.e_tot.max(1.0);
        let rise = s
            .windows(2)
            .map(|w| w[1].energy.e_tot - w[0].energy.e_tot)
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= rise <= slack && r.trajectory.last().t == 500.0;
        worst = worst.max(rise / slack);
    }
    outcome(ok, format!("4 variants to t=500; worst rise/slack {worst:.3e}"))
}

fn distance_bound_holds(runs: &Runs) -> Outcome {
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut count = 0;
    for r in runs.all() {
        let s = &r.trajectory.samples;
        let d_m = distance_bound(s[0].energy.e_tot, &r.scenario.params);
        for sample in s {
            let r_max = pairwise_geometry(&sample.state).max_distance();
            worst = worst.max(r_max / d_m);
            violations += usize::from(!(r_max < d_m));
        }
        count += 1;
    }
    outcome(violations == 0, format!("{count} runs; {violations} violations; worst r_max/d_M {worst:.3}"))
}

fn momentum(runs: &Runs) -> Outcome {
    let mut worst = 0.0f64;
    for r in runs.all() {
        let s0 = &r.trajectory.samples[0].state;
        let scale = (0..s0.n)
            .map(|i| norm(s0.position(i)).max(norm(s0.velocity(i))))
            .fold(1.0, f64::max);
        let root_n = (s0.n as f64).sqrt();
        for s in &r.trajectory.samples {
            let mut px = vec![0.0; s0.dim];
            let mut pv = vec![0.0; s0.dim];
            for i in 0..s0.n {
                for k in 0..s0.dim {
                    px[k] += s.state.position(i)[k];
                    pv[k] += s.state.velocity(i)[k];
                }
            }
            let allowed = 1e-9 * root_n * scale * (1.0 + s.t);
            worst = worst.max(norm(&px).max(norm(&pv)) / allowed);
        }
    }
    outcome(worst <= 1.0, format!("all runs; worst drift/allowance {worst:.3e}"))
}

fn oracle_equivalence() -> Outcome {
    let init = InitConfig {
        n: 3,
        dim: 2,
        pos_box: Interval::symmetric(5.0),
        vel_box: Interval::symmetric(2.0),
        seed: DEFAULT_SEED,
    };
    let state = galilean_normalize(&sample_initial(&init).unwrap());
    let params = ModelParams::unit(Variant::Simplified, KernelSpec::regular(1.0).unwrap(), 2.0, 3, 2);
    let ctl = StepControl {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        ..StepControl::default()
    };
    let adaptive = integrate(&state, &params, &ctl, 1.0, 0.25).unwrap();
    let mut max_err = 0.0f64;
    for s in &adaptive.samples[1..] {
        let reference = reference_integrate(&state, &params, s.t, 1e-5).unwrap();
        for (a, b) in s.state.x.iter().zip(&reference.x) {
            max_err = max_err.max((a - b).abs());
        }
    }
    let at = |dt: f64| reference_integrate(&state, &params, 1.0, dt).unwrap().x;
    let (c, m, f) = (at(0.04), at(0.02), at(0.01));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let order = (diff(&c, &m) / diff(&m, &f)).log2();
    outcome(
        max_err <= 1e-6 && order >= 3.8,
        format!("max position error {max_err:.2e}; RK4 observed order {order:.2}"),
    )
}

fn containment(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &runs.fig1 {
        let last = r.trajectory.last();
        let big_r = r.scenario.params.big_r;
        let radius = (0..last.state.n).map(|i| norm(last.state.position(i))).fold(0.0, f64::max);
        let spread = pairwise_geometry(&last.state).max_distance();
        ok &= last.t == 500.0 && radius <= 2.0 * big_r * 1.05 && spread <= 4.0 * big_r * 1.05;
        parts.push(format!("N={} |x|max {radius:.3} r_max {spread:.3}", last.state.n));
    }
    outcome(ok, format!("{} (limits 4.2 / 8.4)", parts.join("; ")))
}

fn min_distance_dichotomy(runs: &Runs) -> Outcome {
    let singular = &runs.fig3[0];
    let regular = &runs.fig3[1];
    let s_min = min_distance_over(&singular.trajectory).unwrap();
    let r_min = min_distance_over(&regular.trajectory).unwrap();
    let singular_ok = s_min.global_min > 0.0 && !singular.aborted() && singular.trajectory.last().t == singular.scenario.t_end;
    let crossing = r_min.global_min < 1e-3;
    let mut detail = format!(
        "singular global_min {:.3e} at t={:.2}; regular sampled min {:.3e} at t={:.2}",
        s_min.global_min, s_min.t_at_min, r_min.global_min, r_min.t_at_min
    );
    let mut ok = singular_ok && crossing;
    if singular_ok && !crossing {
        let views: Vec<_> = runs.smoke.iter().map(|r| (&r.scenario.params, &r.trajectory)).collect();
        let any = suite_verdicts("smoke", &views)[0].passed;
        detail.push_str(&format!("; 5-seed sweep crossing: {any}"));
        ok = any;
    }
    outcome(ok, detail)
}

fn kinetic_decay(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &runs.fig2 {
        let s = &r.trajectory.samples;
        let ratio = r.trajectory.last().energy.e_kin / s[0].energy.e_kin;
        let p = &r.scenario.params;
        let e0 = s[0].energy.e_tot;
        let psi_m = p.kernel.eval(distance_bound(e0, p)).unwrap();
        // trapezoid of Σ|v_i|² = 2 e_kin
        let integral: f64 = s
            .windows(2)
            .map(|w| (w[1].t - w[0].t) * (w[0].energy.e_kin + w[1].energy.e_kin))
            .sum();
        let limit = e0 / (p.k1 * psi_m) * 1.01;
        ok &= ratio <= 1e-3 && integral <= limit;
        parts.push(format!("{} e_kin ratio {ratio:.1e}, ∫|v|² {integral:.1} <= {limit:.1}", r.scenario.name));
    }
    outcome(ok, parts.join("; "))
}

fn envelope(runs: &Runs) -> Outcome {
    let window = |lo: f64, hi: f64| {
        runs.fig5
            .trajectory
            .samples
            .iter()
            .filter(|s| s.t >= lo && s.t <= hi)
            .map(|s| s.t.powf(1.5) * s.distance.v_max)
            .fold(0.0, f64::max)
    };
    let (early, late) = (window(10.0, 50.0), window(250.0, 500.0));
    outcome(
        late <= early && !runs.fig5.aborted(),
        format!("max t^1.5 v_max: [10,50] {early:.3e}, [250,500] {late:.3e}"),
    )
}

fn no_collapse_after_threshold(runs: &Runs) -> Outcome {
    let mut crossed = 0;
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for r in runs.all() {
        let p = &r.scenario.params;
        let threshold = p.k2 * p.n as f64 * p.big_r * p.big_r / 2.0;
        let s = &r.trajectory.samples;
        if let Some(k) = s.iter().position(|x| x.energy.e_tot < threshold) {
            crossed += 1;
            let later = s[k..].iter().map(|x| x.distance.r_min).fold(f64::INFINITY, f64::min);
            worst = worst.min(later);
            ok &= later >= 1e-6 && !r.aborted();
        }
    }
    outcome(ok, format!("{crossed} runs crossed the threshold; smallest later sampled r_min {worst:.3e}"))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("energy dissipation identity", dissipation_identity()),
        ("adaptive vs fixed-step reference", oracle_equivalence()),
    ];
    let suite_start = Instant::now();
    let runs = run_suite();
    let suite_secs = suite_start.elapsed().as_secs_f64();
    for r in runs.all() {
        assert_noncollisional(&r.trajectory.samples[0].state, 0.0).expect("non-collisional start");
    }
    results.extend([
        ("energy monotone along trajectories", energy_monotone(&runs)),
        ("uniform distance bound", distance_bound_holds(&runs)),
        ("momentum conservation", momentum(&runs)),
        ("containment at t=500", containment(&runs)),
        ("singular vs regular minimum distance", min_distance_dichotomy(&runs)),
        ("kinetic decay and velocity integral", kinetic_decay(&runs)),
        ("velocity envelope decay", envelope(&runs)),
        ("no collapse below energy threshold", no_collapse_after_threshold(&runs)),
    ]);
    // print in the documented criterion order
    let order = [0, 2, 3, 4, 1, 5, 6, 7, 8, 9];
    let mut failed = 0;
    for (k, &idx) in order.iter().enumerate() {
        let (name, o) = &results[idx];
        let status = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("{status} [{:>2}] {name}: {}", k + 1, o.detail);
    }
    println!(
        "{} of {} criteria passed (scenario runs {suite_secs:.1}s, total {:.1}s)",
        order.len() - failed,
        order.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
