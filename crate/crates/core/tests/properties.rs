use csb::diagnostics::{distance_report, energy_report};
use csb::init::{galilean_normalize, sample_initial, InitConfig, Interval};
use csb::model::{pairwise_geometry, rhs, KernelKind, KernelSpec, ModelParams, SimState, Variant};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (1.0..3.0f64).prop_map(|a| KernelSpec::singular(a).unwrap()),
        (0.1..3.0f64).prop_map(|a| KernelSpec::regular(a).unwrap()),
    ]
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Original), Just(Variant::Simplified)]
}

/// Random state with every pair at least 0.1 apart, plus matching params.
fn setup() -> impl Strategy<Value = (SimState, ModelParams)> {
    (2usize..9, 1usize..4, kernel(), variant(), 0.3..3.0f64, any::<u64>())
        .prop_map(|(n, dim, kernel, variant, big_r, seed)| {
            let mut cfg = InitConfig {
                n,
                dim,
                pos_box: Interval::symmetric(5.0),
                vel_box: Interval::symmetric(3.0),
                seed,
            };
            let state = loop {
                let s = sample_initial(&cfg).unwrap();
                if pairwise_geometry(&s).min_pair().unwrap().2 > 0.1 {
                    break s;
                }
                cfg.seed = cfg.seed.wrapping_add(1);
            };
            (state, ModelParams::unit(variant, kernel, big_r, n, dim))
        })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

fn shifted(state: &SimState, dx: &[f64], dv: &[f64]) -> SimState {
    let mut s = state.clone();
    for (k, c) in s.x.iter_mut().enumerate() {
        *c += dx[k % state.dim];
    }
    for (k, c) in s.v.iter_mut().enumerate() {
        *c += dv[k % state.dim];
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forces_cancel_in_sum((state, params) in setup()) {
        let d = rhs(&state, &params).unwrap();
        let scale = max_abs(&d.dv).max(f64::MIN_POSITIVE);
        for k in 0..state.dim {
            let total: f64 = (0..state.n).map(|i| d.dv[i * state.dim + k]).sum();
            prop_assert!(total.abs() <= 1e-12 * scale * state.n as f64, "axis {k}: {total}");
        }
        prop_assert_eq!(&d.dx, &state.v);
    }

    #[test]
    fn kernel_positive_and_non_increasing(k in kernel(), a in 1e-6..50.0f64, b in 1e-6..50.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (f_lo, f_hi) = (k.eval(lo).unwrap(), k.eval(hi).unwrap());
        prop_assert!(f_hi > 0.0);
        prop_assert!(f_hi <= f_lo);
        if k.kind == KernelKind::Regular {
            prop_assert!(f_lo <= 1.0);
        }
    }

    #[test]
    fn zero_projection_coefficient_gives_simplified((state, params) in setup()) {
        let mut original = params;
        original.variant = Variant::Original;
        original.k_tilde = 0.0;
        let mut simplified = params;
        simplified.variant = Variant::Simplified;
        let a = rhs(&state, &original).unwrap();
        let b = rhs(&state, &simplified).unwrap();
        let scale = max_abs(&b.dv).max(1.0);
        for (p, q) in a.dv.iter().zip(&b.dv) {
            prop_assert!((p - q).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn translation_and_boost_invariance(
        (state, params) in setup(),
        shift in prop::collection::vec(-10.0..10.0f64, 3),
        boost in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        let base = rhs(&state, &params).unwrap();
        let moved = rhs(&shifted(&state, &shift, &boost), &params).unwrap();
        let scale = max_abs(&base.dv).max(1.0);
        for (p, q) in base.dv.iter().zip(&moved.dv) {
            // relative coordinates change by rounding only
            prop_assert!((p - q).abs() <= 1e-9 * scale, "{p} vs {q}");
        }
        for (k, (p, q)) in base.dx.iter().zip(&moved.dx).enumerate() {
            prop_assert!((q - p - boost[k % state.dim]).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn relabeling_permutes_forces((state, params) in setup(), rot in 1usize..8) {
        let n = state.n;
        let dim = state.dim;
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let mut x = vec![0.0; n * dim];
        let mut v = vec![0.0; n * dim];
        for (new, &old) in perm.iter().enumerate() {
            x[new * dim..(new + 1) * dim].copy_from_slice(state.position(old));
            v[new * dim..(new + 1) * dim].copy_from_slice(state.velocity(old));
        }
        let permuted = SimState::new(0.0, n, dim, x, v).unwrap();
        let a = rhs(&state, &params).unwrap();
        let b = rhs(&permuted, &params).unwrap();
        let scale = max_abs(&a.dv).max(1.0);
        for (new, &old) in perm.iter().enumerate() {
            for k in 0..dim {
                let (p, q) = (a.dv[old * dim + k], b.dv[new * dim + k]);
                prop_assert!((p - q).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn normalization_centers_sums((state, _) in setup()) {
        let c = galilean_normalize(&state);
        let tol = 1e-13 * state.n as f64 * (1.0 + max_abs(&state.x).max(max_abs(&state.v)));
        prop_assert!(c.position_sum().iter().all(|s| s.abs() <= tol));
        prop_assert!(c.velocity_sum().iter().all(|s| s.abs() <= tol));
        // relative geometry unchanged
        let before = pairwise_geometry(&state);
        let after = pairwise_geometry(&c);
        for (i, j, r) in before.pairs() {
            prop_assert!((after.r(i, j) - r).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn reports_are_consistent((state, params) in setup()) {
        let e = energy_report(&state, &params).unwrap();
        prop_assert!(e.e_kin >= 0.0 && e.e_pot > 0.0 && e.dissipation >= 0.0);
        prop_assert!((e.e_tot - e.e_kin - e.e_pot).abs() <= 1e-12 * e.e_tot);
        let d = distance_report(&state);
        prop_assert!(d.r_min <= d.r_max && d.ratio >= 1.0);
        let table = pairwise_geometry(&state);
        let ordered: f64 = table.pairs().map(|(_, _, r)| 2.0 * r * r).sum();
        prop_assert!((d.agg_r * d.agg_r - ordered).abs() <= 1e-10 * ordered);
    }
}
