//! Energies, distance statistics and the runtime certificates evaluated
//! along trajectories.
//!
//! Energies follow the double-sum convention over all ordered index pairs
//! `(i, j)`, diagonal included:
//!
//! ```text
//! E_k = ½ Σ_i |v_i|²
//! E_p = K2/(8N) Σ_{i,j} (r_ij - 2R)²
//! P   = K1/(2N) Σ_{i,j} ψ(r_ij) |v_ij|²      (dissipation rate)
//! ```
//!
//! With this convention a totally collapsed configuration has
//! `E_p = K2 N R² / 2`, which is the collapse threshold below which no
//! collision can occur.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::integrator::{rk4_advance, Sample, Trajectory};
use crate::model::{norm, pairwise_geometry, ModelParams, SimState, DEFAULT_R_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_tot: f64,
    pub dissipation: f64,
}

pub fn energy_report(state: &SimState, params: &ModelParams) -> Result<EnergyReport, ModelError> {
    energy_report_with_floor(state, params, DEFAULT_R_FLOOR)
}

pub fn energy_report_with_floor(
    state: &SimState,
    params: &ModelParams,
    r_floor: f64,
) -> Result<EnergyReport, ModelError> {
    state.check_shape(params)?;
    let e_kin = 0.5 * state.v.iter().map(|c| c * c).sum::<f64>();
    let pairs = pairwise_geometry(state);
    let n = state.n as f64;
    let two_r = 2.0 * params.big_r;
    // diagonal terms: r_ii = 0 contributes (2R)² each
    let mut pot_sum = n * two_r * two_r;
    let mut diss_sum = 0.0;
    for (i, j, r) in pairs.pairs() {
        pot_sum += 2.0 * (r - two_r) * (r - two_r);
        if params.kernel.is_singular() && r <= r_floor {
            return Err(ModelError::Singularity { i, j, r });
        }
        let psi = params.kernel.eval_unchecked(r);
        let vv: f64 = pairs.v_rel(i, j).iter().map(|c| c * c).sum();
        diss_sum += 2.0 * psi * vv;
    }
    let e_pot = params.k2 / (8.0 * n) * pot_sum;
    Ok(EnergyReport {
        e_kin,
        e_pot,
        e_tot: e_kin + e_pot,
        dissipation: params.k1 / (2.0 * n) * diss_sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub r_min: f64,
    pub r_max: f64,
    /// `r_max / r_min`, the observed comparability ratio.
    pub ratio: f64,
    /// `sqrt(Σ_{i,j} |x_i - x_j|²)` over all ordered pairs.
    pub agg_r: f64,
    pub v_max: f64,
    pub max_radius: f64,
}

pub fn distance_report(state: &SimState) -> DistanceReport {
    let pairs = pairwise_geometry(state);
    let mut r_min = f64::INFINITY;
    let mut r_max = 0.0f64;
    let mut sq = 0.0;
    for (_, _, r) in pairs.pairs() {
        r_min = r_min.min(r);
        r_max = r_max.max(r);
        sq += 2.0 * r * r;
    }
    let v_max = (0..state.n).map(|i| norm(state.velocity(i))).fold(0.0, f64::max);
    let max_radius = (0..state.n).map(|i| norm(state.position(i))).fold(0.0, f64::max);
    DistanceReport {
        r_min,
        r_max,
        ratio: r_max / r_min,
        agg_r: sq.sqrt(),
        v_max,
        max_radius,
    }
}

/// Uniform bound on pairwise distances, `2R + sqrt(8 N E(0) / K2)`.
pub fn distance_bound(e0: f64, params: &ModelParams) -> f64 {
    2.0 * params.big_r + (8.0 * params.n as f64 * e0.max(0.0) / params.k2).sqrt()
}

/// Energy of a totally collapsed configuration, `K2 N R² / 2`.
pub fn collapse_threshold(params: &ModelParams) -> f64 {
    0.5 * params.k2 * params.n as f64 * params.big_r * params.big_r
}

/// `max_i |Σ_j [x_j - x_i - (2R / r_ij)(x_j - x_i)]|`, zero at a bonded
/// equilibrium. Coincident pairs are skipped.
pub fn equilibrium_residual(state: &SimState, params: &ModelParams) -> f64 {
    let pairs = pairwise_geometry(state);
    let two_r = 2.0 * params.big_r;
    let mut acc = vec![0.0; state.dim];
    let mut worst = 0.0f64;
    for i in 0..state.n {
        acc.iter_mut().for_each(|c| *c = 0.0);
        for j in 0..state.n {
            let r = pairs.r(i, j);
            if j == i || r == 0.0 {
                continue;
            }
            let scale = 1.0 - two_r / r;
            // x_j - x_i = -x_ij
            for (a, c) in acc.iter_mut().zip(pairs.x_rel(i, j)) {
                *a -= scale * c;
            }
        }
        worst = worst.max(norm(&acc));
    }
    worst
}

/// Quantities derived from the energy estimate, accumulated over a
/// trajectory prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `2R + sqrt(8 N E(0) / K2)`.
    pub d_m: f64,
    /// `ψ(d_m)`.
    pub psi_m: f64,
    /// `K2 N R² / 2`.
    pub collapse_threshold: f64,
    /// Trapezoid-rule `∫ Σ_i |v_i|² dt` over the samples.
    pub velocity_integral: f64,
    /// First sample time with `e_tot < collapse_threshold`.
    pub threshold_crossing_time: Option<f64>,
    /// Residual of the equilibrium relation at the latest sample.
    pub equilibrium_residual: f64,
    /// Running maximum of `r_max / r_min`.
    pub max_ratio: f64,
}

/// Single-writer fold producing [`Certificates`] sample by sample.
#[derive(Debug, Clone)]
pub struct CertificateTracker {
    params: ModelParams,
    certs: Option<Certificates>,
    last: Option<(f64, f64)>,
}

impl CertificateTracker {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            certs: None,
            last: None,
        }
    }

    pub fn push(&mut self, sample: &Sample) {
        let speed_sq = 2.0 * sample.energy.e_kin;
        let certs = self.certs.get_or_insert_with(|| {
            let d_m = distance_bound(sample.energy.e_tot, &self.params);
            let psi_m = if d_m.is_finite() {
                self.params.kernel.eval_unchecked(d_m)
            } else {
                0.0
            };
            Certificates {
                d_m,
                psi_m,
                collapse_threshold: collapse_threshold(&self.params),
                velocity_integral: 0.0,
                threshold_crossing_time: None,
                equilibrium_residual: 0.0,
                max_ratio: 0.0,
            }
        });
        if let Some((t0, q0)) = self.last {
            certs.velocity_integral += 0.5 * (sample.t - t0) * (q0 + speed_sq);
        }
        self.last = Some((sample.t, speed_sq));
        if certs.threshold_crossing_time.is_none() && sample.energy.e_tot < certs.collapse_threshold {
            certs.threshold_crossing_time = Some(sample.t);
        }
        certs.equilibrium_residual = equilibrium_residual(&sample.state, &self.params);
        certs.max_ratio = certs.max_ratio.max(sample.distance.ratio);
    }

    pub fn finish(self) -> Option<Certificates> {
        self.certs
    }
}

/// Folds [`CertificateTracker`] over `samples`; `None` if there are none.
pub fn certificates(samples: &[Sample], params: &ModelParams) -> Option<Certificates> {
    let mut tracker = CertificateTracker::new(*params);
    samples.iter().for_each(|s| tracker.push(s));
    tracker.finish()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationCheck {
    /// Five-point difference
    /// `(E(t-2h) - 8E(t-h) + 8E(t+h) - E(t+2h)) / 12h`.
    pub lhs: f64,
    /// `-P(t)`.
    pub rhs: f64,
    /// `lhs - rhs`. Zero to O(h⁴) for the simplified variant, non-positive
    /// to O(h⁴) for the original one.
    pub gap: f64,
}

/// Substeps of the RK4 micro-integration on each side of the difference.
const MICRO_STEPS: usize = 16;

pub fn check_dissipation_identity(
    state: &SimState,
    params: &ModelParams,
    h: f64,
) -> Result<DissipationCheck, ModelError> {
    let now = energy_report(state, params)?;
    let energy_at = |span: f64, steps: usize| -> Result<f64, ModelError> {
        let s = rk4_advance(state, params, span, steps, DEFAULT_R_FLOOR)?;
        Ok(energy_report(&s, params)?.e_tot)
    };
    let (m2, m1) = (energy_at(-2.0 * h, 2 * MICRO_STEPS)?, energy_at(-h, MICRO_STEPS)?);
    let (p1, p2) = (energy_at(h, MICRO_STEPS)?, energy_at(2.0 * h, 2 * MICRO_STEPS)?);
    let lhs = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let rhs = -now.dissipation;
    Ok(DissipationCheck {
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContainmentReport {
    /// Particles with `|x_i| > 2R + slack`.
    pub position_violations: Vec<usize>,
    /// Pairs with `r_ij > 4R + 2 slack`.
    pub pair_violations: Vec<(usize, usize, f64)>,
}

impl ContainmentReport {
    pub fn is_ok(&self) -> bool {
        self.position_violations.is_empty() && self.pair_violations.is_empty()
    }
}

pub fn containment_check(state: &SimState, params: &ModelParams, slack: f64) -> ContainmentReport {
    let radius = 2.0 * params.big_r + slack;
    let diameter = 4.0 * params.big_r + 2.0 * slack;
    let position_violations = (0..state.n)
        .filter(|&i| norm(state.position(i)) > radius)
        .collect();
    let pair_violations = pairwise_geometry(state)
        .pairs()
        .filter(|p| p.2 > diameter)
        .collect();
    ContainmentReport {
        position_violations,
        pair_violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinDistance {
    pub global_min: f64,
    pub t_at_min: f64,
}

/// Smallest sampled pairwise distance and the earliest time it occurs.
pub fn min_distance_over(traj: &Trajectory) -> Option<MinDistance> {
    earliest_min(traj.samples.iter().map(|s| (s.distance.r_min, s.t)))
}

/// Like [`min_distance_over`] but over every accepted step, which resolves
/// close passes falling between samples.
pub fn min_step_distance(traj: &Trajectory) -> Option<MinDistance> {
    earliest_min(
        traj.samples
            .iter()
            .map(|s| (s.distance.r_min, s.t))
            .chain(traj.steps.iter().map(|s| (s.r_min, s.t))),
    )
}

fn earliest_min(points: impl Iterator<Item = (f64, f64)>) -> Option<MinDistance> {
    points.fold(None, |best: Option<MinDistance>, (r, t)| match best {
        Some(b) if b.global_min < r || (b.global_min == r && b.t_at_min <= t) => Some(b),
        _ => Some(MinDistance {
            global_min: r,
            t_at_min: t,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelSpec, Variant};

    fn p2(big_r: f64, kernel: KernelSpec) -> ModelParams {
        ModelParams::unit(Variant::Simplified, kernel, big_r, 2, 1)
    }

    #[test]
    fn kinetic_energy() {
        let s = SimState::from_1d(&[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let e = energy_report(&s, &p2(0.5, KernelSpec::singular(1.0).unwrap())).unwrap();
        assert_eq!(e.e_kin, 1.0);
    }

    #[test]
    fn potential_energy_includes_diagonal() {
        // (1/16)[2·(2-1)² + 2·(0-1)²]
        let s = SimState::from_1d(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        let e = energy_report(&s, &p2(0.5, KernelSpec::singular(1.0).unwrap())).unwrap();
        assert_eq!(e.e_pot, 0.25);
        assert_eq!(e.e_tot, 0.25);
        assert_eq!(e.dissipation, 0.0);
    }

    #[test]
    fn collapsed_configuration_sits_at_threshold() {
        let kernel = KernelSpec::regular(1.0).unwrap();
        let n = 5;
        let s = SimState::new(0.0, n, 2, vec![0.25; 2 * n], vec![0.0; 2 * n]).unwrap();
        let mut p = ModelParams::unit(Variant::Simplified, kernel, 1.5, n, 2);
        p.k2 = 2.0;
        let e = energy_report(&s, &p).unwrap();
        assert!((e.e_pot - collapse_threshold(&p)).abs() < 1e-12);
        assert_eq!(collapse_threshold(&p), 0.5 * 2.0 * 5.0 * 2.25);
    }

    #[test]
    fn dissipation_matches_hand_value() {
        // P = (1/(2·2))·2·ψ(2)·|2|² = 0.5·0.5·4 = 1
        let s = SimState::from_1d(&[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let e = energy_report(&s, &p2(1.0, KernelSpec::singular(1.0).unwrap())).unwrap();
        assert_eq!(e.dissipation, 1.0);
    }

    #[test]
    fn energy_singularity() {
        let s = SimState::from_1d(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(energy_report(&s, &p2(1.0, KernelSpec::singular(1.0).unwrap())).is_err());
        assert!(energy_report(&s, &p2(1.0, KernelSpec::regular(1.0).unwrap())).is_ok());
    }

    #[test]
    fn distance_report_values() {
        let s = SimState::from_1d(&[1.0, -1.0], &[3.0, -4.0]).unwrap();
        let d = distance_report(&s);
        assert_eq!(d.agg_r, 8f64.sqrt());
        assert_eq!(d.v_max, 4.0);
        assert_eq!(d.max_radius, 1.0);
        let s = SimState::from_1d(&[0.0, 1.0, 2.0], &[0.0; 3]).unwrap();
        let d = distance_report(&s);
        assert_eq!((d.r_min, d.r_max, d.ratio), (1.0, 2.0, 2.0));
    }

    #[test]
    fn bound_formula() {
        let p = ModelParams::unit(Variant::Simplified, KernelSpec::singular(1.0).unwrap(), 0.5, 2, 1);
        assert_eq!(distance_bound(0.0, &p), 1.0);
        let d = distance_bound(1.125, &p);
        assert!((d - (1.0 + 18f64.sqrt())).abs() < 1e-12);
        assert!((d - 5.2426).abs() < 1e-4);
    }

    #[test]
    fn equilibrium_residual_zero_at_bonded_pair() {
        let s = SimState::from_1d(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        let p = p2(1.0, KernelSpec::singular(1.0).unwrap());
        assert_eq!(equilibrium_residual(&s, &p), 0.0);
        // r = 4, 2R = 2: |(x_2 - x_1)(1 - 2/4)| = 4·0.5
        let s = SimState::from_1d(&[2.0, -2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(equilibrium_residual(&s, &p), 2.0);
    }

    #[test]
    fn containment_cases() {
        let p = ModelParams::unit(Variant::Simplified, KernelSpec::singular(1.0).unwrap(), 1.0, 2, 2);
        let single = SimState::new(0.0, 1, 2, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(containment_check(&single, &p, 0.0).is_ok());

        let s = SimState::new(0.0, 3, 2, vec![3.0, 0.0, -1.0, 0.0, -2.0, 0.0], vec![0.0; 6]).unwrap();
        let report = containment_check(&s, &p, 0.5);
        assert_eq!(report.position_violations, vec![0]);
        assert!(report.pair_violations.is_empty());
        let report = containment_check(&s, &p, 0.0);
        assert_eq!(report.position_violations, vec![0]);
        assert_eq!(report.pair_violations, vec![(0, 2, 5.0)]);
    }

    #[test]
    fn dissipation_check_at_equilibrium() {
        let s = SimState::from_1d(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        let c = check_dissipation_identity(&s, &p2(1.0, KernelSpec::singular(1.0).unwrap()), 1e-4).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
    }

    #[test]
    fn dissipation_check_bound_pair() {
        let s = SimState::from_1d(&[0.8, -0.8], &[0.3, -0.3]).unwrap();
        let c = check_dissipation_identity(&s, &p2(1.0, KernelSpec::singular(1.0).unwrap()), 1e-4).unwrap();
        assert!(c.gap.abs() <= 1e-6 * c.rhs.abs().max(1.0), "{c:?}");
    }

    #[test]
    fn dissipation_gap_is_fourth_order() {
        let s = SimState::new(0.0, 3, 2, vec![1.0, 0.2, -0.7, 1.1, 0.1, -1.3], vec![0.4, -0.2, -0.5, 0.3, 0.1, -0.1])
            .unwrap();
        let p = ModelParams::unit(Variant::Simplified, KernelSpec::singular(1.0).unwrap(), 1.0, 3, 2);
        let g1 = check_dissipation_identity(&s, &p, 4e-2).unwrap().gap;
        let g2 = check_dissipation_identity(&s, &p, 2e-2).unwrap().gap;
        let ratio = g1 / g2;
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio} ({g1}, {g2})");
    }

    #[test]
    fn original_dissipates_at_least_as_fast() {
        // approaching pair: v_ij·x_ij < 0, projection term removes extra energy
        let s = SimState::from_1d(&[1.5, -1.5], &[-0.8, 0.8]).unwrap();
        let mut p = p2(1.0, KernelSpec::singular(1.0).unwrap());
        p.variant = Variant::Original;
        let c = check_dissipation_identity(&s, &p, 1e-4).unwrap();
        assert!(c.lhs <= c.rhs + 1e-6, "{c:?}");
        // independent closed form: dE/dt = -P - K̃/(4N) Σ (v_ij·x_ij)²/r²
        let extra = 1.0 / 8.0 * 2.0 * (1.6f64 * 3.0).powi(2) / 9.0;
        assert!((c.lhs - (c.rhs - extra)).abs() < 1e-6, "{c:?}");
    }
}
