//! Seed-fixed scenarios for the four numerical studies and the criteria
//! used to judge them.
//!
//! Every criterion is a pure function of a recorded [`Trajectory`] and the
//! model parameters, so re-evaluating a saved run gives the same verdicts as
//! the live one.
//!
//! Constants the studies leave open default to `K1 = K2 = K̃ = 1` and
//! `α = 1`.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    certificates, containment_check, distance_bound, equilibrium_residual, min_distance_over, Certificates,
    EnergyReport, MinDistance,
};
use crate::error::IntegrateError;
use crate::init::{assert_noncollisional, galilean_normalize, sample_initial, InitConfig, Interval};
use crate::integrator::{integrate, Event, StepControl, Trajectory};
use crate::model::{norm, KernelKind, KernelSpec, ModelParams, Variant};

pub const DEFAULT_SEED: u64 = 42;
/// Particle counts of the containment study.
pub const FIG1_SIZES: [usize; 4] = [10, 15, 20, 25];
pub const SCENARIO_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "fig5", "smoke"];

/// One simulation run together with the criteria it must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Unique label, e.g. `fig1-n10`.
    pub name: String,
    pub init: InitConfig,
    pub params: ModelParams,
    pub ctl: StepControl,
    pub t_end: f64,
    pub sample_every: f64,
    pub acceptance: Vec<Criterion>,
}

/// Acceptance criteria with their thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum Criterion {
    /// Integration reached `t_end`.
    NoAbort,
    /// `e_tot` never rises by more than `rel_slack * max(1, E(0))` between
    /// consecutive samples.
    EnergyMonotone { rel_slack: f64 },
    /// Every sampled `r_max` stays strictly below `d_M`.
    DistanceBound,
    /// `|Σx_i|, |Σv_i| <= coef * sqrt(N) * scale * (1 + t)`, with `scale`
    /// the largest initial position or velocity norm (at least 1).
    Momentum { coef: f64 },
    /// After the first sample below the collapse threshold, no sample has
    /// `r_min < r_floor` and the run did not abort.
    NoCollapseAfterThreshold { r_floor: f64 },
    /// At the last sample `|x_i| <= 2R(1 + slack_frac)` and
    /// `r_ij <= 4R(1 + slack_frac)`.
    Containment { slack_frac: f64 },
    /// Final equilibrium residual `<= coef * N * R`.
    EquilibriumResidual { coef: f64 },
    /// `e_kin(end) <= ratio * e_kin(0)`.
    KineticDecay { ratio: f64 },
    /// `∫ Σ|v_i|² dt <= E(0) / (K1 ψ(d_M)) * (1 + rel_slack)`.
    VelocityIntegral { rel_slack: f64 },
    /// `max t^1.5 v_max` over `late` is at most its max over `early`.
    EnvelopeDecay { early: (f64, f64), late: (f64, f64) },
    /// Global minimum distance stays positive and the run did not abort.
    PositiveMinDistance,
    /// Some sample has `r_min < below`.
    CrossingObserved { below: f64 },
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::NoAbort => "no_abort",
            Criterion::EnergyMonotone { .. } => "energy_monotone",
            Criterion::DistanceBound => "distance_bound",
            Criterion::Momentum { .. } => "momentum",
            Criterion::NoCollapseAfterThreshold { .. } => "no_collapse_after_threshold",
            Criterion::Containment { .. } => "containment",
            Criterion::EquilibriumResidual { .. } => "equilibrium_residual",
            Criterion::KineticDecay { .. } => "kinetic_decay",
            Criterion::VelocityIntegral { .. } => "velocity_integral",
            Criterion::EnvelopeDecay { .. } => "envelope_decay",
            Criterion::PositiveMinDistance => "positive_min_distance",
            Criterion::CrossingObserved { .. } => "crossing_observed",
        }
    }

    /// Judges `traj`. `value` is the measured quantity and `limit` the bound
    /// it is compared with.
    pub fn evaluate(&self, traj: &Trajectory, params: &ModelParams) -> Verdict {
        let samples = &traj.samples;
        let first = &samples[0];
        let last = traj.last();
        let e0 = first.energy.e_tot;
        let (passed, value, limit) = match *self {
            Criterion::NoAbort => {
                let aborted = traj.aborted();
                (!aborted, aborted as u8 as f64, 0.0)
            }
            Criterion::EnergyMonotone { rel_slack } => {
                let worst = samples
                    .windows(2)
                    .map(|w| w[1].energy.e_tot - w[0].energy.e_tot)
                    .fold(f64::NEG_INFINITY, f64::max);
                let limit = rel_slack * e0.max(1.0);
                (samples.len() < 2 || worst <= limit, worst, limit)
            }
            Criterion::DistanceBound => {
                let d_m = distance_bound(e0, params);
                let worst = samples.iter().map(|s| s.distance.r_max).fold(0.0, f64::max);
                (worst < d_m, worst, d_m)
            }
            Criterion::Momentum { coef } => {
                let s0 = &first.state;
                let scale = (0..s0.n)
                    .map(|i| norm(s0.position(i)).max(norm(s0.velocity(i))))
                    .fold(1.0, f64::max);
                let root_n = (s0.n as f64).sqrt();
                // worst ratio of drift to its allowance
                let worst = samples
                    .iter()
                    .map(|s| {
                        let drift = norm(&s.state.position_sum()).max(norm(&s.state.velocity_sum()));
                        drift / (coef * root_n * scale * (1.0 + (s.t - first.t)))
                    })
                    .fold(0.0, f64::max);
                (worst <= 1.0, worst, 1.0)
            }
            Criterion::NoCollapseAfterThreshold { r_floor } => {
                let threshold = crate::diagnostics::collapse_threshold(params);
                match samples.iter().find(|s| s.energy.e_tot < threshold) {
                    None => (true, f64::INFINITY, r_floor),
                    Some(crossing) => {
                        let t_cross = crossing.t;
                        let later_min = samples
                            .iter()
                            .filter(|s| s.t >= t_cross)
                            .map(|s| s.distance.r_min)
                            .fold(f64::INFINITY, f64::min);
                        let abort_after = traj
                            .events
                            .iter()
                            .any(|e| matches!(e, Event::Abort { t, .. } if *t >= t_cross));
                        (!abort_after && later_min >= r_floor, later_min, r_floor)
                    }
                }
            }
            Criterion::Containment { slack_frac } => {
                let slack = slack_frac * 2.0 * params.big_r;
                let report = containment_check(&last.state, params, slack);
                (report.is_ok(), last.distance.max_radius, 2.0 * params.big_r + slack)
            }
            Criterion::EquilibriumResidual { coef } => {
                let residual = equilibrium_residual(&last.state, params);
                let limit = coef * params.n as f64 * params.big_r;
                (residual <= limit, residual, limit)
            }
            Criterion::KineticDecay { ratio } => {
                let limit = ratio * first.energy.e_kin;
                (last.energy.e_kin <= limit, last.energy.e_kin, limit)
            }
            Criterion::VelocityIntegral { rel_slack } => {
                let certs = certificates(samples, params).expect("non-empty trajectory");
                let limit = e0 / (params.k1 * certs.psi_m) * (1.0 + rel_slack);
                (certs.velocity_integral <= limit, certs.velocity_integral, limit)
            }
            Criterion::EnvelopeDecay { early, late } => {
                let early_max = envelope_max(traj, early.0, early.1);
                let late_max = envelope_max(traj, late.0, late.1);
                (late_max <= early_max, late_max, early_max)
            }
            Criterion::PositiveMinDistance => {
                let global = min_distance_over(traj).map_or(f64::INFINITY, |m| m.global_min);
                (global > 0.0 && !traj.aborted(), global, 0.0)
            }
            Criterion::CrossingObserved { below } => {
                let global = min_distance_over(traj).map_or(f64::INFINITY, |m| m.global_min);
                (global < below, global, below)
            }
        };
        Verdict {
            criterion: self.name().to_string(),
            passed,
            value,
            limit,
        }
    }
}

/// `max t^1.5 v_max` over samples with `lo <= t <= hi`.
pub fn envelope_max(traj: &Trajectory, lo: f64, hi: f64) -> f64 {
    traj.samples
        .iter()
        .filter(|s| s.t >= lo && s.t <= hi)
        .map(|s| s.distance.v_max * s.t.powf(1.5))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    #[serde(with = "any_f64")]
    pub value: f64,
    #[serde(with = "any_f64")]
    pub limit: f64,
}

/// JSON has no infinities; those are stored as the strings `"inf"`,
/// `"-inf"` and `"NaN"`.
mod any_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Outcome of one scenario run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub verdicts: Vec<Verdict>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn aborted(&self) -> bool {
        self.trajectory.aborted()
    }

    pub fn certificates(&self) -> Certificates {
        certificates(&self.trajectory.samples, &self.scenario.params).expect("non-empty trajectory")
    }

    pub fn min_distance(&self) -> MinDistance {
        min_distance_over(&self.trajectory).expect("non-empty trajectory")
    }

    pub fn final_energy(&self) -> EnergyReport {
        self.trajectory.last().energy
    }
}

pub fn evaluate_all(criteria: &[Criterion], traj: &Trajectory, params: &ModelParams) -> Vec<Verdict> {
    criteria.iter().map(|c| c.evaluate(traj, params)).collect()
}

/// Samples, normalizes and integrates `scenario`, then evaluates its
/// criteria. Integration failures are recorded on the trajectory; an
/// invalid scenario is an error.
pub fn run_scenario(scenario: &Scenario) -> Result<RunRecord, IntegrateError> {
    let state0 = galilean_normalize(&sample_initial(&scenario.init)?);
    if let Err(v) = assert_noncollisional(&state0, scenario.ctl.r_floor) {
        return Err(IntegrateError::Collision {
            t: 0.0,
            i: v.i,
            j: v.j,
            r: v.r,
        });
    }
    let trajectory = integrate(
        &state0,
        &scenario.params,
        &scenario.ctl,
        scenario.t_end,
        scenario.sample_every,
    )?;
    let verdicts = evaluate_all(&scenario.acceptance, &trajectory, &scenario.params);
    Ok(RunRecord {
        scenario: scenario.clone(),
        trajectory,
        verdicts,
    })
}

/// Runs independent scenarios on up to `threads` worker threads. Results
/// keep the input order and do not depend on the thread count.
pub fn run_many(scenarios: &[Scenario], threads: usize) -> Vec<Result<RunRecord, IntegrateError>> {
    let threads = threads.max(1).min(scenarios.len().max(1));
    if threads == 1 {
        return scenarios.iter().map(run_scenario).collect();
    }
    let mut out: Vec<Option<Result<RunRecord, IntegrateError>>> = vec![None; scenarios.len()];
    let chunk = scenarios.len().div_ceil(threads);
    thread::scope(|scope| {
        for (slots, jobs) in out.chunks_mut(chunk).zip(scenarios.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, job) in slots.iter_mut().zip(jobs) {
                    *slot = Some(run_scenario(job));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Checks shared by every scenario.
pub fn common_criteria() -> Vec<Criterion> {
    vec![
        Criterion::NoAbort,
        Criterion::EnergyMonotone { rel_slack: 1e-8 },
        Criterion::DistanceBound,
        Criterion::Momentum { coef: 1e-9 },
        Criterion::NoCollapseAfterThreshold { r_floor: 1e-6 },
    ]
}

fn unit_params(variant: Variant, kernel: KernelSpec, big_r: f64, n: usize, dim: usize) -> ModelParams {
    ModelParams::unit(variant, kernel, big_r, n, dim)
}

fn planar_init(n: usize, seed: u64) -> InitConfig {
    InitConfig {
        n,
        dim: 2,
        pos_box: Interval::symmetric(5.0),
        vel_box: Interval::symmetric(5.0),
        seed,
    }
}

pub fn default_kernel(kind: KernelKind) -> KernelSpec {
    KernelSpec { kind, alpha: 1.0 }
}

/// Containment study: simplified model, singular kernel, R = 2, planar
/// data uniform on `[-5, 5]²`, horizon 500.
pub fn fig1_scenario(n: usize, seed: u64) -> Scenario {
    let mut acceptance = common_criteria();
    acceptance.extend([
        Criterion::Containment { slack_frac: 0.05 },
        Criterion::EquilibriumResidual { coef: 1e-2 },
    ]);
    Scenario {
        name: format!("fig1-n{n}"),
        init: planar_init(n, seed),
        params: unit_params(Variant::Simplified, default_kernel(KernelKind::Singular), 2.0, n, 2),
        ctl: StepControl::default(),
        t_end: 500.0,
        sample_every: 0.5,
        acceptance,
    }
}

/// Energy study: one cell of the {original, simplified} × {singular,
/// regular} grid on the containment study's N = 10 initial data.
pub fn fig2_scenario(variant: Variant, kind: KernelKind, seed: u64) -> Scenario {
    let mut acceptance = common_criteria();
    acceptance.extend([
        Criterion::KineticDecay { ratio: 1e-3 },
        Criterion::VelocityIntegral { rel_slack: 1e-2 },
    ]);
    Scenario {
        name: format!("fig2-{}-{}", variant.name(), kind.name()),
        init: planar_init(10, seed),
        params: unit_params(variant, default_kernel(kind), 2.0, 10, 2),
        ctl: StepControl::default(),
        t_end: 500.0,
        sample_every: 0.5,
        acceptance,
    }
}

pub const FIG3_N: usize = 10;
pub const FIG3_T_END: f64 = 30.0;

/// One-dimensional minimum-distance study: positions on `[-5, 5]`,
/// velocities on `[-2, 2]`, `ψ = 1/r` or `1/(1 + r)`.
pub fn fig3_scenario(kind: KernelKind, seed: u64) -> Scenario {
    let mut acceptance = common_criteria();
    acceptance.push(match kind {
        KernelKind::Singular => Criterion::PositiveMinDistance,
        KernelKind::Regular => Criterion::CrossingObserved { below: 1e-3 },
    });
    Scenario {
        name: format!("fig3-{}", kind.name()),
        init: InitConfig {
            n: FIG3_N,
            dim: 1,
            pos_box: Interval::symmetric(5.0),
            vel_box: Interval::symmetric(2.0),
            seed,
        },
        params: unit_params(Variant::Simplified, default_kernel(kind), 1.0, FIG3_N, 1),
        ctl: StepControl::default(),
        t_end: FIG3_T_END,
        sample_every: 0.01,
        acceptance,
    }
}

/// Velocity-decay study on the containment setup with N = 10.
pub fn fig5_scenario(seed: u64) -> Scenario {
    let mut base = fig1_scenario(10, seed);
    base.name = "fig5".into();
    base.acceptance = common_criteria();
    base.acceptance.push(Criterion::EnvelopeDecay {
        early: (10.0, 50.0),
        late: (250.0, 500.0),
    });
    base
}

/// The runs making up a named scenario.
pub fn scenario_runs(name: &str, seed: u64) -> Option<Vec<Scenario>> {
    let runs = match name {
        "fig1" => FIG1_SIZES.iter().map(|&n| fig1_scenario(n, seed)).collect(),
        "fig2" => fig2_grid()
            .into_iter()
            .map(|(v, k)| fig2_scenario(v, k, seed))
            .collect(),
        "fig3" => vec![
            fig3_scenario(KernelKind::Singular, seed),
            fig3_scenario(KernelKind::Regular, seed),
        ],
        "fig5" => vec![fig5_scenario(seed)],
        "smoke" => smoke_sweep(seed),
        _ => return None,
    };
    Some(runs)
}

pub fn fig2_grid() -> [(Variant, KernelKind); 4] {
    [
        (Variant::Original, KernelKind::Regular),
        (Variant::Original, KernelKind::Singular),
        (Variant::Simplified, KernelKind::Regular),
        (Variant::Simplified, KernelKind::Singular),
    ]
}

/// The one-dimensional study over five consecutive seeds. Crossings under
/// the regular kernel are only required somewhere in the sweep, so that
/// criterion is dropped from the individual runs.
pub fn smoke_sweep(seed: u64) -> Vec<Scenario> {
    (0..5)
        .flat_map(|k| {
            let s = seed.wrapping_add(k);
            [KernelKind::Singular, KernelKind::Regular].map(|kind| {
                let mut sc = fig3_scenario(kind, s);
                sc.name = format!("smoke-{}-seed{s}", kind.name());
                if kind == KernelKind::Regular {
                    sc.acceptance.retain(|c| !matches!(c, Criterion::CrossingObserved { .. }));
                }
                sc
            })
        })
        .collect()
}

/// Verdicts spanning all runs of a named scenario. The smoke sweep needs a
/// crossing in at least one of its regular-kernel runs.
pub fn suite_verdicts(name: &str, runs: &[(&ModelParams, &Trajectory)]) -> Vec<Verdict> {
    if name != "smoke" {
        return Vec::new();
    }
    let below = 1e-3;
    let global = runs
        .iter()
        .filter(|(p, _)| p.kernel.kind == KernelKind::Regular)
        .filter_map(|(_, t)| min_distance_over(t))
        .map(|m| m.global_min)
        .fold(f64::INFINITY, f64::min);
    vec![Verdict {
        criterion: "crossing_observed_any".into(),
        passed: global < below,
        value: global,
        limit: below,
    }]
}

/// `(t, e_kin, e_pot, e_tot)` per sample.
pub fn energy_series(traj: &Trajectory) -> Vec<(f64, f64, f64, f64)> {
    traj.samples
        .iter()
        .map(|s| (s.t, s.energy.e_kin, s.energy.e_pot, s.energy.e_tot))
        .collect()
}

/// `(t, v_max, t^1.5 v_max)` per sample.
pub fn velocity_decay_series(traj: &Trajectory) -> Vec<(f64, f64, f64)> {
    traj.samples
        .iter()
        .map(|s| (s.t, s.distance.v_max, s.t.powf(1.5) * s.distance.v_max))
        .collect()
}

pub fn run_fig1(n: usize, seed: u64) -> Result<RunRecord, IntegrateError> {
    run_scenario(&fig1_scenario(n, seed))
}

pub fn run_fig2(variant: Variant, kind: KernelKind, seed: u64) -> Result<RunRecord, IntegrateError> {
    run_scenario(&fig2_scenario(variant, kind, seed))
}

pub fn run_fig3(kind: KernelKind, seed: u64) -> Result<RunRecord, IntegrateError> {
    run_scenario(&fig3_scenario(kind, seed))
}

pub fn run_fig5(seed: u64) -> Result<RunRecord, IntegrateError> {
    run_scenario(&fig5_scenario(seed))
}
