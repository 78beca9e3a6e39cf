//! Adaptive Dormand-Prince 5(4) integration with a proximity-limited step,
//! plus a fixed-step classical RK4 used as an independent reference.
//!
//! The step size obeys three limits: the embedded error estimate, `dt_max`,
//! and (for singular kernels) a time-to-contact cap
//! `proximity_factor * min r_ij / max |v_ij|` so that close encounters are
//! resolved instead of stepped over.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    collapse_threshold, distance_report, energy_report_with_floor, DistanceReport, EnergyReport,
};
use crate::error::{IntegrateError, ModelError};
use crate::model::{norm, pairwise_geometry, rhs_with_floor, ModelParams, SimState, DEFAULT_R_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Fraction of the time-to-contact estimate a single step may cover.
    pub proximity_factor: f64,
    /// Pair distances at or below this abort the run.
    pub r_floor: f64,
    /// A new near-collision event is logged when `r_min` drops below this.
    pub near_collision: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.5,
            proximity_factor: 0.1,
            r_floor: DEFAULT_R_FLOOR,
            near_collision: 1e-6,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |msg: String| Err(IntegrateError::InvalidControl(msg));
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive (abs_tol = {}, rel_tol = {})",
                self.abs_tol, self.rel_tol
            ));
        }
        if !(0.0 < self.dt_min && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.proximity_factor > 0.0 && self.proximity_factor <= 1.0) {
            return bad(format!(
                "proximity_factor must lie in (0, 1], got {}",
                self.proximity_factor
            ));
        }
        if !(self.r_floor >= 0.0) {
            return bad(format!("r_floor must be >= 0, got {}", self.r_floor));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights (also row 7 of the tableau)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// The full phase-space vector `[x; v]` and its derivative.
fn flatten(state: &SimState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * state.x.len());
    y.extend_from_slice(&state.x);
    y.extend_from_slice(&state.v);
    y
}

fn unflatten(template: &SimState, t: f64, y: &[f64]) -> SimState {
    let half = template.x.len();
    SimState {
        t,
        n: template.n,
        dim: template.dim,
        x: y[..half].to_vec(),
        v: y[half..].to_vec(),
    }
}

fn eval(template: &SimState, t: f64, y: &[f64], params: &ModelParams, floor: f64) -> Result<Vec<f64>, ModelError> {
    let s = unflatten(template, t, y);
    let d = rhs_with_floor(&s, params, floor)?;
    let mut out = d.dx;
    out.extend_from_slice(&d.dv);
    Ok(out)
}

fn combine(y: &[f64], dt: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (coef, k) in terms {
        let c = dt * coef;
        for (o, kv) in out.iter_mut().zip(k.iter()) {
            *o += c * kv;
        }
    }
    out
}

/// One Dormand-Prince trial: the fifth-order state and the max-norm of the
/// embedded error.
pub(crate) fn dopri_trial(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    floor: f64,
) -> Result<(SimState, f64), ModelError> {
    let t = state.t;
    let y = flatten(state);
    let k1 = eval(state, t, &y, params, floor)?;
    let y2 = combine(&y, dt, &[(A21, &k1)]);
    let k2 = eval(state, t + C2 * dt, &y2, params, floor)?;
    let y3 = combine(&y, dt, &[(A31, &k1), (A32, &k2)]);
    let k3 = eval(state, t + C3 * dt, &y3, params, floor)?;
    let y4 = combine(&y, dt, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
    let k4 = eval(state, t + C4 * dt, &y4, params, floor)?;
    let y5 = combine(&y, dt, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
    let k5 = eval(state, t + C5 * dt, &y5, params, floor)?;
    let y6 = combine(&y, dt, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
    let k6 = eval(state, t + dt, &y6, params, floor)?;
    let y_new = combine(&y, dt, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = eval(state, t + dt, &y_new, params, floor)?;
    let mut err = 0.0f64;
    for idx in 0..y.len() {
        let e = dt
            * (E1 * k1[idx] + E3 * k3[idx] + E4 * k4[idx] + E5 * k5[idx] + E6 * k6[idx] + E7 * k7[idx]);
        err = err.max(e.abs());
    }
    Ok((unflatten(state, t + dt, &y_new), err))
}

/// Result of one accepted adaptive step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    pub dt_used: f64,
    pub dt_next: f64,
    pub err_est: f64,
    pub rejections: usize,
}

/// Upper bound on the step from the smallest per-pair time-to-contact
/// `r_ij / |v_ij|`. Infinite for regular kernels or when all relative
/// velocities vanish.
pub fn proximity_cap(state: &SimState, params: &ModelParams, ctl: &StepControl) -> f64 {
    if !params.kernel.is_singular() {
        return f64::INFINITY;
    }
    let pairs = pairwise_geometry(state);
    let contact = pairs
        .pairs()
        .map(|(i, j, r)| r / norm(pairs.v_rel(i, j)))
        .fold(f64::INFINITY, f64::min);
    let cap = ctl.proximity_factor * contact;
    if cap.is_finite() {
        cap
    } else {
        f64::INFINITY
    }
}

fn min_pair_distance(state: &SimState) -> (usize, usize, f64) {
    pairwise_geometry(state)
        .min_pair()
        .unwrap_or((0, 0, f64::INFINITY))
}

/// Advances `state` by one accepted Dormand-Prince step, retrying with
/// smaller steps after rejection.
pub fn step(
    state: &SimState,
    params: &ModelParams,
    ctl: &StepControl,
    dt_try: f64,
) -> Result<StepOutcome, IntegrateError> {
    let scale = state.x.iter().chain(&state.v).fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = ctl.abs_tol + ctl.rel_tol * scale;
    let mut dt = dt_try.min(ctl.dt_max).min(proximity_cap(state, params, ctl));
    let mut rejections = 0;
    loop {
        if dt < ctl.dt_min || state.t + dt == state.t {
            return Err(IntegrateError::StepTooSmall {
                t: state.t,
                dt,
                r_min: min_pair_distance(state).2,
            });
        }
        let factor = match dopri_trial(state, params, dt, ctl.r_floor) {
            Ok((next, err)) if next.is_finite() && err <= tol => {
                let (i, j, r) = min_pair_distance(&next);
                if r <= ctl.r_floor {
                    return Err(IntegrateError::Collision { t: next.t, i, j, r });
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                return Ok(StepOutcome {
                    state: next,
                    dt_used: dt,
                    dt_next: (dt * grow).min(ctl.dt_max),
                    err_est: err,
                    rejections,
                });
            }
            Ok((_, err)) if err.is_finite() => (0.9 * (tol / err).powf(0.2)).max(0.2),
            // a stage crossed the singularity floor or produced non-finite values
            Ok(_) | Err(ModelError::Singularity { .. }) => 0.2,
            Err(e) => return Err(e.into()),
        };
        dt *= factor;
        rejections += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: SimState,
    pub energy: EnergyReport,
    pub distance: DistanceReport,
}

impl Sample {
    pub fn new(state: SimState, params: &ModelParams, r_floor: f64) -> Result<Self, ModelError> {
        let energy = energy_report_with_floor(&state, params, r_floor)?;
        let distance = distance_report(&state);
        Ok(Self {
            t: state.t,
            state,
            energy,
            distance,
        })
    }
}

/// Per-step record kept for every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    NearCollision { t: f64, i: usize, j: usize, r: f64 },
    ThresholdCrossing { t: f64, e_tot: f64, threshold: f64 },
    Abort { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub steps: Vec<StepRecord>,
    pub events: Vec<Event>,
    /// Set when integration stopped early.
    pub abort: Option<IntegrateError>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }

    pub fn aborted(&self) -> bool {
        self.events.iter().any(|e| matches!(e, Event::Abort { .. }))
    }
}

/// Integrates from `state0` to `t_end`, recording a sample at every multiple
/// of `sample_every` and at `t_end`. Step failures end the run and are
/// recorded on the trajectory; only invalid inputs return `Err`.
pub fn integrate(
    state0: &SimState,
    params: &ModelParams,
    ctl: &StepControl,
    t_end: f64,
    sample_every: f64,
) -> Result<Trajectory, IntegrateError> {
    params.validate()?;
    ctl.validate()?;
    state0.check_shape(params)?;
    if !state0.is_finite() {
        return Err(IntegrateError::NonFinite(state0.t));
    }
    if !(t_end >= state0.t && t_end.is_finite()) {
        return Err(IntegrateError::InvalidControl(format!(
            "t_end = {t_end} must be finite and not before the initial time {}",
            state0.t
        )));
    }
    if !(sample_every > 0.0) {
        return Err(IntegrateError::InvalidControl(format!(
            "sample_every must be positive, got {sample_every}"
        )));
    }
    let (i, j, r) = min_pair_distance(state0);
    if r <= ctl.r_floor {
        return Err(IntegrateError::Collision { t: state0.t, i, j, r });
    }

    let threshold = collapse_threshold(params);
    let first = Sample::new(state0.clone(), params, ctl.r_floor)?;
    let mut traj = Trajectory {
        samples: Vec::new(),
        steps: Vec::new(),
        events: Vec::new(),
        abort: None,
    };
    let mut crossed = false;
    let mut record = |traj: &mut Trajectory, sample: Sample| {
        if !crossed && sample.energy.e_tot < threshold {
            crossed = true;
            traj.events.push(Event::ThresholdCrossing {
                t: sample.t,
                e_tot: sample.energy.e_tot,
                threshold,
            });
        }
        traj.samples.push(sample);
    };
    record(&mut traj, first);

    let t0 = state0.t;
    let mut state = state0.clone();
    let mut dt = ctl.dt_init;
    let mut sample_idx: u64 = 1;
    let mut near = r < ctl.near_collision;
    while state.t < t_end {
        if traj.steps.len() >= ctl.max_steps {
            let err = IntegrateError::MaxSteps(ctl.max_steps);
            traj.events.push(Event::Abort {
                t: state.t,
                reason: err.to_string(),
            });
            traj.abort = Some(err);
            break;
        }
        let target = (t0 + sample_idx as f64 * sample_every).min(t_end);
        let remaining = target - state.t;
        let truncated = dt >= remaining;
        let dt_try = if truncated { remaining } else { dt };
        let outcome = match step(&state, params, ctl, dt_try) {
            Ok(o) => o,
            Err(err) => {
                traj.events.push(Event::Abort {
                    t: state.t,
                    reason: err.to_string(),
                });
                traj.abort = Some(err);
                break;
            }
        };
        let landed = outcome.dt_used == remaining;
        dt = if truncated && outcome.rejections == 0 {
            dt.max(outcome.dt_next).min(ctl.dt_max)
        } else {
            outcome.dt_next
        };
        state = outcome.state;
        if landed {
            state.t = target;
        }
        let (i, j, r) = min_pair_distance(&state);
        traj.steps.push(StepRecord {
            t: state.t,
            dt: outcome.dt_used,
            r_min: r,
        });
        if r < ctl.near_collision {
            if !near {
                traj.events.push(Event::NearCollision { t: state.t, i, j, r });
            }
            near = true;
        } else {
            near = false;
        }
        if landed {
            let sample = Sample::new(state.clone(), params, ctl.r_floor)?;
            record(&mut traj, sample);
            sample_idx += 1;
        }
    }
    Ok(traj)
}

/// Classical RK4 step of signed size `dt`.
fn rk4_step(state: &SimState, params: &ModelParams, dt: f64, floor: f64) -> Result<SimState, ModelError> {
    let t = state.t;
    let y = flatten(state);
    let k1 = eval(state, t, &y, params, floor)?;
    let k2 = eval(state, t + 0.5 * dt, &combine(&y, dt, &[(0.5, &k1)]), params, floor)?;
    let k3 = eval(state, t + 0.5 * dt, &combine(&y, dt, &[(0.5, &k2)]), params, floor)?;
    let k4 = eval(state, t + dt, &combine(&y, dt, &[(1.0, &k3)]), params, floor)?;
    let y_new = combine(
        &y,
        dt,
        &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
    );
    Ok(unflatten(state, t + dt, &y_new))
}

/// `steps` equal RK4 substeps covering the signed interval `span`.
pub fn rk4_advance(
    state: &SimState,
    params: &ModelParams,
    span: f64,
    steps: usize,
    floor: f64,
) -> Result<SimState, ModelError> {
    let dt = span / steps as f64;
    let mut s = state.clone();
    for _ in 0..steps {
        s = rk4_step(&s, params, dt, floor)?;
    }
    s.t = state.t + span;
    Ok(s)
}

/// Fixed-step classical RK4 from `state0.t` to `t_end`; the last step is
/// shortened to land on `t_end`. Used only as a reference solution.
pub fn reference_integrate(
    state0: &SimState,
    params: &ModelParams,
    t_end: f64,
    dt_fixed: f64,
) -> Result<SimState, IntegrateError> {
    params.validate()?;
    state0.check_shape(params)?;
    if !(dt_fixed > 0.0) {
        return Err(IntegrateError::InvalidControl(format!(
            "dt_fixed must be positive, got {dt_fixed}"
        )));
    }
    let span = t_end - state0.t;
    let full = (span / dt_fixed).floor() as u64;
    let mut s = state0.clone();
    let check = |s: &SimState| {
        let (i, j, r) = min_pair_distance(s);
        if r <= DEFAULT_R_FLOOR {
            Err(IntegrateError::Collision { t: s.t, i, j, r })
        } else {
            Ok(())
        }
    };
    for k in 0..full {
        s = rk4_step(&s, params, dt_fixed, DEFAULT_R_FLOOR)?;
        s.t = state0.t + (k + 1) as f64 * dt_fixed;
        check(&s)?;
    }
    let rest = t_end - s.t;
    if rest > 0.0 {
        s = rk4_step(&s, params, rest, DEFAULT_R_FLOOR)?;
        check(&s)?;
    }
    s.t = t_end;
    Ok(s)
}
