//! Run configuration files (TOML).
//!
//! ```toml
//! t_end = 500.0
//! sample_every = 0.5
//!
//! [init]
//! n = 10
//! dim = 2
//! seed = 42
//! pos_box = [-5.0, 5.0]
//! vel_box = [-5.0, 5.0]
//!
//! [params]
//! variant = "simplified"   # or "original"
//! kernel = "singular"      # or "regular"
//! alpha = 1.0
//! big_r = 2.0
//!
//! [ctl]
//! abs_tol = 1e-10
//! ```
//!
//! Only `init.n`, `init.dim`, `params.variant` and `params.kernel` are
//! required. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::experiments::DEFAULT_SEED;
use crate::init::{InitConfig, Interval};
use crate::integrator::StepControl;
use crate::model::{KernelKind, KernelSpec, ModelParams, Variant};

pub const DEFAULT_T_END: f64 = 500.0;
pub const DEFAULT_SAMPLE_EVERY: f64 = 0.5;
pub const DEFAULT_BIG_R: f64 = 2.0;
pub const DEFAULT_BOX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub init: InitConfig,
    pub params: ModelParams,
    pub ctl: StepControl,
    pub t_end: f64,
    pub sample_every: f64,
    pub output_dir: Option<PathBuf>,
    pub scenario: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_every: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    init: RawInit,
    params: RawParams,
    #[serde(default)]
    ctl: RawCtl,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    n: Option<i64>,
    dim: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pos_box: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vel_box: Option<[f64; 2]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    variant: Option<Variant>,
    kernel: Option<KernelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    big_r: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCtl {
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proximity_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    near_collision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steps: Option<i64>,
}

fn required<T>(value: Option<T>, path: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::new(path, "missing required key"))
}

fn check(ok: bool, path: &str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(path, reason()))
    }
}

fn interval(raw: Option<[f64; 2]>, path: &str) -> Result<Interval, ConfigError> {
    let [lo, hi] = raw.unwrap_or([-DEFAULT_BOX, DEFAULT_BOX]);
    let iv = Interval::new(lo, hi);
    check(iv.is_valid(), path, || format!("need finite lo < hi, got [{lo}, {hi}]"))?;
    Ok(iv)
}

fn positive_finite(value: f64, path: &str) -> Result<f64, ConfigError> {
    check(value > 0.0 && value.is_finite(), path, || {
        format!("must be positive and finite, got {value}")
    })?;
    Ok(value)
}

fn non_negative(value: f64, path: &str) -> Result<f64, ConfigError> {
    check(value >= 0.0 && value.is_finite(), path, || {
        format!("must be non-negative and finite, got {value}")
    })?;
    Ok(value)
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let n = required(self.init.n, "init.n")?;
        check(n >= 2, "init.n", || format!("need N >= 2 particles, got {n}"))?;
        let dim = required(self.init.dim, "init.dim")?;
        check(dim >= 1, "init.dim", || format!("need dimension >= 1, got {dim}"))?;
        let seed = self.init.seed.unwrap_or(DEFAULT_SEED as i64);
        check(seed >= 0, "init.seed", || format!("must be non-negative, got {seed}"))?;
        let (n, dim) = (n as usize, dim as usize);
        let init = InitConfig {
            n,
            dim,
            pos_box: interval(self.init.pos_box, "init.pos_box")?,
            vel_box: interval(self.init.vel_box, "init.vel_box")?,
            seed: seed as u64,
        };

        let p = self.params;
        let variant = required(p.variant, "params.variant")?;
        let kind = required(p.kernel, "params.kernel")?;
        let alpha = p.alpha.unwrap_or(1.0);
        match kind {
            KernelKind::Singular => check(alpha >= 1.0 && alpha.is_finite(), "params.alpha", || {
                format!("singular kernel requires finite alpha >= 1, got {alpha}")
            })?,
            KernelKind::Regular => check(alpha > 0.0 && alpha.is_finite(), "params.alpha", || {
                format!("regular kernel requires finite alpha > 0, got {alpha}")
            })?,
        }
        let params = ModelParams {
            variant,
            kernel: KernelSpec { kind, alpha },
            k1: non_negative(p.k1.unwrap_or(1.0), "params.k1")?,
            k2: non_negative(p.k2.unwrap_or(1.0), "params.k2")?,
            k_tilde: non_negative(p.k_tilde.unwrap_or(1.0), "params.k_tilde")?,
            big_r: positive_finite(p.big_r.unwrap_or(DEFAULT_BIG_R), "params.big_r")?,
            n,
            dim,
        };

        let c = self.ctl;
        let d = StepControl::default();
        let ctl = StepControl {
            abs_tol: positive_finite(c.abs_tol.unwrap_or(d.abs_tol), "ctl.abs_tol")?,
            rel_tol: positive_finite(c.rel_tol.unwrap_or(d.rel_tol), "ctl.rel_tol")?,
            dt_init: positive_finite(c.dt_init.unwrap_or(d.dt_init), "ctl.dt_init")?,
            dt_min: positive_finite(c.dt_min.unwrap_or(d.dt_min), "ctl.dt_min")?,
            dt_max: positive_finite(c.dt_max.unwrap_or(d.dt_max), "ctl.dt_max")?,
            proximity_factor: c.proximity_factor.unwrap_or(d.proximity_factor),
            r_floor: non_negative(c.r_floor.unwrap_or(d.r_floor), "ctl.r_floor")?,
            near_collision: non_negative(c.near_collision.unwrap_or(d.near_collision), "ctl.near_collision")?,
            max_steps: {
                let m = c.max_steps.unwrap_or(d.max_steps as i64);
                check(m >= 1, "ctl.max_steps", || format!("must be >= 1, got {m}"))?;
                m as usize
            },
        };
        check(ctl.dt_min <= ctl.dt_init, "ctl.dt_init", || {
            format!("need dt_min <= dt_init, got {} > {}", ctl.dt_min, ctl.dt_init)
        })?;
        check(ctl.dt_init <= ctl.dt_max, "ctl.dt_max", || {
            format!("need dt_init <= dt_max, got {} > {}", ctl.dt_init, ctl.dt_max)
        })?;
        let pf = ctl.proximity_factor;
        check(pf > 0.0 && pf <= 1.0, "ctl.proximity_factor", || {
            format!("must lie in (0, 1], got {pf}")
        })?;

        let t_end = self.t_end.unwrap_or(DEFAULT_T_END);
        check(t_end >= 0.0 && t_end.is_finite(), "t_end", || {
            format!("must be non-negative and finite, got {t_end}")
        })?;
        let sample_every = positive_finite(self.sample_every.unwrap_or(DEFAULT_SAMPLE_EVERY), "sample_every")?;
        Ok(RunConfig {
            init,
            params,
            ctl,
            t_end,
            sample_every,
            output_dir: self.output_dir,
            scenario: self.scenario,
        })
    }
}

/// Parses and validates a configuration. Errors name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))?;
    raw.resolve()
}

/// Writes every field explicitly; `parse_config` inverts it.
pub fn print_config(config: &RunConfig) -> String {
    let c = &config.ctl;
    let raw = RawConfig {
        scenario: config.scenario.clone(),
        t_end: Some(config.t_end),
        sample_every: Some(config.sample_every),
        output_dir: config.output_dir.clone(),
        init: RawInit {
            n: Some(config.init.n as i64),
            dim: Some(config.init.dim as i64),
            seed: Some(config.init.seed as i64),
            pos_box: Some([config.init.pos_box.lo, config.init.pos_box.hi]),
            vel_box: Some([config.init.vel_box.lo, config.init.vel_box.hi]),
        },
        params: RawParams {
            variant: Some(config.params.variant),
            kernel: Some(config.params.kernel.kind),
            alpha: Some(config.params.kernel.alpha),
            k1: Some(config.params.k1),
            k2: Some(config.params.k2),
            k_tilde: Some(config.params.k_tilde),
            big_r: Some(config.params.big_r),
        },
        ctl: RawCtl {
            abs_tol: Some(c.abs_tol),
            rel_tol: Some(c.rel_tol),
            dt_init: Some(c.dt_init),
            dt_min: Some(c.dt_min),
            dt_max: Some(c.dt_max),
            proximity_factor: Some(c.proximity_factor),
            r_floor: Some(c.r_floor),
            near_collision: Some(c.near_collision),
            max_steps: Some(c.max_steps as i64),
        },
    };
    toml::to_string(&raw).expect("config fields are TOML-representable")
}

impl RunConfig {
    pub fn from_scenario(sc: &crate::experiments::Scenario) -> Self {
        Self {
            init: sc.init,
            params: sc.params,
            ctl: sc.ctl,
            t_end: sc.t_end,
            sample_every: sc.sample_every,
            output_dir: None,
            scenario: Some(sc.name.clone()),
        }
    }

    /// Keeps `params.n`/`params.dim` in step with `init` after an override.
    pub fn set_n(&mut self, n: usize) {
        self.init.n = n;
        self.params.n = n;
    }

    /// Re-runs validation, e.g. after command-line overrides.
    pub fn revalidate(&self) -> Result<(), ConfigError> {
        parse_config(&print_config(self)).map(|_| ())
    }
}
