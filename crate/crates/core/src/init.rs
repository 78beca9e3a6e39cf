//! Seeded initial conditions, Galilean normalization and collision checks.
//!
//! Coordinates are drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`, seeded with
//! `SeedableRng::seed_from_u64`). Each uniform variate takes the top 53 bits
//! of one `next_u64` output, `u = (w >> 11) * 2^-53`, and is mapped affinely
//! onto the target interval. Positions are drawn first (particle-major, axis
//! minor), then velocities in the same order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{pairwise_geometry, SimState};

/// Closed interval `[lo, hi]` applied to every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn symmetric(half_width: f64) -> Self {
        Self::new(-half_width, half_width)
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub n: usize,
    pub dim: usize,
    pub pos_box: Interval,
    pub vel_box: Interval,
    pub seed: u64,
}

impl InitConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n < 2 {
            return Err(ModelError::InvalidParams(format!(
                "particle count must be >= 2, got {}",
                self.n
            )));
        }
        if self.dim < 1 {
            return Err(ModelError::InvalidParams("dimension must be >= 1".into()));
        }
        if !self.pos_box.is_valid() || !self.vel_box.is_valid() {
            return Err(ModelError::InvalidParams(
                "sampling boxes must be finite, non-empty intervals".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform variate in `[0, 1)` from the top 53 bits of a 64-bit word.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sample_initial(config: &InitConfig) -> Result<SimState, ModelError> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let len = config.n * config.dim;
    let mut draw = |iv: Interval| iv.lo + (iv.hi - iv.lo) * unit_f64(&mut rng);
    let x: Vec<f64> = (0..len).map(|_| draw(config.pos_box)).collect();
    let v: Vec<f64> = (0..len).map(|_| draw(config.vel_box)).collect();
    SimState::new(0.0, config.n, config.dim, x, v)
}

/// Subtracts the mean position and mean velocity.
pub fn galilean_normalize(state: &SimState) -> SimState {
    let mut out = state.clone();
    let inv_n = 1.0 / state.n as f64;
    for (data, sums) in [(&mut out.x, state.position_sum()), (&mut out.v, state.velocity_sum())] {
        for row in data.chunks_exact_mut(state.dim) {
            for (c, s) in row.iter_mut().zip(&sums) {
                *c -= s * inv_n;
            }
        }
    }
    out
}

/// The closest pair when it violates the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionViolation {
    pub i: usize,
    pub j: usize,
    pub r: f64,
}

/// `Ok` iff every pairwise distance exceeds `floor`.
pub fn assert_noncollisional(state: &SimState, floor: f64) -> Result<(), CollisionViolation> {
    match pairwise_geometry(state).min_pair() {
        Some((i, j, r)) if !(r > floor) => Err(CollisionViolation { i, j, r }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, dim: usize, seed: u64) -> InitConfig {
        InitConfig {
            n,
            dim,
            pos_box: Interval::symmetric(5.0),
            vel_box: Interval::symmetric(5.0),
            seed,
        }
    }

    #[test]
    fn chacha8_reference_words() {
        // first outputs of ChaCha8 seeded via seed_from_u64(0); pinned so a
        // generator change cannot silently alter every experiment
        let mut rng = seeded_rng(0);
        let words: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        let again: Vec<u64> = {
            let mut r = seeded_rng(0);
            (0..3).map(|_| r.next_u64()).collect()
        };
        assert_eq!(words, again);
        assert_eq!(words, REFERENCE_SEED0.to_vec());
    }

    const REFERENCE_SEED0: [u64; 3] = [13080132717333068652, 8594738769458413623, 12896916468484187878];

    #[test]
    fn same_seed_same_state() {
        let a = sample_initial(&cfg(10, 2, 7)).unwrap();
        let b = sample_initial(&cfg(10, 2, 7)).unwrap();
        assert_eq!(a, b);
        let c = sample_initial(&cfg(10, 2, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn samples_within_box() {
        let s = sample_initial(&cfg(10, 2, 1)).unwrap();
        assert_eq!(s.t, 0.0);
        assert!(s.x.iter().chain(&s.v).all(|c| (-5.0..=5.0).contains(c)));

        let mut c = cfg(10, 1, 3);
        c.vel_box = Interval::symmetric(2.0);
        let s = sample_initial(&c).unwrap();
        assert!(s.v.iter().all(|c| (-2.0..=2.0).contains(c)));
    }

    #[test]
    fn uniform_mean_monte_carlo() {
        let mut rng = seeded_rng(12345);
        let iv = Interval::symmetric(5.0);
        let m = 100_000;
        let mean = (0..m).map(|_| iv.lo + (iv.hi - iv.lo) * unit_f64(&mut rng)).sum::<f64>() / m as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(sample_initial(&cfg(1, 2, 0)).is_err());
        let mut c = cfg(3, 2, 0);
        c.pos_box = Interval::new(1.0, 1.0);
        assert!(sample_initial(&c).is_err());
    }

    #[test]
    fn normalize_small_case() {
        let s = SimState::from_1d(&[1.0, 3.0], &[2.0, 0.0]).unwrap();
        let n = galilean_normalize(&s);
        assert_eq!(n.x, vec![-1.0, 1.0]);
        assert_eq!(n.v, vec![1.0, -1.0]);
        let again = galilean_normalize(&n);
        assert_eq!(again, n);
    }

    #[test]
    fn noncollisional_checks() {
        let s = SimState::from_1d(&[0.0, 1.0], &[0.0; 2]).unwrap();
        assert!(assert_noncollisional(&s, 1e-6).is_ok());
        let s = SimState::from_1d(&[0.0, 0.0], &[0.0; 2]).unwrap();
        assert_eq!(
            assert_noncollisional(&s, 1e-6),
            Err(CollisionViolation { i: 0, j: 1, r: 0.0 })
        );
        let s = SimState::from_1d(&[0.0, 1e-9], &[0.0; 2]).unwrap();
        assert!(assert_noncollisional(&s, 1e-6).is_err());
    }
}
