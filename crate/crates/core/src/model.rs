//! State, parameters, communication kernels and right-hand sides of the
//! Cucker-Smale system with bonding force.
//!
//! Two variants are provided. The *simplified* system couples velocity
//! alignment with a radial bonding force that pushes every pair towards the
//! distance `2R`:
//!
//! ```text
//! dx_i/dt = v_i
//! dv_i/dt = K1/N Σ_j ψ(r_ij)(v_j - v_i) + K2/N Σ_j (r_ij - 2R)/(2 r_ij) (x_j - x_i)
//! ```
//!
//! The *original* system adds a velocity-projection term
//! `K̃/N Σ_j [(v_i - v_j)·(x_i - x_j)] / (2 r_ij²) (x_j - x_i)`.
//!
//! Every pairwise contribution is computed once per unordered pair and
//! applied with opposite signs to both particles, so `Σ_i dv_i` vanishes up
//! to rounding.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Distances at or below this value are treated as singular.
pub const DEFAULT_R_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `ψ(s) = s^-α`, α ≥ 1.
    Singular,
    /// `ψ(s) = (1 + s)^-α`, α > 0.
    Regular,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Singular => "singular",
            KernelKind::Regular => "regular",
        }
    }
}

/// Communication weight ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub alpha: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, alpha: f64) -> Result<Self, ModelError> {
        let spec = Self { kind, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn singular(alpha: f64) -> Result<Self, ModelError> {
        Self::new(KernelKind::Singular, alpha)
    }

    pub fn regular(alpha: f64) -> Result<Self, ModelError> {
        Self::new(KernelKind::Regular, alpha)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.alpha.is_finite() {
            return Err(ModelError::InvalidKernel(format!(
                "alpha must be finite, got {}",
                self.alpha
            )));
        }
        match self.kind {
            KernelKind::Singular if self.alpha < 1.0 => Err(ModelError::InvalidKernel(format!(
                "singular kernel requires alpha >= 1, got {}",
                self.alpha
            ))),
            KernelKind::Regular if self.alpha <= 0.0 => Err(ModelError::InvalidKernel(format!(
                "regular kernel requires alpha > 0, got {}",
                self.alpha
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.kind == KernelKind::Singular
    }

    /// Evaluates ψ(s). Fails for `s <= 0` (or NaN): such a value means a
    /// collided pair reached the kernel.
    pub fn eval(&self, s: f64) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::KernelDomain { s });
        }
        Ok(self.eval_unchecked(s))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        let base = match self.kind {
            KernelKind::Singular => s,
            KernelKind::Regular => 1.0 + s,
        };
        // integer exponents are the common case and powi is exact-er and faster
        if self.alpha == 1.0 {
            1.0 / base
        } else if self.alpha.fract() == 0.0 && self.alpha.abs() < 64.0 {
            base.powi(-(self.alpha as i32))
        } else {
            base.powf(-self.alpha)
        }
    }
}

/// Free function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, s: f64) -> Result<f64, ModelError> {
    spec.eval(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Alignment, velocity projection and radial bonding.
    Original,
    /// Alignment and radial bonding only.
    Simplified,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Simplified => "simplified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub kernel: KernelSpec,
    /// Alignment strength K₁.
    pub k1: f64,
    /// Bonding strength K₂.
    pub k2: f64,
    /// Velocity-projection strength K̃. Ignored by the simplified variant.
    pub k_tilde: f64,
    /// Target half-distance R.
    pub big_r: f64,
    pub n: usize,
    pub dim: usize,
}

impl ModelParams {
    /// Parameters with all coupling constants set to one.
    pub fn unit(variant: Variant, kernel: KernelSpec, big_r: f64, n: usize, dim: usize) -> Self {
        Self {
            variant,
            kernel,
            k1: 1.0,
            k2: 1.0,
            k_tilde: 1.0,
            big_r,
            n,
            dim,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.kernel.validate()?;
        if self.n < 2 {
            return Err(ModelError::InvalidParams(format!(
                "particle count must be >= 2, got {}",
                self.n
            )));
        }
        if self.dim < 1 {
            return Err(ModelError::InvalidParams("dimension must be >= 1".into()));
        }
        if !(self.big_r > 0.0 && self.big_r.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "R must be positive and finite, got {}",
                self.big_r
            )));
        }
        for (name, value) in [("k1", self.k1), ("k2", self.k2), ("k_tilde", self.k_tilde)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidParams(format!(
                    "{name} must be non-negative and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// K̃ as seen by the right-hand side: zero for the simplified variant.
    pub fn effective_k_tilde(&self) -> f64 {
        match self.variant {
            Variant::Original => self.k_tilde,
            Variant::Simplified => 0.0,
        }
    }
}

/// Positions and velocities of `n` particles in `dim` dimensions, stored
/// row-major (`x[i * dim + k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub n: usize,
    pub dim: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl SimState {
    pub fn new(t: f64, n: usize, dim: usize, x: Vec<f64>, v: Vec<f64>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidState("dimension must be >= 1".into()));
        }
        if x.len() != n * dim || v.len() != n * dim {
            return Err(ModelError::InvalidState(format!(
                "expected {} coordinates per array, got x: {}, v: {}",
                n * dim,
                x.len(),
                v.len()
            )));
        }
        let state = Self { t, n, dim, x, v };
        if !state.is_finite() {
            return Err(ModelError::InvalidState("non-finite entry".into()));
        }
        Ok(state)
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(x: &[f64], v: &[f64]) -> Result<Self, ModelError> {
        Self::new(0.0, x.len(), 1, x.to_vec(), v.to_vec())
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    pub fn position_sum(&self) -> Vec<f64> {
        column_sums(&self.x, self.dim)
    }

    pub fn velocity_sum(&self) -> Vec<f64> {
        column_sums(&self.v, self.dim)
    }

    pub fn check_shape(&self, params: &ModelParams) -> Result<(), ModelError> {
        if self.n != params.n || self.dim != params.dim {
            return Err(ModelError::InvalidState(format!(
                "state is {}x{}, parameters expect {}x{}",
                self.n, self.dim, params.n, params.dim
            )));
        }
        Ok(())
    }
}

fn column_sums(data: &[f64], dim: usize) -> Vec<f64> {
    let mut sums = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (s, c) in sums.iter_mut().zip(row) {
            *s += c;
        }
    }
    sums
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Time derivative of a [`SimState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub dx: Vec<f64>,
    pub dv: Vec<f64>,
}

impl Derivative {
    pub fn acceleration(&self, i: usize, dim: usize) -> &[f64] {
        &self.dv[i * dim..(i + 1) * dim]
    }
}

/// Relative positions, velocities and distances for every ordered pair.
///
/// The upper triangle is computed and mirrored with a sign flip, so
/// `x_ij == -x_ji` and `r_ij == r_ji` hold bit-for-bit.
#[derive(Debug, Clone)]
pub struct PairTable {
    n: usize,
    dim: usize,
    r: Vec<f64>,
    dx: Vec<f64>,
    dv: Vec<f64>,
}

impl PairTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `r_ij = |x_i - x_j|`, zero on the diagonal.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    /// `x_ij = x_i - x_j`.
    pub fn x_rel(&self, i: usize, j: usize) -> &[f64] {
        let off = (i * self.n + j) * self.dim;
        &self.dx[off..off + self.dim]
    }

    /// `v_ij = v_i - v_j`.
    pub fn v_rel(&self, i: usize, j: usize) -> &[f64] {
        let off = (i * self.n + j) * self.dim;
        &self.dv[off..off + self.dim]
    }

    /// Iterates `(i, j, r_ij)` over unordered pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.r(i, j))))
    }

    /// Closest pair, or `None` when `n < 2`.
    pub fn min_pair(&self) -> Option<(usize, usize, f64)> {
        self.pairs().fold(None, |best, p| match best {
            Some((_, _, r)) if r <= p.2 => best,
            _ => Some(p),
        })
    }

    pub fn max_distance(&self) -> f64 {
        self.pairs().map(|p| p.2).fold(0.0, f64::max)
    }

    pub fn max_relative_speed(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                best = best.max(norm(self.v_rel(i, j)));
            }
        }
        best
    }

    pub fn is_collisional(&self) -> bool {
        self.pairs().any(|p| p.2 == 0.0)
    }
}

pub fn pairwise_geometry(state: &SimState) -> PairTable {
    let (n, dim) = (state.n, state.dim);
    let mut r = vec![0.0; n * n];
    let mut dx = vec![0.0; n * n * dim];
    let mut dv = vec![0.0; n * n * dim];
    for i in 0..n {
        for j in i + 1..n {
            let ij = (i * n + j) * dim;
            let ji = (j * n + i) * dim;
            let mut sq = 0.0;
            for k in 0..dim {
                let a = state.x[i * dim + k] - state.x[j * dim + k];
                let b = state.v[i * dim + k] - state.v[j * dim + k];
                dx[ij + k] = a;
                dx[ji + k] = -a;
                dv[ij + k] = b;
                dv[ji + k] = -b;
                sq += a * a;
            }
            let d = sq.sqrt();
            r[i * n + j] = d;
            r[j * n + i] = d;
        }
    }
    PairTable { n, dim, r, dx, dv }
}

/// Right-hand side of the variant selected by `params`, with the default
/// singularity floor.
pub fn rhs(state: &SimState, params: &ModelParams) -> Result<Derivative, ModelError> {
    rhs_with_floor(state, params, DEFAULT_R_FLOOR)
}

pub fn rhs_simplified(state: &SimState, params: &ModelParams) -> Result<Derivative, ModelError> {
    accelerate(state, params, 0.0, DEFAULT_R_FLOOR)
}

pub fn rhs_original(state: &SimState, params: &ModelParams) -> Result<Derivative, ModelError> {
    accelerate(state, params, params.k_tilde, DEFAULT_R_FLOOR)
}

/// Like [`rhs`] but with an explicit singularity floor.
///
/// Any pair with `0 < r_ij <= r_floor` is rejected. An exactly coincident
/// pair is rejected under the singular kernel; under the regular kernel its
/// bonding and projection summands are taken to be zero.
pub fn rhs_with_floor(
    state: &SimState,
    params: &ModelParams,
    r_floor: f64,
) -> Result<Derivative, ModelError> {
    accelerate(state, params, params.effective_k_tilde(), r_floor)
}

fn accelerate(
    state: &SimState,
    params: &ModelParams,
    k_tilde: f64,
    r_floor: f64,
) -> Result<Derivative, ModelError> {
    state.check_shape(params)?;
    let pairs = pairwise_geometry(state);
    let (n, dim) = (state.n, state.dim);
    let inv_n = 1.0 / n as f64;
    let align = params.k1 * inv_n;
    let bond = params.k2 * inv_n;
    let project = k_tilde * inv_n;
    let two_r = 2.0 * params.big_r;
    let singular = params.kernel.is_singular();

    let mut dv = vec![0.0; n * dim];
    let mut f = vec![0.0; dim];
    for i in 0..n {
        for j in i + 1..n {
            let r = pairs.r(i, j);
            let coincident = r == 0.0;
            if (coincident && singular) || (!coincident && r <= r_floor) {
                return Err(ModelError::Singularity { i, j, r });
            }
            // x_ij, v_ij; (x_j - x_i) = -x_ij
            let xij = pairs.x_rel(i, j);
            let vij = pairs.v_rel(i, j);
            let psi = if coincident {
                params.kernel.eval_unchecked(0.0)
            } else {
                params.kernel.eval_unchecked(r)
            };
            let (bond_coef, proj_coef) = if coincident {
                (0.0, 0.0)
            } else {
                let dot: f64 = xij.iter().zip(vij).map(|(a, b)| a * b).sum();
                (bond * (r - two_r) / (2.0 * r), project * dot / (2.0 * r * r))
            };
            // force on i; j receives the negation
            for k in 0..dim {
                f[k] = -align * psi * vij[k] - bond_coef * xij[k] - proj_coef * xij[k];
            }
            for k in 0..dim {
                dv[i * dim + k] += f[k];
                dv[j * dim + k] -= f[k];
            }
        }
    }
    Ok(Derivative {
        dx: state.v.clone(),
        dv,
    })
}
