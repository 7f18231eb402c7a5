//! Brownian motion increments on `S^d` and on the product manifold.
//!
//! The exact increment draws the radial coordinate `X ~ WF_{0,t}(d/2, d/2)`,
//! so that `cos r = 1 - 2X`, and an independent uniform direction on
//! `S^{d-1}`. The resulting point, built around the pole `e_d`, is carried
//! to the starting point by the Householder reflection that swaps `e_d`
//! and `z`.
//!
//! Time is always standard Brownian time here. The Langevin step size
//! conversion lives in [`langevin_time`] only.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, dot, norm, GeometryError, PointOnM};
use crate::wright_fisher::{Draw, SeriesTolerances, WrightFisherError, WrightFisherSampler};

/// Distance from `e_d` below which the Householder map is replaced by the
/// identity.
const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrownianError {
    #[error("exact increments need sphere dimension d >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("Brownian horizon must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("Langevin parameter {name} must be positive, got {value}")]
    InvalidLangevinParameter { name: &'static str, value: f64 },
    #[error("starting point is not a unit vector (norm {0})")]
    NotUnit(f64),
    #[error("starting point has length {found}, sampler expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    WrightFisher(#[from] WrightFisherError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    /// Wright-Fisher radial draw at every horizon.
    Exact,
    /// Tangent Gaussian pushed through the exponential map when the horizon
    /// is below the threshold; exact otherwise.
    TangentApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementMode {
    pub kind: IncrementKind,
    pub small_t_threshold: f64,
}

impl IncrementMode {
    pub fn exact() -> Self {
        Self {
            kind: IncrementKind::Exact,
            small_t_threshold: SeriesTolerances::default().small_t_threshold,
        }
    }

    pub fn tangent_approx(small_t_threshold: f64) -> Self {
        Self {
            kind: IncrementKind::TangentApprox,
            small_t_threshold,
        }
    }

    fn uses_tangent(&self, t: f64) -> bool {
        self.kind == IncrementKind::TangentApprox && t < self.small_t_threshold
    }
}

impl Default for IncrementMode {
    fn default() -> Self {
        Self::exact()
    }
}

/// Applies `O(z) = I - 2 u u^T`, `u = (e_d - z)/|e_d - z|`, to `w` in place.
/// `O(z)` is orthogonal and maps `e_d` to `z`.
pub fn householder_apply(z: &[f64], w: &mut [f64]) {
    let last = z.len() - 1;
    let mut u: Vec<f64> = z.iter().map(|c| -c).collect();
    u[last] += 1.0;
    let len = norm(&u);
    if len < POLE_TOL {
        return;
    }
    u.iter_mut().for_each(|c| *c /= len);
    let proj = 2.0 * dot(&u, w);
    for (wi, ui) in w.iter_mut().zip(&u) {
        *wi -= proj * ui;
    }
}

/// Reusable sampler for increments of a fixed horizon on `S^d`.
#[derive(Debug, Clone)]
pub struct BrownianSampler {
    d: usize,
    t: f64,
    mode: IncrementMode,
    radial: Option<WrightFisherSampler>,
}

impl BrownianSampler {
    pub fn new(
        d: usize,
        t: f64,
        mode: IncrementMode,
        tol: SeriesTolerances,
    ) -> Result<Self, BrownianError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(BrownianError::InvalidTime(t));
        }
        let radial = if mode.uses_tangent(t) {
            None
        } else {
            if d < 2 {
                return Err(BrownianError::DimensionTooSmall(d));
            }
            let half = d as f64 / 2.0;
            Some(WrightFisherSampler::new(half, half, t, tol)?)
        };
        Ok(Self { d, t, mode, radial })
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn mode(&self) -> IncrementMode {
        self.mode
    }

    /// Whether every draw from this sampler is exact.
    pub fn is_exact(&self) -> bool {
        self.radial.as_ref().is_some_and(|r| r.is_exact())
    }

    /// Writes the increment started at `z` into `out`.
    fn sample_into<R: Rng + ?Sized>(
        &mut self,
        z: &[f64],
        out: &mut [f64],
        rng: &mut R,
    ) -> Result<bool, BrownianError> {
        let dim = self.d + 1;
        match self.radial.as_mut() {
            None => {
                let mut v: Vec<f64> = (0..dim)
                    .map(|_| self.t.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let c = dot(&v, z);
                v.iter_mut().zip(z).for_each(|(vi, zi)| *vi -= c * zi);
                let speed = norm(&v);
                if speed == 0.0 {
                    out.copy_from_slice(z);
                } else {
                    let (s, co) = speed.sin_cos();
                    for ((o, zi), vi) in out.iter_mut().zip(z).zip(&v) {
                        *o = zi * co + vi / speed * s;
                    }
                }
                Ok(false)
            }
            Some(radial) => {
                let x = radial.sample(0.0, rng)?;
                let direction = geometry::uniform_on_sphere(self.d, rng);
                let radius = 2.0 * (x.value * (1.0 - x.value)).sqrt();
                for (o, y) in out.iter_mut().zip(&direction) {
                    *o = radius * y;
                }
                out[self.d] = 1.0 - 2.0 * x.value;
                householder_apply(z, out);
                Ok(x.exact)
            }
        }
    }

    /// Brownian motion on `S^d` at time `t` started from the unit vector `z`.
    pub fn sample_sphere<R: Rng + ?Sized>(
        &mut self,
        z: &[f64],
        rng: &mut R,
    ) -> Result<Draw<Vec<f64>>, BrownianError> {
        if z.len() != self.d + 1 {
            return Err(BrownianError::LengthMismatch {
                expected: self.d + 1,
                found: z.len(),
            });
        }
        let nrm = norm(z);
        if (nrm - 1.0).abs() > geometry::UNIT_TOL {
            return Err(BrownianError::NotUnit(nrm));
        }
        let mut out = vec![0.0; z.len()];
        let exact = self.sample_into(z, &mut out, rng)?;
        Ok(Draw { value: out, exact })
    }

    /// Independent increments on every factor of `x`.
    pub fn sample_product<R: Rng + ?Sized>(
        &mut self,
        x: &PointOnM,
        rng: &mut R,
    ) -> Result<Draw<PointOnM>, BrownianError> {
        let shape = x.shape();
        if shape.d() != self.d {
            return Err(BrownianError::LengthMismatch {
                expected: self.d + 1,
                found: shape.ambient(),
            });
        }
        let mut out = vec![0.0; shape.len()];
        let mut exact = true;
        for (z, o) in x.factors().zip(out.chunks_mut(shape.ambient())) {
            exact &= self.sample_into(z, o, rng)?;
        }
        Ok(Draw {
            value: PointOnM::from_raw(shape, out),
            exact,
        })
    }
}

pub fn brownian_increment_sphere<R: Rng + ?Sized>(
    z: &[f64],
    t: f64,
    mode: IncrementMode,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Draw<Vec<f64>>, BrownianError> {
    let d = z
        .len()
        .checked_sub(1)
        .filter(|&d| d >= 1)
        .ok_or(BrownianError::LengthMismatch {
            expected: 2,
            found: z.len(),
        })?;
    BrownianSampler::new(d, t, mode, tol)?.sample_sphere(z, rng)
}

pub fn brownian_increment_product<R: Rng + ?Sized>(
    x: &PointOnM,
    t: f64,
    mode: IncrementMode,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Draw<PointOnM>, BrownianError> {
    BrownianSampler::new(x.shape().d(), t, mode, tol)?.sample_product(x, rng)
}

/// Brownian horizon `2 eta / beta` of one Langevin step.
pub fn langevin_time(eta: f64, beta: f64) -> Result<f64, BrownianError> {
    for (name, value) in [("eta", eta), ("beta", beta)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(BrownianError::InvalidLangevinParameter { name, value });
        }
    }
    Ok(2.0 * eta / beta)
}
