//! Riemannian Langevin iteration on the product of spheres:
//!
//! ```text
//! x_hat = exp(x_k, -eta grad F(x_k))
//! x_{k+1} = W(x_hat, 2 eta / beta)
//! ```
//!
//! where `W(x, t)` is an independent Brownian increment on every factor.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

use crate::brownian::{langevin_time, BrownianError, BrownianSampler, IncrementMode};
use crate::geometry::{exp_map, geodesic_distance, GeometryError, PointOnM};
use crate::objective::{Objective, ObjectiveError};
use crate::wright_fisher::{Draw, SeriesTolerances};

/// Largest pre-renormalization norm error tolerated after a step.
pub const DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangevinError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("factor norms drifted by {0} in one step")]
    NormDrift(f64),
    #[error(transparent)]
    Brownian(#[from] BrownianError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub eta: f64,
    pub beta: f64,
    pub iterations: u64,
    pub mode: IncrementMode,
    pub record_every: u64,
    pub tolerances: SeriesTolerances,
}

impl LangevinConfig {
    pub fn new(eta: f64, beta: f64, iterations: u64) -> Self {
        Self {
            eta,
            beta,
            iterations,
            mode: IncrementMode::default(),
            record_every: 1,
            tolerances: SeriesTolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<(), LangevinError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LangevinError::InvalidConfig(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(LangevinError::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.iterations == 0 {
            return Err(LangevinError::InvalidConfig(
                "iterations must be >= 1".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(LangevinError::InvalidConfig(
                "record_every must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Brownian horizon of each step.
    pub fn horizon(&self) -> Result<f64, LangevinError> {
        Ok(langevin_time(self.eta, self.beta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub position: PointOnM,
    pub step_index: u64,
    pub best_value: f64,
    pub best_position: PointOnM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: u64,
    pub value: f64,
    /// Geodesic distance between the positions before and after this step.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: LangevinConfig,
    pub seed: Option<u64>,
    pub records: Vec<Record>,
    pub best_value: f64,
    pub best_step: u64,
    pub best_position: PointOnM,
    pub final_value: f64,
    pub final_position: PointOnM,
    /// True iff every Brownian increment was drawn exactly.
    pub exact: bool,
    pub approximate_steps: u64,
    /// Excluded from serialization so that reports are reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// A running chain that owns its Brownian sampler, so the series cache is
/// reused across steps.
pub struct LangevinChain<'a, O: Objective + ?Sized> {
    objective: &'a O,
    config: LangevinConfig,
    sampler: BrownianSampler,
    state: ChainState,
    current_value: f64,
}

impl<'a, O: Objective + ?Sized> LangevinChain<'a, O> {
    pub fn new(
        objective: &'a O,
        x0: PointOnM,
        config: LangevinConfig,
    ) -> Result<Self, LangevinError> {
        config.validate()?;
        let sampler = BrownianSampler::new(
            x0.shape().d(),
            config.horizon()?,
            config.mode,
            config.tolerances,
        )?;
        let value = objective.value(&x0)?;
        Ok(Self {
            objective,
            config,
            sampler,
            state: ChainState {
                best_position: x0.clone(),
                position: x0,
                step_index: 0,
                best_value: value,
            },
            current_value: value,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn current_value(&self) -> f64 {
        self.current_value
    }

    /// Advances one iteration and returns whether the noise was exact.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool, LangevinError> {
        let grad = self.objective.riemannian_grad(&self.state.position)?;
        let next = step_with(
            &self.state.position,
            &grad.scaled(-1.0),
            self.config.eta,
            &mut self.sampler,
            rng,
        )?;
        self.state.position = next.value;
        self.state.step_index += 1;
        self.current_value = self.objective.value(&self.state.position)?;
        if self.current_value < self.state.best_value {
            self.state.best_value = self.current_value;
            self.state.best_position = self.state.position.clone();
        }
        Ok(next.exact)
    }
}

fn step_with<R: Rng + ?Sized>(
    x: &PointOnM,
    direction: &crate::geometry::TangentVector,
    eta: f64,
    sampler: &mut BrownianSampler,
    rng: &mut R,
) -> Result<Draw<PointOnM>, LangevinError> {
    let moved = exp_map(x, direction, eta)?;
    let mut next = sampler.sample_product(&moved, rng)?;
    let drift = next.value.renormalize();
    if drift >= DRIFT_LIMIT {
        return Err(LangevinError::NormDrift(drift));
    }
    Ok(next)
}

/// One Langevin iteration: geodesic gradient step, then a Brownian
/// increment of horizon `2 eta / beta`.
pub fn langevin_step<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    x: &PointOnM,
    eta: f64,
    beta: f64,
    mode: IncrementMode,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Draw<PointOnM>, LangevinError> {
    let t = langevin_time(eta, beta)?;
    let mut sampler = BrownianSampler::new(x.shape().d(), t, mode, tol)?;
    let grad = objective.riemannian_grad(x)?;
    step_with(x, &grad.scaled(-1.0), eta, &mut sampler, rng)
}

/// Runs `config.iterations` steps from `x0`, recording every
/// `config.record_every` steps (and always the last one).
pub fn run_chain<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    x0: PointOnM,
    config: LangevinConfig,
    rng: &mut R,
) -> Result<RunReport, LangevinError> {
    let start = Instant::now();
    let mut chain = LangevinChain::new(objective, x0, config)?;
    let mut records = vec![Record {
        step: 0,
        value: chain.current_value,
        distance: 0.0,
    }];
    let mut best_step = 0;
    let mut approximate_steps = 0;
    for _ in 0..config.iterations {
        let before = chain.state.position.clone();
        let previous_best = chain.state.best_value;
        if !chain.step(rng)? {
            approximate_steps += 1;
        }
        let k = chain.state.step_index;
        if chain.state.best_value < previous_best {
            best_step = k;
        }
        if k % config.record_every == 0 || k == config.iterations {
            records.push(Record {
                step: k,
                value: chain.current_value,
                distance: geodesic_distance(&before, &chain.state.position)?,
            });
        }
    }
    let state = chain.state;
    Ok(RunReport {
        config,
        seed: None,
        records,
        best_value: state.best_value,
        best_step,
        best_position: state.best_position,
        final_value: chain.current_value,
        final_position: state.position,
        exact: approximate_steps == 0,
        approximate_steps,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of the deterministic Riemannian gradient-descent baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgdOutcome {
    pub point: PointOnM,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Riemannian gradient descent with Armijo backtracking along geodesics.
/// Every accepted step strictly decreases the objective.
pub fn rgd_baseline<O: Objective + ?Sized>(
    objective: &O,
    x0: &PointOnM,
    step: f64,
    max_iters: u64,
    grad_tol: f64,
) -> Result<RgdOutcome, LangevinError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(LangevinError::InvalidConfig(format!(
            "step must be positive, got {step}"
        )));
    }
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: u32 = 60;
    let mut x = x0.clone();
    let (mut value, mut grad) = objective.value_and_grad(&x)?;
    let mut iterations = 0;
    while iterations < max_iters {
        let gnorm = grad.norm();
        if gnorm <= grad_tol {
            return Ok(RgdOutcome {
                point: x,
                value,
                grad_norm: gnorm,
                iterations,
                converged: true,
            });
        }
        let descent = grad.scaled(-1.0);
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = exp_map(&x, &descent, alpha)?;
            trial.renormalize();
            let trial_value = objective.value(&trial)?;
            if trial_value <= value - ARMIJO * alpha * gnorm * gnorm && trial_value < value {
                accepted = Some((trial, trial_value));
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((next, _)) => {
                x = next;
                (value, grad) = objective.value_and_grad(&x)?;
            }
            // No decrease is possible at working precision.
            None => break,
        }
    }
    let grad_norm = grad.norm();
    Ok(RgdOutcome {
        point: x,
        value,
        grad_norm,
        iterations,
        converged: grad_norm <= grad_tol,
    })
}
