//! Closed-form parameter prescriptions for the Langevin algorithm on the
//! Burer-Monteiro objective: inverse temperature, log-Sobolev constant,
//! step size, iteration count and the resulting KL-divergence bound.
//!
//! The prescribed constants are extremely conservative at desk scale, so a
//! [`TheoryPlan`] also carries a practical preset that keeps the prescribed
//! temperature but uses a gradient-stable step and a user-chosen iteration
//! budget.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("{name} = {value} is outside its valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

type Result<T> = std::result::Result<T, TheoryError>;

fn out_of_range(name: &'static str, value: f64, range: &'static str) -> TheoryError {
    TheoryError::OutOfRange { name, value, range }
}

pub const DEFAULT_H0: f64 = 10.0;
pub const DEFAULT_PRACTICAL_ITERATIONS: u64 = 2000;
pub const DEFAULT_ETA_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub n: u64,
    pub d: u64,
    pub eps: f64,
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub lambda_min: f64,
    pub lambda_tilde: f64,
    /// Bound on the initial KL divergence.
    pub h0: f64,
    pub alpha_override: Option<f64>,
    /// Gradient-norm constant for the optional feasibility checklist.
    pub c_f: Option<f64>,
}

impl TheoryInputs {
    /// Unit constants, `lambda_min = lambda_tilde = 1`, `H0 = 10`.
    pub fn new(n: u64, d: u64, eps: f64, delta: f64) -> Self {
        Self {
            n,
            d,
            eps,
            delta,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            lambda_min: 1.0,
            lambda_tilde: 1.0,
            h0: DEFAULT_H0,
            alpha_override: None,
            c_f: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(out_of_range("n", 0.0, ">= 1"));
        }
        if self.d == 0 {
            return Err(out_of_range("d", 0.0, ">= 1"));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(out_of_range("eps", self.eps, "(0, 1]"));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(out_of_range("delta", self.delta, "(0, 1/2)"));
        }
        for (name, v) in [("K1", self.k1), ("K2", self.k2), ("K3", self.k3)] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(out_of_range(name, v, ">= 1"));
            }
        }
        for (name, v) in [
            ("lambda_min", self.lambda_min),
            ("lambda_tilde", self.lambda_tilde),
            ("H0", self.h0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(out_of_range(name, v, "> 0"));
            }
        }
        if let Some(a) = self.alpha_override {
            if !(a > 0.0 && a.is_finite()) {
                return Err(out_of_range("alpha_override", a, "> 0"));
            }
        }
        if let Some(c) = self.c_f {
            if !(c > 0.0 && c.is_finite()) {
                return Err(out_of_range("C_F", c, "> 0"));
            }
        }
        Ok(())
    }

    fn nd(&self) -> f64 {
        self.n as f64 * self.d as f64
    }

    /// `log(n K2 / (eps delta))`, shared by the temperature and iteration
    /// prescriptions.
    fn log_confidence(&self) -> f64 {
        (self.n as f64).ln() + self.k2.ln() - self.eps.ln() - self.delta.ln()
    }
}

/// `beta = (3 n d / eps) log(n K2 / (eps delta))`.
pub fn plan_beta(inputs: &TheoryInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(3.0 * inputs.nd() / inputs.eps * inputs.log_confidence())
}

/// `1/alpha = 3395 K2 n beta max(lambda_min^-2, 1) max(lambda_tilde^-2, lambda_tilde^-1/2)`,
/// unless `alpha_override` is set.
pub fn lsi_alpha(inputs: &TheoryInputs, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(out_of_range("beta", beta, "> 0"));
    }
    if !(inputs.lambda_min > 0.0 && inputs.lambda_min.is_finite()) {
        return Err(out_of_range("lambda_min", inputs.lambda_min, "> 0"));
    }
    if !(inputs.lambda_tilde > 0.0 && inputs.lambda_tilde.is_finite()) {
        return Err(out_of_range("lambda_tilde", inputs.lambda_tilde, "> 0"));
    }
    if let Some(a) = inputs.alpha_override {
        return Ok(a);
    }
    let lm = inputs.lambda_min.powi(-2).max(1.0);
    let lt = inputs
        .lambda_tilde
        .powi(-2)
        .max(inputs.lambda_tilde.powf(-0.5));
    // Multiply the large factors in log space so n, beta up to 1e4, 1e12
    // stay finite.
    let log_inv =
        3395f64.ln() + inputs.k2.ln() + (inputs.n as f64).ln() + beta.ln() + lm.ln() + lt.ln();
    let direct = 3395.0 * inputs.k2 * inputs.n as f64 * beta * lm * lt;
    Ok(if direct.is_finite() && direct > 0.0 {
        1.0 / direct
    } else {
        (-log_inv).exp()
    })
}

/// `eta = min(1, 1/alpha, alpha delta^2 / (22 n d K1^2 K2^2 beta))`.
pub fn plan_eta(inputs: &TheoryInputs, alpha: f64, beta: f64) -> f64 {
    let third = alpha * inputs.delta * inputs.delta
        / (22.0 * inputs.nd() * inputs.k1 * inputs.k1 * inputs.k2 * inputs.k2 * beta);
    1f64.min(1.0 / alpha).min(third)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationPlan {
    pub iterations: u64,
    /// Unrounded right-hand side of the prescription.
    pub exact_bound: f64,
    pub warning: Option<String>,
}

/// `k = ceil((66 / (eps delta^2)) max(1, alpha^-2) (n d K1 K2)^2
///          log(n K2 / (eps delta)) log(H0 / delta^2))`.
pub fn plan_iterations(inputs: &TheoryInputs, alpha: f64) -> Result<IterationPlan> {
    inputs.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(out_of_range("alpha", alpha, "> 0"));
    }
    let log_h = inputs.h0.ln() - 2.0 * inputs.delta.ln();
    if log_h <= 0.0 {
        return Ok(IterationPlan {
            iterations: 1,
            exact_bound: 0.0,
            warning: Some(format!(
                "H0 = {} <= delta^2 = {}: initialization already meets the target",
                inputs.h0,
                inputs.delta * inputs.delta
            )),
        });
    }
    let ndkk = inputs.nd() * inputs.k1 * inputs.k2;
    let bound = 66.0 / (inputs.eps * inputs.delta * inputs.delta)
        * (alpha * alpha).recip().max(1.0)
        * ndkk
        * ndkk
        * inputs.log_confidence()
        * log_h;
    let (iterations, warning) = if bound.is_finite() && bound < u64::MAX as f64 {
        (bound.ceil().max(1.0) as u64, None)
    } else {
        (
            u64::MAX,
            Some("iteration bound exceeds u64; saturated".to_string()),
        )
    };
    Ok(IterationPlan {
        iterations,
        exact_bound: bound,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlBound {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// `H0 exp(-alpha k eta) + 22 n d K1^2 K2^2 eta beta / alpha`. Violations of
/// `eta <= min(1, 1/alpha)` or `beta >= 1` are reported, not rejected.
#[allow(clippy::too_many_arguments)]
pub fn kl_bound(
    k: f64,
    eta: f64,
    alpha: f64,
    beta: f64,
    n: u64,
    d: u64,
    k1: f64,
    k2: f64,
    h0: f64,
) -> KlBound {
    let mut warnings = Vec::new();
    if eta > 1f64.min(1.0 / alpha) {
        warnings.push(format!("eta = {eta} exceeds min(1, 1/alpha)"));
    }
    if beta < 1.0 {
        warnings.push(format!("beta = {beta} is below 1"));
    }
    let nd = n as f64 * d as f64;
    let value = h0 * (-alpha * k * eta).exp() + 22.0 * nd * k1 * k1 * k2 * k2 * eta * beta / alpha;
    KlBound { value, warnings }
}

/// Sufficient conditions on `a^2` and `beta` for the log-Sobolev constant,
/// evaluated at the smallest admissible `a^2` for a user-supplied `C_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityChecklist {
    pub c_f: f64,
    /// `6 K2 n d / C_F^2`.
    pub a_squared_min: f64,
    /// `max(a^2 4 K3^2 / lambda_min^2, a^2 (K3 + 2 K2)^2, 24 K2 n d log(6 K2 n d))`.
    pub beta_min: f64,
    pub beta_satisfied: bool,
}

pub fn feasibility_checklist(inputs: &TheoryInputs, beta: f64) -> Option<FeasibilityChecklist> {
    let c_f = inputs.c_f?;
    let k2nd = inputs.k2 * inputs.nd();
    let a2 = 6.0 * k2nd / (c_f * c_f);
    let beta_min = (a2 * 4.0 * inputs.k3 * inputs.k3 / (inputs.lambda_min * inputs.lambda_min))
        .max(a2 * (inputs.k3 + 2.0 * inputs.k2).powi(2))
        .max(24.0 * k2nd * (6.0 * k2nd).ln());
    Some(FeasibilityChecklist {
        c_f,
        a_squared_min: a2,
        beta_min,
        beta_satisfied: beta >= beta_min,
    })
}

/// Desk-scale parameters: prescribed `beta`, `eta = min(1, eta_scale / K2)`
/// and a fixed iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PracticalPreset {
    pub beta: f64,
    pub eta: f64,
    pub iterations: u64,
}

pub fn practical_preset(
    inputs: &TheoryInputs,
    eta_scale: f64,
    iterations: u64,
) -> Result<PracticalPreset> {
    if !(eta_scale > 0.0 && eta_scale.is_finite()) {
        return Err(out_of_range("eta_scale", eta_scale, "> 0"));
    }
    if iterations == 0 {
        return Err(out_of_range("iterations", 0.0, ">= 1"));
    }
    Ok(PracticalPreset {
        beta: plan_beta(inputs)?,
        eta: (eta_scale / inputs.k2).min(1.0),
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPlan {
    pub inputs: TheoryInputs,
    pub beta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub iterations_k: u64,
    pub kl_bound_at_k: f64,
    pub practical: PracticalPreset,
    pub feasibility: Option<FeasibilityChecklist>,
    /// Formula and source for every field.
    pub provenance: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Evaluates every prescription for `inputs`. `defaults_used` lists inputs
/// that were not supplied by the caller, so they can be flagged.
pub fn plan(
    inputs: &TheoryInputs,
    eta_scale: f64,
    practical_iterations: u64,
    defaults_used: &[&str],
) -> Result<TheoryPlan> {
    inputs.validate()?;
    let beta = plan_beta(inputs)?;
    let alpha = lsi_alpha(inputs, beta)?;
    let eta = plan_eta(inputs, alpha, beta);
    let iterations = plan_iterations(inputs, alpha)?;
    let kl = kl_bound(
        iterations.iterations as f64,
        eta,
        alpha,
        beta,
        inputs.n,
        inputs.d,
        inputs.k1,
        inputs.k2,
        inputs.h0,
    );
    let mut warnings = kl.warnings;
    warnings.extend(iterations.warning.clone());
    if inputs.d < 3 {
        warnings.push(format!(
            "d = {} < 3: the convergence guarantees assume d >= 3",
            inputs.d
        ));
    }
    for name in defaults_used {
        warnings.push(format!("{name} not supplied; default value used"));
    }

    let mut provenance = BTreeMap::new();
    let mut note = |k: &str, v: &str| provenance.insert(k.to_string(), v.to_string());
    note(
        "beta",
        "Gibbs high-probability bound theorem: beta = (3nd/eps) log(n K2 / (eps delta))",
    );
    note(
        "alpha",
        if inputs.alpha_override.is_some() {
            "user override of the log-Sobolev constant"
        } else {
            "log-Sobolev inequality theorem for the Burer-Monteiro Gibbs measure: 1/alpha = 3395 K2 n beta max(lambda_min^-2, 1) max(lambda_tilde^-2, lambda_tilde^-1/2)"
        },
    );
    note(
        "eta",
        "runtime complexity corollary under log-Sobolev: eta = min(1, 1/alpha, alpha delta^2 / (22 n d K1^2 K2^2 beta))",
    );
    note(
        "iterations_k",
        "runtime complexity corollary under log-Sobolev: k = ceil((66/(eps delta^2)) max(1, alpha^-2) (n d K1 K2)^2 log(n K2/(eps delta)) log(H0/delta^2))",
    );
    note(
        "kl_bound_at_k",
        "finite-iteration KL bound theorem: H0 e^(-alpha k eta) + 22 n d K1^2 K2^2 eta beta / alpha",
    );
    note(
        "practical",
        "desk-scale preset: prescribed beta, eta = min(1, eta_scale / K2), fixed iteration budget; not covered by the guarantees",
    );
    note(
        "K1,K2,K3",
        "conservative Lipschitz bounds from the max absolute row sum of A (derived, not given in closed form by the theory)",
    );
    note(
        "lambda_min,lambda_tilde",
        "Hessian spectral constants at critical points; not computable a priori, supplied by the user (default 1)",
    );
    note(
        "H0",
        "bound on the initial KL divergence for uniform initialization; supplied by the user (default 10)",
    );
    if inputs.c_f.is_some() {
        note(
            "feasibility",
            "side conditions of the log-Sobolev theorem: a^2 >= 6 K2 n d / C_F^2 and beta >= max(a^2 4K3^2/lambda_min^2, a^2 (K3+2K2)^2, 24 K2 n d log(6 K2 n d))",
        );
    }

    Ok(TheoryPlan {
        inputs: inputs.clone(),
        beta,
        alpha,
        eta,
        iterations_k: iterations.iterations,
        kl_bound_at_k: kl.value,
        practical: practical_preset(inputs, eta_scale, practical_iterations)?,
        feasibility: feasibility_checklist(inputs, beta),
        provenance,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Expected values below were computed with 50-digit arithmetic (mpmath).

    #[test]
    fn beta_example_and_shape() {
        let mut i = TheoryInputs::new(10, 5, 0.5, 0.1);
        let beta = plan_beta(&i).unwrap();
        assert_relative_eq!(beta, 1_589.495_209_964_411, max_relative = 1e-12);
        assert_relative_eq!(beta, 300.0 * 200f64.ln(), max_relative = 1e-12);
        i.eps = 0.25;
        assert!(plan_beta(&i).unwrap() > 2.0 * beta);
        i.eps = 0.5;
        i.delta = 1e-300;
        assert!(plan_beta(&i).unwrap() > 1e5);
    }

    #[test]
    fn beta_range_errors() {
        for (eps, delta) in [(0.0, 0.1), (1.5, 0.1), (0.5, 0.5), (0.5, 0.0)] {
            assert!(plan_beta(&TheoryInputs::new(10, 5, eps, delta)).is_err());
        }
    }

    #[test]
    fn alpha_example_and_branches() {
        let mut i = TheoryInputs::new(2, 3, 0.5, 0.1);
        assert_relative_eq!(
            lsi_alpha(&i, 10.0).unwrap(),
            1.0 / 67_900.0,
            max_relative = 1e-12
        );
        i.lambda_tilde = 4.0;
        // lambda_tilde >= 1: max picks lambda_tilde^-1/2 = 1/2
        assert_relative_eq!(
            lsi_alpha(&i, 10.0).unwrap(),
            2.0 / 67_900.0,
            max_relative = 1e-12
        );
        i.lambda_tilde = 0.5;
        // lambda_tilde < 1: max picks lambda_tilde^-2 = 4
        assert_relative_eq!(
            lsi_alpha(&i, 10.0).unwrap(),
            1.0 / (4.0 * 67_900.0),
            max_relative = 1e-12
        );
        let a1 = lsi_alpha(&i, 10.0).unwrap();
        let a2 = lsi_alpha(&i, 30.0).unwrap();
        assert_relative_eq!(a1 / a2, 3.0, max_relative = 1e-12);
        i.alpha_override = Some(0.25);
        assert_eq!(lsi_alpha(&i, 10.0).unwrap(), 0.25);
        i.lambda_min = 0.0;
        assert!(lsi_alpha(&i, 10.0).is_err());
    }

    #[test]
    fn alpha_finite_at_scale() {
        let mut i = TheoryInputs::new(10_000, 10_000, 0.5, 0.1);
        i.lambda_min = 1e-3;
        i.lambda_tilde = 1e-3;
        let a = lsi_alpha(&i, 1e12).unwrap();
        assert!(a.is_finite() && a > 0.0);
    }

    #[test]
    fn eta_branches() {
        let i = TheoryInputs::new(1, 1, 0.5, 0.1);
        assert_eq!(plan_eta(&i, 1.0, 1e-6), 1.0);
        assert_eq!(plan_eta(&i, 2.0, 1e-6), 0.5);
        assert_relative_eq!(plan_eta(&i, 1.0, 22.0), 0.01 / 484.0, max_relative = 1e-12);
        assert_relative_eq!(
            plan_eta(&i, 1.0, 22.0),
            2.066_115_702_479_338_8e-5,
            max_relative = 1e-12
        );
        let mut j = i.clone();
        j.delta = 0.2;
        assert!(plan_eta(&j, 1.0, 22.0) > plan_eta(&i, 1.0, 22.0));
    }

    #[test]
    fn iteration_example() {
        let i = TheoryInputs::new(1, 1, 0.5, 0.1);
        let p = plan_iterations(&i, 1.0).unwrap();
        assert_relative_eq!(p.exact_bound, 273_157.967_637_188_6, max_relative = 1e-12);
        assert_eq!(p.iterations, 273_158);
        let mut j = i.clone();
        j.delta = 0.2;
        assert!(plan_iterations(&j, 1.0).unwrap().iterations < p.iterations);
        let mut k = i.clone();
        k.n = 2;
        let ratio = plan_iterations(&k, 1.0).unwrap().exact_bound / p.exact_bound;
        // (nd)^2 quadruples; the log factor grows from log 20 to log 40.
        assert_relative_eq!(ratio, 4.0 * 40f64.ln() / 20f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn iteration_degenerate_h0() {
        let mut i = TheoryInputs::new(1, 1, 0.5, 0.1);
        i.h0 = 0.005;
        let p = plan_iterations(&i, 1.0).unwrap();
        assert_eq!(p.iterations, 1);
        assert!(p.warning.is_some());
    }

    #[test]
    fn kl_examples() {
        let b = kl_bound(1.0, 1.0, 1.0, 1.0, 1, 1, 1.0, 1.0, 1.0);
        assert_relative_eq!(b.value, 22.367_879_441_171_44, max_relative = 1e-12);
        assert!(b.warnings.is_empty());
        let b0 = kl_bound(0.0, 0.01, 0.5, 4.0, 2, 3, 1.5, 2.0, 7.0);
        assert_relative_eq!(
            b0.value,
            7.0 + 22.0 * 6.0 * 2.25 * 4.0 * 0.01 * 4.0 / 0.5,
            max_relative = 1e-12
        );
        let far = kl_bound(1e9, 0.01, 0.5, 4.0, 2, 3, 1.5, 2.0, 7.0);
        assert_relative_eq!(
            far.value,
            22.0 * 6.0 * 2.25 * 4.0 * 0.01 * 4.0 / 0.5,
            max_relative = 1e-12
        );
        assert_eq!(
            kl_bound(1.0, 2.0, 1.0, 0.5, 1, 1, 1.0, 1.0, 1.0)
                .warnings
                .len(),
            2
        );
    }

    #[test]
    fn plan_is_consistent() {
        let mut i = TheoryInputs::new(5, 3, 0.1, 0.1);
        i.k1 = 8.9;
        i.k2 = 8.0;
        i.k3 = 12.0;
        i.c_f = Some(0.5);
        let p = plan(&i, DEFAULT_ETA_SCALE, 2000, &["H0"]).unwrap();
        assert!(p.eta <= 1f64.min(1.0 / p.alpha));
        assert_eq!(p.alpha, lsi_alpha(&i, p.beta).unwrap());
        assert_eq!(p.practical.beta, p.beta);
        assert_eq!(p.practical.eta, 0.5 / 8.0);
        assert!(p.feasibility.is_some());
        assert!(p.provenance["beta"].contains("Gibbs high-probability bound"));
        assert!(p.warnings.iter().any(|w| w.contains("H0")));
        assert_eq!(p, plan(&i, DEFAULT_ETA_SCALE, 2000, &["H0"]).unwrap());
    }
}
