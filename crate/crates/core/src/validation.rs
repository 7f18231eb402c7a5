//! Statistical checks of the exact samplers against closed-form oracles.
//!
//! The radial process of Brownian motion on `S^d` satisfies
//! `E[cos r_t] = exp(-d t / 2)` (first-moment ODE of the Wright-Fisher SDE),
//! `E[tan^2(r_t/2)] <= 2 d t` and, before the cut locus, `E[r_t^2] <= d t`.
//! `A_inf(t)` draws are compared to the series probabilities with a
//! chi-square test, and the transition density is integrated numerically.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::brownian::{BrownianError, BrownianSampler, IncrementMode};
use crate::geometry::{dot, uniform_on_sphere};
use crate::wright_fisher::{
    AncestralProcess, DensityFromZero, SeriesTolerances, WrightFisherError, WrightFisherSampler,
};

/// Pass/fail of one statistical or numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub standard_error: Option<f64>,
    pub target: f64,
    /// Allowed deviation (two-sided checks) or slack above the bound
    /// (one-sided checks).
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn two_sided(
        name: String,
        observed: f64,
        se: Option<f64>,
        target: f64,
        threshold: f64,
    ) -> Self {
        Self {
            passed: (observed - target).abs() <= threshold,
            name,
            observed,
            standard_error: se,
            target,
            threshold,
        }
    }

    fn upper_bound(name: String, observed: f64, se: f64, bound: f64, slack: f64) -> Self {
        Self {
            passed: observed <= bound + slack,
            name,
            observed,
            standard_error: Some(se),
            target: bound,
            threshold: slack,
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Radial statistics of `samples` exact increments on `S^d` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSample {
    pub cosines: Vec<f64>,
    pub angles: Vec<f64>,
    pub exact: bool,
}

pub fn sample_radial<R: Rng + ?Sized>(
    d: usize,
    t: f64,
    samples: usize,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<RadialSample, BrownianError> {
    let mut sampler = BrownianSampler::new(d, t, IncrementMode::exact(), tol)?;
    let z = uniform_on_sphere(d + 1, rng);
    let mut cosines = Vec::with_capacity(samples);
    let mut angles = Vec::with_capacity(samples);
    let mut exact = true;
    for _ in 0..samples {
        let y = sampler.sample_sphere(&z, rng)?;
        exact &= y.exact;
        let c = dot(&y.value, &z).clamp(-1.0, 1.0);
        cosines.push(c);
        angles.push(crate::geometry::factor_angle(&y.value, &z));
    }
    Ok(RadialSample {
        cosines,
        angles,
        exact,
    })
}

/// `|mean cos r - exp(-d t / 2)| <= 3 SE`.
pub fn cosine_moment_check(d: usize, t: f64, sample: &RadialSample) -> Check {
    let (mean, se) = mean_and_se(&sample.cosines);
    Check::two_sided(
        format!("cos_moment d={d} t={t}"),
        mean,
        Some(se),
        (-(d as f64) * t / 2.0).exp(),
        3.0 * se,
    )
}

/// `mean tan^2(r/2) <= 2 d t + 3 SE`.
pub fn tan_squared_check(d: usize, t: f64, sample: &RadialSample) -> Check {
    // tan^2(r/2) = (1 - cos r) / (1 + cos r)
    let values: Vec<f64> = sample
        .cosines
        .iter()
        .map(|c| (1.0 - c) / (1.0 + c))
        .collect();
    let (mean, se) = mean_and_se(&values);
    Check::upper_bound(
        format!("tan_squared_bound d={d} t={t}"),
        mean,
        se,
        2.0 * d as f64 * t,
        3.0 * se,
    )
}

/// `mean r^2 <= d t + 3 SE`.
pub fn radial_square_check(d: usize, t: f64, sample: &RadialSample) -> Check {
    let values: Vec<f64> = sample.angles.iter().map(|r| r * r).collect();
    let (mean, se) = mean_and_se(&values);
    Check::upper_bound(
        format!("radial_square_bound d={d} t={t}"),
        mean,
        se,
        d as f64 * t,
        3.0 * se,
    )
}

/// Mean of `WF_{0,t}(d/2, d/2)` draws against `(1 - exp(-d t / 2)) / 2`.
pub fn wf_mean_check<R: Rng + ?Sized>(
    d: usize,
    t: f64,
    samples: usize,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Check, WrightFisherError> {
    let half = d as f64 / 2.0;
    let mut sampler = WrightFisherSampler::new(half, half, t, tol)?;
    let values = (0..samples)
        .map(|_| sampler.sample(0.0, rng).map(|y| y.value))
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, se) = mean_and_se(&values);
    Ok(Check::two_sided(
        format!("wf_mean d={d} t={t}"),
        mean,
        Some(se),
        (1.0 - (-(d as f64) * t / 2.0).exp()) / 2.0,
        3.0 * se,
    ))
}

/// Result of a chi-square goodness-of-fit test of `A_inf(t)` draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareCheck {
    pub theta: f64,
    pub t: f64,
    pub samples: usize,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub significance: f64,
    /// Bins as `(first m, last m or None for the open tail, observed, expected)`.
    pub bins: Vec<(u64, Option<u64>, u64, f64)>,
    pub passed: bool,
}

/// Bins `0..` greedily so that every bin has expected count at least 5;
/// the last bin is open-ended.
fn chi_square_bins(pmf: &[f64], samples: usize) -> Vec<(u64, Option<u64>, f64)> {
    let n = samples as f64;
    let mut bins: Vec<(u64, Option<u64>, f64)> = Vec::new();
    let mut start = 0u64;
    let mut acc = 0.0;
    let mut used = 0.0;
    for (m, q) in pmf.iter().enumerate() {
        acc += q;
        if n * acc >= 5.0 {
            bins.push((start, Some(m as u64), n * acc));
            used += acc;
            start = m as u64 + 1;
            acc = 0.0;
        }
    }
    let tail = (1.0 - used).max(0.0);
    if n * tail >= 5.0 || bins.is_empty() {
        bins.push((start, None, n * tail));
    } else {
        let last = bins.last_mut().expect("non-empty");
        last.1 = None;
        last.2 += n * tail;
    }
    bins
}

pub fn chi_square_ainfty<R: Rng + ?Sized>(
    theta: f64,
    t: f64,
    samples: usize,
    significance: f64,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<ChiSquareCheck, WrightFisherError> {
    let mut process = AncestralProcess::new(theta, t, tol)?;
    let pmf = process.pmf_table(tol.tail_tol)?;
    let layout = chi_square_bins(&pmf, samples);
    let mut observed = vec![0u64; layout.len()];
    for _ in 0..samples {
        let m = process.sample(rng)?.value;
        let idx = layout
            .iter()
            .position(|&(_, hi, _)| hi.is_none_or(|hi| m <= hi))
            .expect("last bin is open");
        observed[idx] += 1;
    }
    let statistic: f64 = layout
        .iter()
        .zip(&observed)
        .map(|(&(_, _, e), &o)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = layout.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let critical = dist.inverse_cdf(1.0 - significance);
    let p_value = 1.0 - dist.cdf(statistic);
    Ok(ChiSquareCheck {
        theta,
        t,
        samples,
        statistic,
        degrees_of_freedom: dof,
        critical_value: critical,
        p_value,
        significance,
        bins: layout
            .iter()
            .zip(&observed)
            .map(|(&(lo, hi, e), &o)| (lo, hi, o, e))
            .collect(),
        passed: statistic <= critical,
    })
}

/// `sum_m q_m = 1` within `tolerance` over the tabulated support.
pub fn qm_normalization_check(
    theta: f64,
    t: f64,
    tolerance: f64,
    tol: SeriesTolerances,
) -> Result<Check, WrightFisherError> {
    let total: f64 = AncestralProcess::new(theta, t, tol)?
        .pmf_table(tol.tail_tol)?
        .iter()
        .sum();
    Ok(Check::two_sided(
        format!("qm_normalization theta={theta} t={t}"),
        total,
        None,
        1.0,
        tolerance,
    ))
}

/// Composite Simpson rule for `int_0^1 g(y) dy` after the substitution
/// `y = (1 - cos(pi s)) / 2`, which removes square-root endpoint behaviour.
pub fn integrate_unit_interval<F: FnMut(f64) -> f64>(mut g: F, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = 1.0 / panels as f64;
    let pi = std::f64::consts::PI;
    let mut eval = |s: f64| {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let y = (1.0 - (pi * s).cos()) / 2.0;
        g(y) * pi / 2.0 * (pi * s).sin()
    };
    let mut sum = eval(0.0) + eval(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * eval(i as f64 * h);
    }
    sum * h / 3.0
}

/// `int f = 1` and `int y f = (1 - exp(-d t / 2)) / 2`, both within
/// `tolerance`.
pub fn density_checks(
    d: u32,
    t: f64,
    tolerance: f64,
    tol: SeriesTolerances,
) -> Result<Vec<Check>, WrightFisherError> {
    let f = DensityFromZero::new(d, t, tol)?;
    let density = |y: f64| f.eval(y).unwrap_or(0.0);
    let mass = integrate_unit_interval(density, 4000);
    let mean = integrate_unit_interval(|y| y * density(y), 4000);
    Ok(vec![
        Check::two_sided(
            format!("density_normalization d={d} t={t}"),
            mass,
            None,
            1.0,
            tolerance,
        ),
        Check::two_sided(
            format!("density_mean d={d} t={t}"),
            mean,
            None,
            (1.0 - (-(d as f64) * t / 2.0).exp()) / 2.0,
            tolerance,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_beta_kernels() {
        // int_0^1 sqrt(y (1 - y)) dy = pi / 8
        let v = integrate_unit_interval(|y| (y * (1.0 - y)).sqrt(), 200);
        assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-10);
        let v = integrate_unit_interval(|y| y * y, 1000);
        assert!((v - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn bins_have_enough_mass() {
        let pmf = [0.001, 0.2, 0.5, 0.25, 0.04, 0.009];
        let bins = chi_square_bins(&pmf, 1000);
        assert!(bins.iter().all(|b| b.2 >= 5.0));
        assert_eq!(bins.first().unwrap().0, 0);
        assert!(bins.last().unwrap().1.is_none());
        let total: f64 = bins.iter().map(|b| b.2).sum();
        assert!((total - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn mean_and_se_basic() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_and_se(&[1.0]).1.is_infinite());
    }
}
