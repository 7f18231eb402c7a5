//! Exact simulation of the Wright-Fisher diffusion.
//!
//! The law of a Wright-Fisher diffusion with mutation parameters
//! `(theta1, theta2)` at time `t` is a Beta mixture driven by the integer
//! variable `A_inf(t)` (the number of surviving lineages of the
//! coalescent with mutation). Its probabilities are given by alternating
//! series
//!
//! ```text
//! q_m(t) = sum_{i >= 0} (-1)^i b_{m+i}(m),
//! b_k(m) = a_{km} exp(-k (k + theta - 1) t / 2),
//! a_{km} = (theta + 2k - 1) / (m! (k - m)!) * Gamma(theta + m + k - 1) / Gamma(theta + m),
//! ```
//!
//! whose terms decrease monotonically once the index passes `C_m`. Partial
//! sums truncated after an odd (even) index past that point are lower
//! (upper) bounds, which is what makes an exact sampler possible: a
//! uniform draw is compared against brackets of the CDF that are refined
//! until the draw is classified.
//!
//! For very small `t` the number of lineages is of order `2/t` and the
//! series suffers catastrophic cancellation, so [`AncestralProcess`]
//! switches to a discrete normal approximation below
//! [`SeriesTolerances::small_t_threshold`] and marks its draws as inexact.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrightFisherError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("coefficient index requires m <= k, got k={k}, m={m}")]
    InvalidIndex { k: u64, m: u64 },
    #[error("time {t} is below the exact-series threshold {threshold}")]
    BelowSmallTime { t: f64, threshold: f64 },
    #[error("alternating series did not resolve within {max_terms} terms ({context})")]
    MaxTermsExceeded {
        max_terms: usize,
        context: &'static str,
    },
    #[error("series terms for m={m} increased at index {index} past the monotone cutoff")]
    NotMonotone { m: u64, index: usize },
    #[error("failed to build {0} distribution")]
    Distribution(&'static str),
}

type Result<T> = std::result::Result<T, WrightFisherError>;

/// Numerical controls for the alternating series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTolerances {
    /// A truncated series is accepted once the next term is below this.
    pub tail_tol: f64,
    /// Upper bound on series terms touched by a single query.
    pub max_terms: usize,
    /// Below this diffusion time the exact sampler is replaced by an
    /// approximation.
    pub small_t_threshold: f64,
}

impl SeriesTolerances {
    pub fn new(tail_tol: f64, max_terms: usize, small_t_threshold: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol.is_finite()) {
            return Err(WrightFisherError::InvalidParameter {
                name: "tail_tol",
                value: tail_tol,
            });
        }
        if max_terms == 0 {
            return Err(WrightFisherError::InvalidParameter {
                name: "max_terms",
                value: 0.0,
            });
        }
        if !(small_t_threshold > 0.0 && small_t_threshold.is_finite()) {
            return Err(WrightFisherError::InvalidParameter {
                name: "small_t_threshold",
                value: small_t_threshold,
            });
        }
        Ok(Self {
            tail_tol,
            max_terms,
            small_t_threshold,
        })
    }
}

impl Default for SeriesTolerances {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            max_terms: 1_000_000,
            small_t_threshold: 0.05,
        }
    }
}

/// A random draw annotated with whether it came from an exact sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw<T> {
    pub value: T,
    pub exact: bool,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(WrightFisherError::InvalidParameter { name, value })
    }
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Natural log of `a_{km}`. The `k = m = 0` coefficient is `1` for every
/// `theta > 0` (the continuous extension of `(theta-1) Gamma(theta-1)`).
pub fn log_coefficient_a(k: u64, m: u64, theta: f64) -> Result<f64> {
    check_positive("theta", theta)?;
    if m > k {
        return Err(WrightFisherError::InvalidIndex { k, m });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let (kf, mf) = (k as f64, m as f64);
    Ok(
        (theta + 2.0 * kf - 1.0).ln() - ln_factorial(m) - ln_factorial(k - m)
            + ln_gamma(theta + mf + kf - 1.0)
            - ln_gamma(theta + mf),
    )
}

/// Natural log of `b_k(m) = a_{km} exp(-k (k + theta - 1) t / 2)`.
pub fn log_coefficient_b(k: u64, m: u64, t: f64, theta: f64) -> Result<f64> {
    check_positive("t", t)?;
    let kf = k as f64;
    Ok(log_coefficient_a(k, m, theta)? - kf * (kf + theta - 1.0) * t / 2.0)
}

/// Cached terms of the series for `q_m`.
#[derive(Debug, Clone)]
struct SeriesRow {
    m: u64,
    /// `C_m`: first offset `i` with `b_{m+i+1}(m) < b_{m+i}(m)`.
    cutoff: usize,
    log_terms: Vec<f64>,
    /// `partial[i] = sum_{j <= i} (-1)^j b_{m+j}(m)`.
    partial: Vec<f64>,
}

impl SeriesRow {
    fn push(&mut self, log_term: f64) {
        let term = log_term.exp();
        let signed = if self.log_terms.len().is_multiple_of(2) {
            term
        } else {
            -term
        };
        let prev = self.partial.last().copied().unwrap_or(0.0);
        self.log_terms.push(log_term);
        self.partial.push(prev + signed);
    }
}

/// Discrete normal stand-in for `A_inf(t)` at small `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalApproximation {
    pub mean: f64,
    pub std_dev: f64,
    /// True when the moments were summed from the series rather than the
    /// small-time asymptotic formula.
    pub from_series: bool,
}

/// Asymptotic mean and variance of `A_inf(t)` as `t -> 0`.
pub fn small_time_moments(theta: f64, t: f64) -> (f64, f64) {
    let beta = (theta - 1.0) * t / 2.0;
    if beta.abs() < 1e-8 {
        return (2.0 / t, 2.0 / (3.0 * t));
    }
    let eta = beta / beta.exp_m1();
    let mean = 2.0 * eta / t;
    let var = mean * (eta + beta).powi(2) * (1.0 + eta / (eta + beta) - 2.0 * eta) / (beta * beta);
    (mean, var)
}

/// The mixing variable `A_inf(t)` for a fixed `(theta, t)`, with a lazily
/// grown cache of series coefficients. Owned by one thread at a time.
#[derive(Debug, Clone)]
pub struct AncestralProcess {
    theta: f64,
    t: f64,
    tol: SeriesTolerances,
    rows: Vec<SeriesRow>,
    approximation: Option<NormalApproximation>,
}

/// Largest `2/t` for which the small-time path tries to sum the series for
/// its moments before falling back to the asymptotic formula.
const SERIES_MOMENT_MAX_MEAN: f64 = 400.0;

impl AncestralProcess {
    pub fn new(theta: f64, t: f64, tol: SeriesTolerances) -> Result<Self> {
        check_positive("theta", theta)?;
        check_positive("t", t)?;
        Ok(Self {
            theta,
            t,
            tol,
            rows: Vec::new(),
            approximation: None,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Whether draws come from the exact alternating-series sampler.
    pub fn is_exact(&self) -> bool {
        self.t >= self.tol.small_t_threshold
    }

    fn log_b(&self, k: u64, m: u64) -> f64 {
        let (kf, mf) = (k as f64, m as f64);
        let log_a = if k == 0 {
            0.0
        } else {
            (self.theta + 2.0 * kf - 1.0).ln() - ln_factorial(m) - ln_factorial(k - m)
                + ln_gamma(self.theta + mf + kf - 1.0)
                - ln_gamma(self.theta + mf)
        };
        log_a - kf * (kf + self.theta - 1.0) * self.t / 2.0
    }

    fn build_row(&self, m: u64) -> Result<SeriesRow> {
        let mut row = SeriesRow {
            m,
            cutoff: 0,
            log_terms: Vec::new(),
            partial: Vec::new(),
        };
        row.push(self.log_b(m, m));
        loop {
            let i = row.log_terms.len();
            if i > self.tol.max_terms {
                return Err(WrightFisherError::MaxTermsExceeded {
                    max_terms: self.tol.max_terms,
                    context: "locating monotone cutoff",
                });
            }
            let next = self.log_b(m + i as u64, m);
            let decreasing = next < row.log_terms[i - 1];
            row.push(next);
            if decreasing {
                row.cutoff = i - 1;
                return Ok(row);
            }
        }
    }

    fn ensure_row(&mut self, m: usize) -> Result<()> {
        while self.rows.len() <= m {
            let row = self.build_row(self.rows.len() as u64)?;
            self.rows.push(row);
        }
        Ok(())
    }

    /// Makes sure row `m` holds terms up to offset `index` inclusive.
    fn ensure_terms(&mut self, m: usize, index: usize) -> Result<()> {
        self.ensure_row(m)?;
        while self.rows[m].log_terms.len() <= index {
            let i = self.rows[m].log_terms.len();
            let mu = self.rows[m].m;
            let next = self.log_b(mu + i as u64, mu);
            let row = &mut self.rows[m];
            if i > row.cutoff && next > row.log_terms[i - 1] {
                return Err(WrightFisherError::NotMonotone { m: mu, index: i });
            }
            row.push(next);
        }
        Ok(())
    }

    /// Lower and upper brackets of `q_m` using `2k + 1` and `2k` as the last
    /// included offsets.
    fn bracket(&mut self, m: usize, k: usize) -> Result<(f64, f64)> {
        self.ensure_terms(m, 2 * k + 1)?;
        let row = &self.rows[m];
        Ok((row.partial[2 * k + 1], row.partial[2 * k]))
    }

    fn cutoff(&mut self, m: usize) -> Result<usize> {
        self.ensure_row(m)?;
        Ok(self.rows[m].cutoff)
    }

    /// `q_m(t)` summed until the series is monotone and the next term is
    /// below `tail_tol`. Requires the exact regime.
    pub fn qm(&mut self, m: u64) -> Result<f64> {
        if !self.is_exact() {
            return Err(WrightFisherError::BelowSmallTime {
                t: self.t,
                threshold: self.tol.small_t_threshold,
            });
        }
        self.qm_unchecked(m as usize)
    }

    fn qm_unchecked(&mut self, m: usize) -> Result<f64> {
        let cutoff = self.cutoff(m)?;
        let mut i = cutoff + 1;
        loop {
            if i > self.tol.max_terms {
                return Err(WrightFisherError::MaxTermsExceeded {
                    max_terms: self.tol.max_terms,
                    context: "summing q_m",
                });
            }
            self.ensure_terms(m, i)?;
            let row = &self.rows[m];
            if row.log_terms[i] < self.tol.tail_tol.ln() {
                return Ok(row.partial[i - 1].clamp(0.0, 1.0));
            }
            i += 1;
        }
    }

    /// `q_0, ..., q_M` where `M` is the first index past the mean at which
    /// the probabilities are decreasing and `q_M < mass_tol`.
    pub fn pmf_table(&mut self, mass_tol: f64) -> Result<Vec<f64>> {
        if !self.is_exact() {
            return Err(WrightFisherError::BelowSmallTime {
                t: self.t,
                threshold: self.tol.small_t_threshold,
            });
        }
        self.pmf_table_unchecked(mass_tol)
    }

    fn pmf_table_unchecked(&mut self, mass_tol: f64) -> Result<Vec<f64>> {
        let (mean, _) = small_time_moments(self.theta, self.t);
        let mut table: Vec<f64> = Vec::new();
        loop {
            let m = table.len();
            if m > self.tol.max_terms {
                return Err(WrightFisherError::MaxTermsExceeded {
                    max_terms: self.tol.max_terms,
                    context: "tabulating q_m",
                });
            }
            let q = self.qm_unchecked(m)?;
            let decreasing = table.last().is_some_and(|&prev| q < prev);
            table.push(q);
            if m as f64 > mean && decreasing && q < mass_tol {
                return Ok(table);
            }
        }
    }

    fn approximation(&mut self) -> Result<NormalApproximation> {
        if let Some(a) = self.approximation {
            return Ok(a);
        }
        let approx = self.series_moments().unwrap_or_else(|| {
            let (mean, var) = small_time_moments(self.theta, self.t);
            NormalApproximation {
                mean,
                std_dev: var.max(0.0).sqrt(),
                from_series: false,
            }
        });
        self.approximation = Some(approx);
        Ok(approx)
    }

    /// Moments from the series when it can be summed reliably; `None` when
    /// cancellation or the term budget make the sum untrustworthy.
    fn series_moments(&mut self) -> Option<NormalApproximation> {
        if 2.0 / self.t > SERIES_MOMENT_MAX_MEAN {
            return None;
        }
        let table = self.pmf_table_unchecked(1e-10).ok()?;
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return None;
        }
        let mean: f64 = table.iter().enumerate().map(|(m, q)| m as f64 * q).sum();
        let second: f64 = table
            .iter()
            .enumerate()
            .map(|(m, q)| (m as f64).powi(2) * q)
            .sum();
        let var = second - mean * mean;
        (var >= 0.0 && mean.is_finite()).then(|| NormalApproximation {
            mean,
            std_dev: var.sqrt(),
            from_series: true,
        })
    }

    /// One draw of `A_inf(t)`.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Draw<u64>> {
        if !self.is_exact() {
            let approx = self.approximation()?;
            let z: f64 = rng.sample(StandardNormal);
            let value = (approx.mean + approx.std_dev * z).round().max(0.0) as u64;
            return Ok(Draw {
                value,
                exact: false,
            });
        }
        let u: f64 = rng.random();
        let mut depths: Vec<usize> = Vec::new();
        let mut m = 0usize;
        loop {
            let cutoff = self.cutoff(m)?;
            depths.push(cutoff.div_ceil(2));
            loop {
                let mut lower = 0.0;
                let mut upper = 0.0;
                let mut touched = 0usize;
                for (j, &k) in depths.iter().enumerate() {
                    let (lo, hi) = self.bracket(j, k)?;
                    lower += lo;
                    upper += hi;
                    touched += 2 * k + 2;
                }
                if touched > self.tol.max_terms {
                    return Err(WrightFisherError::MaxTermsExceeded {
                        max_terms: self.tol.max_terms,
                        context: "classifying uniform draw",
                    });
                }
                debug_assert!(lower <= upper + 1e-15);
                if lower > u {
                    return Ok(Draw {
                        value: m as u64,
                        exact: true,
                    });
                }
                if upper < u {
                    break;
                }
                // Brackets collapsed to the same float: the CDF is known to
                // working precision.
                if upper <= lower {
                    if u < lower {
                        return Ok(Draw {
                            value: m as u64,
                            exact: true,
                        });
                    }
                    break;
                }
                depths.iter_mut().for_each(|k| *k += 1);
            }
            m += 1;
        }
    }
}

/// Parameters of a Wright-Fisher transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrightFisherParams {
    pub theta1: f64,
    pub theta2: f64,
    pub x0: f64,
    pub t: f64,
}

impl WrightFisherParams {
    pub fn new(theta1: f64, theta2: f64, x0: f64, t: f64) -> Result<Self> {
        check_positive("theta1", theta1)?;
        check_positive("theta2", theta2)?;
        check_positive("t", t)?;
        if !(0.0..=1.0).contains(&x0) {
            return Err(WrightFisherError::InvalidParameter {
                name: "x0",
                value: x0,
            });
        }
        Ok(Self {
            theta1,
            theta2,
            x0,
            t,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta1 + self.theta2
    }
}

/// Sampler for `WF_{x,t}(theta1, theta2)` at a fixed time, reusable across
/// starting points.
#[derive(Debug, Clone)]
pub struct WrightFisherSampler {
    theta1: f64,
    theta2: f64,
    ancestral: AncestralProcess,
}

impl WrightFisherSampler {
    pub fn new(theta1: f64, theta2: f64, t: f64, tol: SeriesTolerances) -> Result<Self> {
        check_positive("theta1", theta1)?;
        check_positive("theta2", theta2)?;
        Ok(Self {
            theta1,
            theta2,
            ancestral: AncestralProcess::new(theta1 + theta2, t, tol)?,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.ancestral.is_exact()
    }

    pub fn ancestral(&mut self) -> &mut AncestralProcess {
        &mut self.ancestral
    }

    /// `M ~ A_inf(t)`, `L ~ Binomial(M, x0)`, `Y ~ Beta(theta1 + L, theta2 + M - L)`.
    pub fn sample<R: Rng + ?Sized>(&mut self, x0: f64, rng: &mut R) -> Result<Draw<f64>> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(WrightFisherError::InvalidParameter {
                name: "x0",
                value: x0,
            });
        }
        let lineages = self.ancestral.sample(rng)?;
        let m = lineages.value;
        let l = if m == 0 || x0 == 0.0 {
            0
        } else if x0 == 1.0 {
            m
        } else {
            Binomial::new(m, x0)
                .map_err(|_| WrightFisherError::Distribution("binomial"))?
                .sample(rng)
        };
        let beta = Beta::new(self.theta1 + l as f64, self.theta2 + (m - l) as f64)
            .map_err(|_| WrightFisherError::Distribution("beta"))?;
        Ok(Draw {
            value: beta.sample(rng).clamp(0.0, 1.0),
            exact: lineages.exact,
        })
    }
}

/// One draw of `A_inf(t)` for mutation parameter `theta`.
pub fn sample_ainfty<R: Rng + ?Sized>(
    theta: f64,
    t: f64,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Draw<u64>> {
    AncestralProcess::new(theta, t, tol)?.sample(rng)
}

/// `q_m(t)`, the probability that `A_inf(t) = m`.
pub fn qm_pmf(theta: f64, t: f64, m: u64, tol: SeriesTolerances) -> Result<f64> {
    AncestralProcess::new(theta, t, tol)?.qm(m)
}

/// One draw from the Wright-Fisher transition law.
pub fn sample_wf<R: Rng + ?Sized>(
    params: WrightFisherParams,
    tol: SeriesTolerances,
    rng: &mut R,
) -> Result<Draw<f64>> {
    WrightFisherSampler::new(params.theta1, params.theta2, params.t, tol)?.sample(params.x0, rng)
}

/// Transition density of `WF(d/2, d/2)` started at zero, as a Beta mixture
/// weighted by a tabulated `q_m(t)`.
#[derive(Debug, Clone)]
pub struct DensityFromZero {
    half_d: f64,
    weights: Vec<f64>,
    log_norms: Vec<f64>,
}

impl DensityFromZero {
    pub fn new(d: u32, t: f64, tol: SeriesTolerances) -> Result<Self> {
        if d < 2 {
            return Err(WrightFisherError::InvalidParameter {
                name: "d",
                value: d as f64,
            });
        }
        let mut process = AncestralProcess::new(d as f64, t, tol)?;
        let weights = process.pmf_table(tol.tail_tol)?;
        let half_d = d as f64 / 2.0;
        let log_norms = (0..weights.len())
            .map(|m| ln_beta(half_d, half_d + m as f64))
            .collect();
        Ok(Self {
            half_d,
            weights,
            log_norms,
        })
    }

    /// Number of mixture components retained.
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 1.0) {
            return Err(WrightFisherError::InvalidParameter {
                name: "y",
                value: y,
            });
        }
        let (ly, l1y) = (y.ln(), (-y).ln_1p());
        Ok(self
            .weights
            .iter()
            .zip(&self.log_norms)
            .enumerate()
            .map(|(m, (q, ln_b))| {
                q * ((self.half_d - 1.0) * ly + (self.half_d + m as f64 - 1.0) * l1y - ln_b).exp()
            })
            .sum())
    }
}

/// `f(y; t)`, the density at `y` of `WF(d/2, d/2)` at time `t` from `0`.
pub fn wf_density_from_zero(y: f64, d: u32, t: f64, tol: SeriesTolerances) -> Result<f64> {
    DensityFromZero::new(d, t, tol)?.eval(y)
}
