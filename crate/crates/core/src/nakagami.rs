//! Nakagami distribution: density, CDF, sampling and the two shape estimators.
//!
//! If `x ~ Nakagami(μ, ω)` then `x²` is gamma distributed with shape `μ` and
//! scale `ω / μ`. The CDF, the sampler and the likelihood equation for `μ` are
//! all written in terms of that gamma variable.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::rng::{substream, Domain};
use crate::special;

/// Lower clamp for estimated shape.
pub const MU_MIN: f64 = 0.02;
/// Upper clamp for estimated shape.
pub const MU_MAX: f64 = 100.0;
/// Largest fraction of exact zeros a sample set may hold for the MLE.
pub const MAX_ZERO_FRACTION: f64 = 0.10;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;
const BRACKET: (f64, f64) = (1e-3, 1e3);
const DEGENERATE_SPREAD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NakagamiError {
    #[error("invalid parameters mu={mu} omega={omega}")]
    InvalidParams { mu: f64, omega: f64 },
    #[error("negative argument {0}")]
    NegativeArgument(f64),
    #[error("sample value {value} at index {index} is negative or non-finite")]
    InvalidSample { index: usize, value: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate sample: no spread to estimate shape from")]
    DegenerateSample,
    #[error("sample contains only zeros")]
    ContainsZeroOnly,
    #[error("{zeros} of {n} samples are zero")]
    ExcessiveZeros { zeros: usize, n: usize },
}

/// Shape `mu` and scale `omega` (mean of x²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    mu: f64,
    omega: f64,
}

impl NakagamiParams {
    pub fn new(mu: f64, omega: f64) -> Result<Self, NakagamiError> {
        if mu > 0.0 && omega > 0.0 && mu.is_finite() && omega.is_finite() {
            Ok(Self { mu, omega })
        } else {
            Err(NakagamiError::InvalidParams { mu, omega })
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Rate of the gamma variable x², i.e. μ / ω.
    fn rate(&self) -> f64 {
        self.mu / self.omega
    }
}

/// Envelope samples, all finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self, NakagamiError> {
        if values.is_empty() {
            return Err(NakagamiError::TooFewSamples { needed: 1, got: 0 });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(NakagamiError::InvalidSample { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, NakagamiError> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitQuality {
    pub rmse: f64,
    pub n: usize,
}

/// Result of [`estimate_mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleFit {
    pub params: NakagamiParams,
    /// Newton steps taken; bisection steps are added when the fallback ran.
    pub iterations: usize,
    /// Zero samples excluded from the log-moment.
    pub zeros: usize,
}

pub fn log_pdf(p: &NakagamiParams, x: f64) -> Result<f64, NakagamiError> {
    if x < 0.0 || x.is_nan() {
        return Err(NakagamiError::NegativeArgument(x));
    }
    let power = 2.0 * p.mu - 1.0;
    let log_x_term = if x == 0.0 {
        match power.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Equal) => 0.0,
            Some(std::cmp::Ordering::Greater) => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        }
    } else {
        power * x.ln()
    };
    let rate = p.rate();
    Ok(
        std::f64::consts::LN_2 + p.mu * rate.ln() - special::lgamma_unchecked(p.mu) + log_x_term
            - rate * x * x,
    )
}

pub fn pdf(p: &NakagamiParams, x: f64) -> Result<f64, NakagamiError> {
    log_pdf(p, x).map(f64::exp)
}

/// P(μ, μx²/ω).
pub fn cdf(p: &NakagamiParams, x: f64) -> Result<f64, NakagamiError> {
    if x < 0.0 || x.is_nan() {
        return Err(NakagamiError::NegativeArgument(x));
    }
    Ok(special::gamma_p(p.mu, p.rate() * x * x))
}

/// Inverse CDF by bisection; `q` in [0, 1).
pub fn quantile(p: &NakagamiParams, q: f64) -> Result<f64, NakagamiError> {
    if !(0.0..1.0).contains(&q) {
        return Err(NakagamiError::NegativeArgument(q));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let mut hi = p.omega.sqrt();
    while cdf(p, hi)? < q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(p, mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn log_likelihood(p: &NakagamiParams, s: &SampleSet) -> f64 {
    s.values
        .iter()
        .map(|&x| log_pdf(p, x).unwrap_or(f64::NEG_INFINITY))
        .sum()
}

/// Gamma sampler for x² backing [`sample`] and the phantom generator.
pub(crate) fn sampler(p: &NakagamiParams) -> Gamma<f64> {
    Gamma::new(p.mu, p.omega / p.mu).expect("validated parameters")
}

pub(crate) fn draw<R: Rng + ?Sized>(gamma: &Gamma<f64>, rng: &mut R) -> f64 {
    gamma.sample(rng).sqrt()
}

/// `n` draws, deterministic in `seed`.
pub fn sample(p: &NakagamiParams, n: usize, seed: u64) -> Result<SampleSet, NakagamiError> {
    if n == 0 {
        return Err(NakagamiError::TooFewSamples { needed: 1, got: 0 });
    }
    let gamma = sampler(p);
    let mut rng = substream(seed, Domain::Samples, 0, 0);
    SampleSet::new((0..n).map(|_| draw(&gamma, &mut rng)).collect())
}

fn clamp_mu(mu: f64) -> f64 {
    mu.clamp(MU_MIN, MU_MAX)
}

/// Inverse normalized variance of x²: μ̂ = E[x²]² / Var[x²] (population variance).
pub fn estimate_moments(s: &SampleSet) -> Result<NakagamiParams, NakagamiError> {
    let n = s.len();
    if n < 2 {
        return Err(NakagamiError::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = s.values.iter().map(|x| x * x).sum::<f64>() / nf;
    if mean == 0.0 {
        return Err(NakagamiError::DegenerateSample);
    }
    let var = s.values.iter().map(|x| (x * x - mean).powi(2)).sum::<f64>() / nf;
    if var == 0.0 {
        return Err(NakagamiError::DegenerateSample);
    }
    NakagamiParams::new(clamp_mu(mean * mean / var), mean)
}

/// Maximum-likelihood fit. ω̂ is the mean of x²; μ̂ solves ln μ − ψ(μ) = s*.
pub fn estimate_mle(s: &SampleSet) -> Result<MleFit, NakagamiError> {
    let n = s.len();
    if n < 2 {
        return Err(NakagamiError::TooFewSamples { needed: 2, got: n });
    }
    let mut sum_sq = 0.0;
    let mut sum_sq_pos = 0.0;
    let mut sum_log_pos = 0.0;
    let mut positives = 0usize;
    for &x in &s.values {
        let sq = x * x;
        sum_sq += sq;
        if x > 0.0 {
            sum_sq_pos += sq;
            sum_log_pos += sq.ln();
            positives += 1;
        }
    }
    if positives == 0 {
        return Err(NakagamiError::ContainsZeroOnly);
    }
    let zeros = n - positives;
    if zeros as f64 > MAX_ZERO_FRACTION * n as f64 {
        return Err(NakagamiError::ExcessiveZeros { zeros, n });
    }
    let pf = positives as f64;
    let spread = (sum_sq_pos / pf).ln() - sum_log_pos / pf;
    // also rejects NaN
    if spread.partial_cmp(&DEGENERATE_SPREAD) != Some(std::cmp::Ordering::Greater) {
        return Err(NakagamiError::DegenerateSample);
    }
    let (mu, iterations) = solve_shape(spread);
    let params = NakagamiParams::new(clamp_mu(mu), sum_sq / n as f64)?;
    Ok(MleFit {
        params,
        iterations,
        zeros,
    })
}

/// Root of ln μ − ψ(μ) = spread for spread > 0.
pub fn solve_shape(spread: f64) -> (f64, usize) {
    let f = |mu: f64| special::log_minus_digamma_unchecked(mu) - spread;
    let mut mu = (3.0 - spread + ((spread - 3.0).powi(2) + 24.0 * spread).sqrt()) / (12.0 * spread);
    for it in 1..=NEWTON_MAX_ITER {
        let slope = 1.0 / mu - special::trigamma_unchecked(mu);
        let next = mu - f(mu) / slope;
        if !(next > 0.0 && next < BRACKET.1) || !next.is_finite() {
            let (root, steps) = bisect_shape(f);
            return (root, it + steps);
        }
        let converged = ((next - mu) / next).abs() < NEWTON_TOL;
        mu = next;
        if converged {
            return (mu, it);
        }
    }
    let (root, steps) = bisect_shape(f);
    (root, NEWTON_MAX_ITER + steps)
}

/// f is decreasing, so the root is bracketed whenever f(lo) > 0 > f(hi);
/// otherwise the nearer bracket end is returned and later clamped.
fn bisect_shape(f: impl Fn(f64) -> f64) -> (f64, usize) {
    let (mut lo, mut hi) = BRACKET;
    if f(hi) >= 0.0 {
        return (hi, 0);
    }
    if f(lo) <= 0.0 {
        return (lo, 0);
    }
    let mut steps = 0;
    while (hi - lo) > 1e-13 * hi && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    (0.5 * (lo + hi), steps)
}

/// Empirical-vs-model CDF RMSE: √(Σ_{i=2..n} (F(x₍ᵢ₎) − (i − ½)/n)² / n).
pub fn fit_quality(p: &NakagamiParams, s: &SampleSet) -> Result<FitQuality, NakagamiError> {
    let mut sorted = s.values.clone();
    fit_quality_in_place(p, &mut sorted)
}

/// Same as [`fit_quality`] but sorts the caller's buffer instead of copying it.
pub fn fit_quality_in_place(
    p: &NakagamiParams,
    values: &mut [f64],
) -> Result<FitQuality, NakagamiError> {
    let n = values.len();
    if n < 2 {
        return Err(NakagamiError::TooFewSamples { needed: 2, got: n });
    }
    values.sort_by(f64::total_cmp);
    let nf = n as f64;
    let rate = p.rate();
    let mut acc = 0.0;
    for (i, &x) in values.iter().enumerate().skip(1) {
        let model = special::gamma_p(p.mu, rate * x * x);
        let empirical = (i as f64 + 0.5) / nf;
        acc += (model - empirical).powi(2);
    }
    Ok(FitQuality {
        rmse: (acc / nf).sqrt(),
        n,
    })
}
