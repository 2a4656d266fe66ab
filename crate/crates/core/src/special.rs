//! Gamma-family special functions used by the Nakagami density, CDF and MLE.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("argument must be positive and finite, got {0}")]
pub struct NonPositiveArgument(pub f64);

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Digamma and trigamma are evaluated by the asymptotic series once the
/// argument has been shifted at least this far.
const ASYMPTOTIC_FROM: f64 = 6.0;

/// B_{2k} / (2k) for k = 1..=7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

/// B_{2k} for k = 1..=7.
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2_730.0,
    7.0 / 6.0,
];

fn check(z: f64) -> Result<(), NonPositiveArgument> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(NonPositiveArgument(z))
    }
}

/// ln Γ(z) for z > 0 (Lanczos, g = 7).
pub fn lgamma(z: f64) -> Result<f64, NonPositiveArgument> {
    check(z)?;
    Ok(lgamma_unchecked(z))
}

pub(crate) fn lgamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // Γ(z) = Γ(z + 1) / z keeps the Lanczos sum away from its pole at 0.
        return lgamma_unchecked(z + 1.0) - z.ln();
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ψ(z) for z > 0.
pub fn digamma(z: f64) -> Result<f64, NonPositiveArgument> {
    check(z)?;
    Ok(digamma_unchecked(z))
}

pub(crate) fn digamma_unchecked(mut z: f64) -> f64 {
    let mut shift = 0.0;
    while z < ASYMPTOTIC_FROM {
        shift += 1.0 / z;
        z += 1.0;
    }
    z.ln() - 0.5 / z - asymptotic_tail(z) - shift
}

/// Σ B_{2k} / (2k z^{2k}), k = 1..=7, Horner in z⁻².
fn asymptotic_tail(z: f64) -> f64 {
    let inv2 = 1.0 / (z * z);
    let mut acc = 0.0;
    for &c in DIGAMMA_SERIES.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv2
}

/// ψ'(z) for z > 0.
pub fn trigamma(z: f64) -> Result<f64, NonPositiveArgument> {
    check(z)?;
    Ok(trigamma_unchecked(z))
}

pub(crate) fn trigamma_unchecked(mut z: f64) -> f64 {
    let mut shift = 0.0;
    while z < ASYMPTOTIC_FROM {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for &b in BERNOULLI_EVEN.iter().rev() {
        acc = acc * inv2 + b;
    }
    shift + inv + 0.5 * inv2 + acc * inv2 * inv
}

/// ln z − ψ(z), evaluated without the cancellation of the naive difference at large z.
///
/// This is the left-hand side of the Nakagami/gamma shape likelihood equation; it is
/// strictly decreasing from +∞ to 0 on (0, ∞).
pub fn log_minus_digamma(z: f64) -> Result<f64, NonPositiveArgument> {
    check(z)?;
    Ok(log_minus_digamma_unchecked(z))
}

pub(crate) fn log_minus_digamma_unchecked(z: f64) -> f64 {
    let mut w = z;
    let mut shift = 0.0;
    while w < ASYMPTOTIC_FROM {
        shift += 1.0 / w;
        w += 1.0;
    }
    // ln z − ψ(z) = ln(z / w) + [ln w − ψ(w)] + Σ 1/(z+i)
    let log_ratio = if w == z { 0.0 } else { (z / w).ln() };
    log_ratio + 0.5 / w + asymptotic_tail(w) + shift
}

const INCGAMMA_EPS: f64 = 1e-16;
const INCGAMMA_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma P(a, x) for a > 0, x ≥ 0.
///
/// Power series below x = a + 1, Lentz continued fraction for Q above it.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        series_p(a, x)
    } else {
        1.0 - continued_fraction_q(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - series_p(a, x)
    } else {
        continued_fraction_q(a, x)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - lgamma_unchecked(a)
}

fn series_p(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..INCGAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * INCGAMMA_EPS {
            break;
        }
    }
    (sum.ln() + log_prefactor(a, x)).exp().min(1.0)
}

fn continued_fraction_q(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=INCGAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < INCGAMMA_EPS {
            break;
        }
    }
    (h.ln() + log_prefactor(a, x)).exp().clamp(0.0, 1.0)
}
