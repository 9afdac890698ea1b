//! Bessel functions `K0` and `Y0` (and `J0`) on the positive real axis.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::main_term::EULER_GAMMA;

const SERIES_LIMIT: f64 = 2.0;
const Y0_SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;
const K0_ASYMPTOTIC_LIMIT: f64 = 40.0;
const K0_STEP: f64 = 1.0 / 16.0;

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(x))
    }
}

/// Modified Bessel function of the second kind of order zero.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(k0_unchecked(x))
}

/// Bessel function of the second kind of order zero.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(y0_unchecked(x))
}

/// Bessel function of the first kind of order zero, for `x >= 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::DomainError(x));
    }
    Ok(j0_unchecked(x))
}

pub(crate) fn k0_unchecked(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        k0_series(x)
    } else if x <= K0_ASYMPTOTIC_LIMIT {
        k0_integral(x)
    } else {
        k0_asymptotic(x)
    }
}

pub(crate) fn y0_unchecked(x: f64) -> f64 {
    if x <= Y0_SERIES_LIMIT {
        y0_series(x)
    } else if x <= ASYMPTOTIC_LIMIT {
        y0_neumann(x)
    } else {
        hankel(x).1
    }
}

pub(crate) fn j0_unchecked(x: f64) -> f64 {
    if x <= ASYMPTOTIC_LIMIT {
        miller_even(x).0
    } else {
        hankel(x).0
    }
}

/// `K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k H_k (x^2/4)^k / (k!)^2`.
fn k0_series(x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= z / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += harmonic * term;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

/// Trapezoid rule on `K0(x) = int_0^inf exp(-x cosh t) dt`, which converges
/// geometrically for this analytic, rapidly decaying integrand.
fn k0_integral(x: f64) -> f64 {
    let mut sum = 0.5;
    let mut k = 1u32;
    loop {
        let t = k as f64 * K0_STEP;
        let excess = x * (t.cosh() - 1.0);
        if excess > 45.0 {
            break;
        }
        sum += (-excess).exp();
        k += 1;
    }
    sum * K0_STEP * (-x).exp()
}

fn k0_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = -term * odd * odd / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

/// `Y0(x) = (2/pi)(ln(x/2) + gamma) J0(x) + (2/pi) sum_k (-1)^(k+1) H_k (x^2/4)^k / (k!)^2`.
fn y0_series(x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut j0 = 1.0;
    let mut tail = 0.0;
    let mut harmonic = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -z / (kf * kf);
        harmonic += 1.0 / kf;
        j0 += term;
        tail -= harmonic * term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + tail)
}

/// Miller's backward recurrence for `J_0` and the alternating sum
/// `sum_k (-1)^k J_{2k}(x) / k`, normalized by `J0 + 2 sum_k J_{2k} = 1`.
fn miller_even(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0);
    }
    let mut start = (x.ceil() as usize) + 40 + (6.0 * x.sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut above = 0.0;
    let mut current = 1e-280;
    let mut norm = 0.0;
    let mut alternating = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            norm += 2.0 * current;
            let half = (k / 2) as f64;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            alternating += sign * current / half;
        }
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            alternating *= 1e-250;
        }
        if k == 1 {
            j0 = current;
        }
    }
    norm += j0;
    (j0 / norm, alternating / norm)
}

/// Neumann series `Y0 = (2/pi)[(ln(x/2) + gamma) J0 - 2 sum_k (-1)^k J_{2k}/k]`.
fn y0_neumann(x: f64) -> f64 {
    let (j0, alternating) = miller_even(x);
    FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 - 2.0 * alternating)
}

/// Hankel expansions, returning `(J0(x), Y0(x))`.
fn hankel(x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut previous = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= odd * odd / (k as f64 * 8.0 * x);
        if term >= previous {
            break;
        }
        previous = term;
        let signed = match k % 4 {
            0 | 3 => term,
            _ => -term,
        };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    let (s, c) = chi.sin_cos();
    let scale = (FRAC_2_PI / x).sqrt();
    (scale * (p * c - q * s), scale * (p * s + q * c))
}
