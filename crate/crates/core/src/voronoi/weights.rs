//! Bessel-kernel weights
//! `u+_d(n) = (4/d) int w(x) K0(4 pi sqrt(x n) / d) dx` and
//! `u-_d(n) = -(2 pi/d) int w(x) Y0(4 pi sqrt(x n) / d) dx`.

use std::f64::consts::PI;

use super::bessel::{k0_unchecked, y0_unchecked};
use super::cutoff::SmoothCutoff;
use super::quadrature::{integrate_panels, QuadOptions};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Relative accuracy below which a weight is not flagged.
pub const WEIGHT_REL_TOL: f64 = 1e-8;

const FIRST_Y0_ZERO: f64 = 0.893_576_966_279_167_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightValue {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl WeightValue {
    /// True when the quadrature did not converge or its error estimate
    /// exceeds [`WEIGHT_REL_TOL`] relative to the value.
    pub fn flagged(&self) -> bool {
        !self.converged || self.error > WEIGHT_REL_TOL * self.value.abs()
    }
}

/// `U(d) = d^2 / X`.
pub fn u_threshold(d: u64, x: f64) -> f64 {
    (d as f64).powi(2) / x
}

/// `V(d) = d^2 X^(1 + eps) / Y^2`.
pub fn v_threshold(d: u64, x: f64, y: f64, epsilon: f64) -> f64 {
    (d as f64).powi(2) * x.powf(1.0 + epsilon) / (y * y)
}

fn weight_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 200,
        refine: 0,
    }
}

/// Approximate zeros of `Y0`: the first exactly, the rest from McMahon's
/// expansion `beta + 1/(8 beta)`, `beta = (k - 3/4) pi`.
fn y0_zero(k: u64) -> f64 {
    if k == 1 {
        FIRST_Y0_ZERO
    } else {
        let beta = (k as f64 - 0.75) * PI;
        beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta.powi(3))
    }
}

/// Panel breakpoints in `s = sqrt(x)`.
fn panels(c: f64, cutoff: &SmoothCutoff, sign: Sign) -> Vec<f64> {
    let [y, y2, x, xy] = cutoff.breakpoints();
    let (lo, hi) = (y.sqrt(), xy.sqrt());
    let mut points = vec![lo, y2.sqrt(), x.sqrt(), hi];
    match sign {
        Sign::Minus => {
            // Kernel zeros at s = y0_zero(k) / c.
            let t_lo = c * lo;
            let t_hi = c * hi;
            let mut k = ((t_lo / PI) + 0.75).floor().max(1.0) as u64;
            loop {
                let t = y0_zero(k);
                if t >= t_hi {
                    break;
                }
                if t > t_lo {
                    points.push(t / c);
                }
                k += 1;
            }
        }
        Sign::Plus => {
            let mut t = 0.5;
            while t < c * hi && t < 800.0 {
                if t > c * lo {
                    points.push(t / c);
                }
                t *= 2.0;
            }
            // K0 underflows past 750, so nothing beyond contributes.
            if c * hi > 750.0 {
                points.retain(|&s| s * c <= 750.0);
                points.push((750.0 / c).max(lo));
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Computes `u_d^sign(n)` by panelled adaptive quadrature in `s = sqrt(x)`.
pub fn weight_u(d: u64, n: u64, sign: Sign, cutoff: &SmoothCutoff) -> Result<WeightValue> {
    weight_u_with(d, n, sign, cutoff, &weight_options())
}

pub fn weight_u_with(
    d: u64,
    n: u64,
    sign: Sign,
    cutoff: &SmoothCutoff,
    opts: &QuadOptions,
) -> Result<WeightValue> {
    if d == 0 {
        return Err(Error::InvalidModulus(d));
    }
    if n == 0 {
        return Err(Error::InvalidRange("weights are defined for n >= 1".into()));
    }
    let c = 4.0 * PI * (n as f64).sqrt() / d as f64;
    let points = panels(c, cutoff, sign);
    let (prefactor, r) = match sign {
        Sign::Plus => (
            4.0 / d as f64,
            integrate_panels(
                |s| 2.0 * s * cutoff.value(s * s) * k0_unchecked(c * s),
                &points,
                opts,
            ),
        ),
        Sign::Minus => (
            -2.0 * PI / d as f64,
            integrate_panels(
                |s| 2.0 * s * cutoff.value(s * s) * y0_unchecked(c * s),
                &points,
                opts,
            ),
        ),
    };
    Ok(WeightValue {
        value: prefactor * r.value,
        error: prefactor.abs() * r.error,
        converged: r.converged,
    })
}

/// Cached `u_d^+(n)` and `u_d^-(n)` for `n = 1..=len`. The cache only
/// grows, through [`VoronoiWeights::extend_to`].
#[derive(Debug, Clone)]
pub struct VoronoiWeights {
    d: u64,
    cutoff: SmoothCutoff,
    epsilon: f64,
    plus: Vec<WeightValue>,
    minus: Vec<WeightValue>,
}

/// Fitted constants for the size of the weights in the two regimes below
/// `V(d)`; `None` when a regime holds no `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `max |u| d / X^(1 + small_exponent)` over `n <= U(d)`.
    pub small_regime: Option<f64>,
    /// `max |u| / (X^(1/4) d^(1/2) n^(-3/4))` over `U(d) < n <= V(d)`.
    pub middle_regime: Option<f64>,
    pub flagged: usize,
}

impl VoronoiWeights {
    pub fn new(d: u64, cutoff: SmoothCutoff, epsilon: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModulus(d));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidRange(format!("epsilon {epsilon} outside (0, 1)")));
        }
        Ok(Self {
            d,
            cutoff,
            epsilon,
            plus: Vec::new(),
            minus: Vec::new(),
        })
    }

    /// Weights for every `n <= V(d)`.
    pub fn up_to_truncation(d: u64, cutoff: SmoothCutoff, epsilon: f64) -> Result<Self> {
        let mut w = Self::new(d, cutoff, epsilon)?;
        let n_max = w.v_threshold().floor() as u64;
        w.extend_to(n_max)?;
        Ok(w)
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn cutoff(&self) -> &SmoothCutoff {
        &self.cutoff
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    pub fn u_threshold(&self) -> f64 {
        u_threshold(self.d, self.cutoff.x())
    }

    pub fn v_threshold(&self) -> f64 {
        v_threshold(self.d, self.cutoff.x(), self.cutoff.y(), self.epsilon)
    }

    /// Computes the missing weights for `n <= n_max` in parallel.
    pub fn extend_to(&mut self, n_max: u64) -> Result<()> {
        let have = self.plus.len() as u64;
        if n_max <= have {
            return Ok(());
        }
        let (d, cutoff) = (self.d, self.cutoff);
        let fresh = par::map_range(have + 1..n_max + 1, |n| {
            Ok((
                weight_u(d, n, Sign::Plus, &cutoff)?,
                weight_u(d, n, Sign::Minus, &cutoff)?,
            ))
        });
        for item in fresh {
            let (p, m) = item?;
            self.plus.push(p);
            self.minus.push(m);
        }
        Ok(())
    }

    pub fn get(&self, n: u64, sign: Sign) -> Option<&WeightValue> {
        let idx = usize::try_from(n.checked_sub(1)?).ok()?;
        match sign {
            Sign::Plus => self.plus.get(idx),
            Sign::Minus => self.minus.get(idx),
        }
    }

    pub fn values(&self, sign: Sign) -> &[WeightValue] {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    pub fn flagged(&self) -> usize {
        self.plus.iter().chain(&self.minus).filter(|w| w.flagged()).count()
    }

    pub fn decay_fit(&self, small_exponent: f64) -> DecayFit {
        let x = self.cutoff.x();
        let d = self.d as f64;
        let u = self.u_threshold();
        let v = self.v_threshold();
        let mut small: Option<f64> = None;
        let mut middle: Option<f64> = None;
        for (i, (p, m)) in self.plus.iter().zip(&self.minus).enumerate() {
            let n = (i + 1) as f64;
            let size = p.value.abs().max(m.value.abs());
            if n <= u {
                let c = size * d / x.powf(small_exponent);
                small = Some(small.map_or(c, |s| s.max(c)));
            } else if n <= v {
                let c = size / (x.powf(0.25) * d.sqrt() * n.powf(-0.75));
                middle = Some(middle.map_or(c, |s| s.max(c)));
            }
        }
        DecayFit {
            small_regime: small,
            middle_regime: middle,
            flagged: self.flagged(),
        }
    }
}
