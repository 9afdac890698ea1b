//! Bilinear sums of Kloosterman sums over intervals,
//! `S_d(alpha, nu; I, J) = sum_{a in I} sum_{n in J} alpha_a nu_n K_d(n, a)`,
//! and least-squares exponent fits of measured sums against the two
//! published bilinear bounds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::Interval;
use crate::error::{Error, Result};
use crate::kloosterman::{unit_root, KloostermanEvaluator};
use crate::numeric::compensated_sum;
use crate::par;

const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BilinearInstance {
    d: u64,
    i: Interval,
    j: Interval,
    alpha: Option<Vec<Complex64>>,
    nu: Vec<Complex64>,
}

fn check_weights(name: &str, w: &[Complex64], len: u64) -> Result<()> {
    if w.len() as u64 != len {
        return Err(Error::InvalidWeights(format!(
            "{name} has {} entries, interval has {len}",
            w.len()
        )));
    }
    if let Some(bad) = w.iter().find(|z| !(z.norm() <= 1.0 + WEIGHT_SLACK)) {
        return Err(Error::InvalidWeights(format!("{name} entry {bad} exceeds 1 in modulus")));
    }
    Ok(())
}

impl BilinearInstance {
    /// A weighted instance; `alpha = None` means `alpha = 1` identically.
    pub fn new(
        d: u64,
        i: Interval,
        j: Interval,
        alpha: Option<Vec<Complex64>>,
        nu: Vec<Complex64>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidModulus(d));
        }
        if !i.within(d - 1) {
            return Err(Error::IntervalOutOfRange {
                start: i.first(),
                end: i.last(),
                max: d - 1,
            });
        }
        if j.len == 0 || j.len > d {
            return Err(Error::InvalidRange(format!(
                "J must have length in [1, {d}], got {}",
                j.len
            )));
        }
        if let Some(a) = &alpha {
            check_weights("alpha", a, i.len)?;
        }
        check_weights("nu", &nu, j.len)?;
        Ok(Self { d, i, j, alpha, nu })
    }

    pub fn unweighted(d: u64, i: Interval, j: Interval, nu: Vec<Complex64>) -> Result<Self> {
        Self::new(d, i, j, None, nu)
    }

    pub fn modulus(&self) -> u64 {
        self.d
    }

    pub fn i(&self) -> Interval {
        self.i
    }

    pub fn j(&self) -> Interval {
        self.j
    }

    pub fn alpha(&self) -> Option<&[Complex64]> {
        self.alpha.as_deref()
    }

    pub fn nu(&self) -> &[Complex64] {
        &self.nu
    }

    fn alpha_at(&self, idx: usize) -> Complex64 {
        self.alpha.as_ref().map_or(Complex64::new(1.0, 0.0), |a| a[idx])
    }
}

/// Direct evaluation from the definition, one Kloosterman sum per `(a, n)`.
pub fn bilinear_sum(inst: &BilinearInstance) -> Result<Complex64> {
    let ev = KloostermanEvaluator::new(inst.d)?;
    let i_vals: Vec<(usize, u64)> = inst.i.iter().enumerate().collect();
    let per_a = par::map_slice(&i_vals, |&(ia, a)| {
        let inner: Complex64 = inst
            .j
            .iter()
            .zip(&inst.nu)
            .map(|(n, &nu)| nu * ev.eval(n as i64, a as i64))
            .sum();
        inst.alpha_at(ia) * inner
    });
    Ok(Complex64::new(
        compensated_sum(per_a.iter().map(|z| z.re)),
        compensated_sum(per_a.iter().map(|z| z.im)),
    ))
}

/// `G_I(y) = sum_{a in I} e_d(a y)` in closed form.
pub fn interval_exponential_sum(i: Interval, y: u64, d: u64) -> Complex64 {
    let z = unit_root(y % d, d);
    let one = Complex64::new(1.0, 0.0);
    let start = unit_root(((i.first() as u128 * y as u128) % d as u128) as u64, d);
    if (one - z).norm() < 1e-9 {
        return start * i.len as f64;
    }
    let z_len = unit_root(((i.len as u128 * y as u128) % d as u128) as u64, d);
    start * (one - z_len) / (one - z)
}

/// `F(x) = sum_{n in J} nu_n e_d(n x)` for every `x` in `[0, d)`.
fn dual_transform(d: u64, j: Interval, nu: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); d as usize];
    for (n, &w) in j.iter().zip(nu) {
        buf[(n % d) as usize] += w;
    }
    FftPlanner::new().plan_fft_inverse(d as usize).process(&mut buf);
    buf
}

/// `S_d(nu; I, J)` through the collapsed kernel
/// `sum_{x in Z_d^*} F(x) G_I(x^{-1})`. Any `alpha` on the instance is ignored.
pub fn bilinear_sum_unweighted_a(inst: &BilinearInstance) -> Result<Complex64> {
    let ev = KloostermanEvaluator::new(inst.d)?;
    let f = dual_transform(inst.d, inst.j, &inst.nu);
    let terms: Vec<Complex64> = ev
        .units()
        .iter()
        .zip(ev.inverses())
        .map(|(&x, &xi)| f[x as usize] * interval_exponential_sum(inst.i, xi, inst.d))
        .collect();
    Ok(Complex64::new(
        compensated_sum(terms.iter().map(|z| z.re)),
        compensated_sum(terms.iter().map(|z| z.im)),
    ))
}

/// General weighted sum through two length-`d` transforms.
pub fn bilinear_sum_fast(inst: &BilinearInstance) -> Result<Complex64> {
    let Some(alpha) = &inst.alpha else {
        return bilinear_sum_unweighted_a(inst);
    };
    let ev = KloostermanEvaluator::new(inst.d)?;
    let f = dual_transform(inst.d, inst.j, &inst.nu);
    let g = dual_transform(inst.d, inst.i, alpha);
    let terms: Vec<Complex64> = ev
        .units()
        .iter()
        .zip(ev.inverses())
        .map(|(&x, &xi)| f[x as usize] * g[xi as usize])
        .collect();
    Ok(Complex64::new(
        compensated_sum(terms.iter().map(|z| z.re)),
        compensated_sum(terms.iter().map(|z| z.im)),
    ))
}

/// `A N^{1/2} p^{1/2} + A^{13/16} N^{13/16} p^{43/64}` (prime moduli, initial `J`).
pub fn prime_modulus_bound(a: f64, n: f64, p: f64) -> f64 {
    a * n.sqrt() * p.sqrt() + (a * n).powf(13.0 / 16.0) * p.powf(43.0 / 64.0)
}

/// `N^{3/4} (A^{1/8} d + A^{1/2} d^{3/4})` (any modulus, `alpha = 1`).
pub fn unweighted_bound(a: f64, n: f64, d: f64) -> f64 {
    n.powf(0.75) * (a.powf(0.125) * d + a.sqrt() * d.powf(0.75))
}

/// Side conditions under which [`prime_modulus_bound`] is stated:
/// `p^{1/4} <= A N <= p^{5/4}` and `N <= A p^{1/4}`.
pub fn prime_bound_applies(a: f64, n: f64, p: f64) -> bool {
    let an = a * n;
    an >= p.powf(0.25) && an <= p.powf(1.25) && n <= a * p.powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub a_len: u64,
    pub n_len: u64,
    pub d: u64,
    pub abs_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    /// Fitted `log |S| = c + e_A log A + e_N log N + e_d log d`.
    pub log_constant: f64,
    pub exp_a: f64,
    pub exp_n: f64,
    pub exp_d: f64,
    pub rms_residual: f64,
    /// `max |S| / prime_modulus_bound` over measurements meeting its side
    /// conditions; `None` if no measurement qualifies.
    pub max_ratio_prime_bound: Option<f64>,
    pub max_ratio_unweighted_bound: f64,
    pub n_measurements: usize,
    pub n_prime_bound_eligible: usize,
}

fn dyadic_ranges<I: Iterator<Item = u64>>(values: I) -> usize {
    let mut seen: Vec<u32> = values.map(|v| 63 - v.max(1).leading_zeros()).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

pub fn exponent_fit(measurements: &[Measurement]) -> Result<ExponentFit> {
    if measurements.len() < 8 {
        return Err(Error::InsufficientSpread(format!(
            "{} measurements, need at least 8",
            measurements.len()
        )));
    }
    for (name, spread) in [
        ("A", dyadic_ranges(measurements.iter().map(|m| m.a_len))),
        ("N", dyadic_ranges(measurements.iter().map(|m| m.n_len))),
        ("d", dyadic_ranges(measurements.iter().map(|m| m.d))),
    ] {
        if spread < 2 {
            return Err(Error::InsufficientSpread(format!(
                "{name} spans {spread} dyadic range(s), need at least 2"
            )));
        }
    }
    if let Some(m) = measurements.iter().find(|m| !(m.abs_s > 0.0)) {
        return Err(Error::InsufficientSpread(format!(
            "measurement {m:?} has non-positive |S|"
        )));
    }
    let rows = measurements.len();
    let design = DMatrix::from_fn(rows, 4, |r, c| {
        let m = &measurements[r];
        match c {
            0 => 1.0,
            1 => (m.a_len as f64).ln(),
            2 => (m.n_len as f64).ln(),
            _ => (m.d as f64).ln(),
        }
    });
    let target = DVector::from_iterator(rows, measurements.iter().map(|m| m.abs_s.ln()));
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&target, 1e-12)
        .map_err(|e| Error::InsufficientSpread(e.to_string()))?;
    let resid = &design * &coef - &target;
    let rms_residual = (resid.norm_squared() / rows as f64).sqrt();

    let mut max_prime: Option<f64> = None;
    let mut eligible = 0;
    let mut max_unweighted: f64 = 0.0;
    for m in measurements {
        let (a, n, d) = (m.a_len as f64, m.n_len as f64, m.d as f64);
        if prime_bound_applies(a, n, d) {
            eligible += 1;
            let r = m.abs_s / prime_modulus_bound(a, n, d);
            max_prime = Some(max_prime.map_or(r, |x| x.max(r)));
        }
        max_unweighted = max_unweighted.max(m.abs_s / unweighted_bound(a, n, d));
    }
    Ok(ExponentFit {
        log_constant: coef[0],
        exp_a: coef[1],
        exp_n: coef[2],
        exp_d: coef[3],
        rms_residual,
        max_ratio_prime_bound: max_prime,
        max_ratio_unweighted_bound: max_unweighted,
        n_measurements: rows,
        n_prime_bound_eligible: eligible,
    })
}
