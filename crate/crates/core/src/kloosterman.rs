//! Complete Kloosterman sums `K_d(m, n) = sum_{x in Z_d^*} e_d(mx + n x^{-1})`.
//!
//! An evaluator holds the unit group, the matching inverses and (for
//! `d <= TWIDDLE_CAP`) a table of `e_d(k)`. Rows `a -> K_d(m, a)` over all
//! residues come from a single length-`d` transform.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::arith::{gcd, gcd_signed, mod_inverse, mul_mod, reduce, FactoredModulus, MAX_MODULUS};
use crate::error::{Error, Result};
use crate::par;

/// Largest modulus with a precomputed twiddle table.
pub const TWIDDLE_CAP: u64 = 10_000_000;

/// Batch size at which [`KloostermanEvaluator::batch_over_a`] switches to the transform.
pub const DEFAULT_BATCH_CUTOVER: usize = 64;

pub struct KloostermanEvaluator {
    d: u64,
    units: Vec<u64>,
    inverses: Vec<u64>,
    twiddles: Option<Vec<Complex64>>,
    batch_cutover: usize,
    fft: OnceLock<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for KloostermanEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KloostermanEvaluator")
            .field("d", &self.d)
            .field("units", &self.units.len())
            .finish()
    }
}

/// `e_d(k) = exp(2 pi i k / d)` for `0 <= k < d`.
#[inline]
pub fn unit_root(k: u64, d: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (k as f64 / d as f64))
}

impl KloostermanEvaluator {
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 || d > MAX_MODULUS {
            return Err(Error::InvalidModulus(d));
        }
        // Z_1^* is the single class {0}, which makes K_1(m, n) = 1.
        let (units, inverses) = if d == 1 {
            (vec![0], vec![0])
        } else {
            let units: Vec<u64> = (1..d).filter(|&x| gcd(x, d) == 1).collect();
            let inverses = units
                .iter()
                .map(|&x| mod_inverse(x as i64, d).expect("unit"))
                .collect();
            (units, inverses)
        };
        let twiddles = (d <= TWIDDLE_CAP).then(|| (0..d).map(|k| unit_root(k, d)).collect());
        Ok(Self {
            d,
            units,
            inverses,
            twiddles,
            batch_cutover: DEFAULT_BATCH_CUTOVER,
            fft: OnceLock::new(),
        })
    }

    pub fn with_batch_cutover(mut self, cutover: usize) -> Self {
        self.batch_cutover = cutover;
        self
    }

    pub fn modulus(&self) -> u64 {
        self.d
    }

    pub fn units(&self) -> &[u64] {
        &self.units
    }

    pub fn inverses(&self) -> &[u64] {
        &self.inverses
    }

    #[inline]
    pub fn e(&self, k: u64) -> Complex64 {
        match &self.twiddles {
            Some(t) => t[(k % self.d) as usize],
            None => unit_root(k % self.d, self.d),
        }
    }

    /// The full complex sum; its imaginary part is rounding noise.
    pub fn eval_complex(&self, m: i64, n: i64) -> Complex64 {
        let d = self.d;
        let (m, n) = (reduce(m, d), reduce(n, d));
        self.units
            .iter()
            .zip(&self.inverses)
            .map(|(&x, &xi)| {
                let k = (mul_mod(m, x, d) + mul_mod(n, xi, d)) % d;
                self.e(k)
            })
            .sum()
    }

    pub fn eval(&self, m: i64, n: i64) -> f64 {
        self.eval_complex(m, n).re
    }

    fn fft(&self) -> &Arc<dyn Fft<f64>> {
        self.fft
            .get_or_init(|| FftPlanner::new().plan_fft_inverse(self.d as usize))
    }

    /// `K_d(m, a)` for every `a` in `[0, d)`.
    ///
    /// `K_d(m, a) = sum_y c(y) e_d(a y)` with `c(y) = e_d(m y^{-1})` on units,
    /// so a single inverse DFT of `c` yields the whole row.
    pub fn row(&self, m: i64) -> Vec<f64> {
        self.row_complex(m).into_iter().map(|z| z.re).collect()
    }

    pub fn row_complex(&self, m: i64) -> Vec<Complex64> {
        let d = self.d;
        if d == 1 {
            return vec![Complex64::new(1.0, 0.0)];
        }
        let m = reduce(m, d);
        let mut buf = vec![Complex64::new(0.0, 0.0); d as usize];
        for (&y, &yi) in self.units.iter().zip(&self.inverses) {
            buf[y as usize] = self.e(mul_mod(m, yi, d));
        }
        self.fft().process(&mut buf);
        buf
    }

    /// `K_d(m, a)` for each `a` in `a_values`.
    pub fn batch_over_a(&self, m: i64, a_values: &[i64]) -> Vec<f64> {
        if a_values.is_empty() {
            return Vec::new();
        }
        if a_values.len() >= self.batch_cutover && self.d <= TWIDDLE_CAP {
            let row = self.row(m);
            a_values.iter().map(|&a| row[reduce(a, self.d) as usize]).collect()
        } else {
            par::map_slice(a_values, |&a| self.eval(m, a))
        }
    }
}

pub fn kloosterman(d: u64, m: i64, n: i64) -> Result<f64> {
    Ok(KloostermanEvaluator::new(d)?.eval(m, n))
}

pub fn kloosterman_batch_over_a(d: u64, m: i64, a_values: &[i64]) -> Result<Vec<f64>> {
    Ok(KloostermanEvaluator::new(d)?.batch_over_a(m, a_values))
}

/// Outcome of comparing `|K_d(m, n)|` with `tau(d) gcd(m, n, d)^{1/2} d^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeilCheck {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

pub fn weil_bound(d: u64, m: i64, n: i64) -> Result<f64> {
    let fd = FactoredModulus::new(d)?;
    let g = gcd(gcd_signed(m, d), gcd_signed(n, d));
    Ok(fd.num_divisors() as f64 * (g as f64).sqrt() * (d as f64).sqrt())
}

pub fn check_weil(d: u64, m: i64, n: i64) -> Result<WeilCheck> {
    let value = kloosterman(d, m, n)?;
    let bound = weil_bound(d, m, n)?;
    Ok(WeilCheck {
        value,
        bound,
        ok: value.abs() <= bound + 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{is_prime, ramanujan_sum};

    fn brute(d: u64, m: i64, n: i64) -> f64 {
        (1..=d)
            .filter(|&x| gcd(x, d) == 1)
            .map(|x| {
                let xi = if d == 1 { 0 } else { mod_inverse(x as i64, d).unwrap() };
                let k = (m as i128 * x as i128 + n as i128 * xi as i128).rem_euclid(d as i128);
                (TAU * k as f64 / d as f64).cos()
            })
            .sum()
    }

    #[test]
    fn small_examples() {
        assert!((kloosterman(3, 1, 1).unwrap() + 1.0).abs() < 1e-12);
        let k5 = kloosterman(5, 1, 1).unwrap();
        let hand: f64 = [(1, 1), (2, 3), (3, 2), (4, 4)]
            .iter()
            .map(|&(x, xi)| (TAU * (x + xi) as f64 / 5.0).cos())
            .sum();
        assert!((k5 - hand).abs() < 1e-12);
        assert!(k5.abs() <= 2.0 * 5f64.sqrt());
        assert_eq!(kloosterman(1, 3, 4).unwrap(), 1.0);
    }

    #[test]
    fn degenerates_to_ramanujan() {
        for d in 1..=120u64 {
            for m in -3..=2 * d as i64 {
                let k = kloosterman(d, m, 0).unwrap();
                assert!((k - ramanujan_sum(d, m) as f64).abs() < 1e-9, "d={d} m={m}");
            }
        }
    }

    #[test]
    fn matches_brute_force_and_is_real() {
        for d in [2u64, 9, 12, 30, 97, 128] {
            let ev = KloostermanEvaluator::new(d).unwrap();
            for m in 0..d as i64 {
                for n in [0i64, 1, 5, -7] {
                    let z = ev.eval_complex(m, n);
                    assert!(z.im.abs() < 1e-9);
                    assert!((z.re - brute(d, m, n)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn batch_paths_agree() {
        let ev = KloostermanEvaluator::new(7).unwrap();
        let all: Vec<i64> = (0..7).collect();
        let fast = ev.batch_over_a(1, &all);
        let slow = KloostermanEvaluator::new(7).unwrap().with_batch_cutover(usize::MAX).batch_over_a(1, &all);
        for (a, (f, s)) in fast.iter().zip(&slow).enumerate() {
            assert!((f - s).abs() < 1e-9);
            assert!((f - ev.eval(1, a as i64)).abs() < 1e-9);
        }
        let ev = KloostermanEvaluator::new(360).unwrap().with_batch_cutover(1);
        let row = ev.batch_over_a(-11, &[3, 400, -5]);
        assert!((row[0] - ev.eval(-11, 3)).abs() < 1e-9);
        assert!((row[1] - ev.eval(-11, 40)).abs() < 1e-9);
        assert!((row[2] - ev.eval(-11, 355)).abs() < 1e-9);
        assert!(ev.batch_over_a(1, &[]).is_empty());
        assert_eq!(ev.batch_over_a(2, &[9]).len(), 1);
    }

    #[test]
    fn symmetric_and_periodic() {
        for d in 1..=50u64 {
            let ev = KloostermanEvaluator::new(d).unwrap();
            for m in 0..d as i64 {
                for n in 0..d as i64 {
                    assert!((ev.eval(m, n) - ev.eval(n, m)).abs() < 1e-9);
                }
                assert!((ev.eval(m + d as i64, 3) - ev.eval(m, 3)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weil_examples() {
        let c = check_weil(3, 1, 1).unwrap();
        assert!(c.ok && (c.bound - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        for d in [1u64, 6, 30, 97] {
            let c = check_weil(d, 0, 0).unwrap();
            assert!((c.value - crate::arith::euler_phi(d) as f64).abs() < 1e-9);
            assert!(c.ok);
        }
        for p in (3..200u64).filter(|&p| is_prime(p)) {
            let ev = KloostermanEvaluator::new(p).unwrap();
            for m in 1..p as i64 {
                let row = ev.row(m);
                for k in row.iter().skip(1) {
                    assert!(k.abs() <= 2.0 * (p as f64).sqrt() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn twisted_multiplicativity() {
        for (d1, d2) in [(3u64, 4u64), (5, 7), (8, 9), (11, 30)] {
            let i1 = mod_inverse(d1 as i64, d2).unwrap() as i64;
            let i2 = mod_inverse(d2 as i64, d1).unwrap() as i64;
            for m in [1i64, 2, 6] {
                for n in [0i64, 1, 5, 12] {
                    let lhs = kloosterman(d1 * d2, m, n).unwrap();
                    let rhs = kloosterman(d1, m, n * i2 * i2).unwrap() * kloosterman(d2, m, n * i1 * i1).unwrap();
                    assert!((lhs - rhs).abs() < 1e-6, "{d1} {d2} {m} {n}");
                }
            }
        }
    }

    #[test]
    fn large_modulus_without_twiddles() {
        let d = TWIDDLE_CAP + 19;
        let ev = KloostermanEvaluator::new(d).unwrap();
        assert!(ev.twiddles.is_none());
        // d is odd and 2 is a unit; spot check a single term of the sum.
        assert!((ev.e(d - 1) - unit_root(d - 1, d)).norm() < 1e-15);
    }
}
