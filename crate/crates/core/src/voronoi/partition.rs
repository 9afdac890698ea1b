//! Smooth dyadic partition of unity on `[1, 2^L]`.

use super::cutoff::{smooth_step, smooth_step_derivative, smooth_step_second_derivative};
use crate::error::{Error, Result};

/// `sigma(t)`: 0 below 1, 1 above 2.
fn sigma(t: f64, order: u32) -> f64 {
    match order {
        0 => smooth_step(t - 1.0),
        1 => smooth_step_derivative(t - 1.0),
        _ => smooth_step_second_derivative(t - 1.0),
    }
}

/// Functions `psi_l(x) = sigma(x / 2^(l-1)) - sigma(x / 2^l)` for
/// `l = 0..=L`, with `psi_l` supported in `[2^(l-1), 2^(l+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothPartition {
    max_level: u32,
}

pub fn smooth_partition(max_level: u32) -> Result<SmoothPartition> {
    SmoothPartition::new(max_level)
}

impl SmoothPartition {
    pub fn new(max_level: u32) -> Result<Self> {
        if !(3..=1000).contains(&max_level) {
            return Err(Error::InvalidRange(format!(
                "partition needs 3 <= L <= 1000, got {max_level}"
            )));
        }
        Ok(Self { max_level })
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn support(&self, level: u32) -> (f64, f64) {
        let lo = 2f64.powi(level as i32 - 1);
        (lo, 4.0 * lo)
    }

    pub fn psi(&self, level: u32, x: f64) -> f64 {
        self.psi_derivative(level, x, 0)
    }

    /// `order`-th derivative of `psi_level`, for `order <= 2`.
    pub fn psi_derivative(&self, level: u32, x: f64, order: u32) -> f64 {
        assert!(order <= 2, "derivatives above order 2 are not provided");
        let s1 = 2f64.powi(1 - level as i32);
        let s2 = 2f64.powi(-(level as i32));
        s1.powi(order as i32) * sigma(x * s1, order) - s2.powi(order as i32) * sigma(x * s2, order)
    }

    /// `sum_{l <= upto} psi_l(x)`.
    pub fn partial_sum(&self, x: f64, upto: u32) -> f64 {
        (0..=upto.min(self.max_level)).map(|l| self.psi(l, x)).sum()
    }

    pub fn sum(&self, x: f64) -> f64 {
        self.partial_sum(x, self.max_level)
    }

    /// `sigma(2x) - sigma(x / 2^upto)`, the closed form of the partial sums.
    pub fn telescoped(&self, x: f64, upto: u32) -> f64 {
        sigma(2.0 * x, 0) - sigma(x * 2f64.powi(-(upto as i32)), 0)
    }

    /// `C_k = max_l sup_x x^k |psi_l^(k)(x)|` for `k = 0, 1, 2`, measured on
    /// a grid over each support.
    pub fn measured_derivative_constants(&self) -> [f64; 3] {
        let mut c = [0.0f64; 3];
        let samples = 2000;
        for level in 0..=self.max_level {
            let (lo, hi) = self.support(level);
            for i in 0..=samples {
                let x = lo + (hi - lo) * i as f64 / samples as f64;
                for (k, ck) in c.iter_mut().enumerate() {
                    let v = x.powi(k as i32) * self.psi_derivative(level, x, k as u32).abs();
                    *ck = ck.max(v);
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let p = smooth_partition(20).unwrap();
        for x in [1.0, 2.5, 1e3, 2f64.powi(18)] {
            assert!((p.sum(x) - 1.0).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn supports() {
        let p = smooth_partition(12).unwrap();
        for l in 0..=12 {
            let (lo, hi) = p.support(l);
            assert_eq!(p.psi(l, lo * 0.999), 0.0);
            assert_eq!(p.psi(l, hi * 1.001), 0.0);
            assert!(p.psi(l, 1.5 * lo) > 0.0);
        }
    }

    #[test]
    fn telescoping() {
        let p = smooth_partition(10).unwrap();
        for upto in 0..=10 {
            for i in 0..200 {
                let x = 0.3 + i as f64 * 7.1;
                assert!((p.partial_sum(x, upto) - p.telescoped(x, upto)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_constants_are_finite_and_scale_invariant() {
        let c = smooth_partition(8).unwrap().measured_derivative_constants();
        let c_big = smooth_partition(16).unwrap().measured_derivative_constants();
        assert!((c[0] - 1.0).abs() < 1e-9);
        for k in 0..3 {
            assert!(c[k].is_finite() && c[k] > 0.0);
            assert!((c[k] - c_big[k]).abs() < 1e-6 * c[k]);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = smooth_partition(6).unwrap();
        let h = 1e-5;
        for l in 0..=6 {
            let (lo, hi) = p.support(l);
            for i in 1..40 {
                let x = lo + (hi - lo) * i as f64 / 40.0;
                let fd = (p.psi(l, x + h) - p.psi(l, x - h)) / (2.0 * h);
                assert!((fd - p.psi_derivative(l, x, 1)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_small_level_counts() {
        assert!(smooth_partition(2).is_err());
        assert!(smooth_partition(3).is_ok());
    }
}
