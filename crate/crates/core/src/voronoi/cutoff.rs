//! The smooth step and the compactly supported cutoff built from it.

use crate::error::{Error, Result};

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`, and
/// `f(t) / (f(t) + f(1 - t))` with `f(t) = exp(-1/t)` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let u = 1.0 / t - 1.0 / (1.0 - t);
        if u > 700.0 {
            0.0
        } else {
            1.0 / (1.0 + u.exp())
        }
    }
}

pub fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = smooth_step(t);
    s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

pub fn smooth_step_second_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = smooth_step(t);
    let g = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    let dg = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    let ds = s * (1.0 - s) * g;
    ds * (1.0 - 2.0 * s) * g + s * (1.0 - s) * dg
}

/// `sup |smooth_step'| = 2`, attained at `t = 1/2`.
pub const SMOOTH_STEP_MAX_SLOPE: f64 = 2.0;

/// The weight `w` with `w = 0` outside `(Y, X + Y)`, `w = 1` on `[2Y, X]`,
/// rising on `[Y, 2Y]` and falling on `[X, X + Y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    x: f64,
    y: f64,
}

impl SmoothCutoff {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || y < 1.0 || y > 0.5 * x {
            return Err(Error::InvalidRange(format!(
                "cutoff needs 1 <= Y <= X/2, got X = {x}, Y = {y}"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// `(Y, 2Y, X, X + Y)`.
    pub fn breakpoints(&self) -> [f64; 4] {
        [self.y, 2.0 * self.y, self.x, self.x + self.y]
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.y || t >= self.x + self.y {
            0.0
        } else if t < 2.0 * self.y {
            smooth_step((t - self.y) / self.y)
        } else if t <= self.x {
            1.0
        } else {
            smooth_step((self.x + self.y - t) / self.y)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= self.y || t >= self.x + self.y {
            0.0
        } else if t < 2.0 * self.y {
            smooth_step_derivative((t - self.y) / self.y) / self.y
        } else if t <= self.x {
            0.0
        } else {
            -smooth_step_derivative((self.x + self.y - t) / self.y) / self.y
        }
    }

    /// `int w(t) dt = X - Y`, since the two transitions are mirror images.
    pub fn integral(&self) -> f64 {
        self.x - self.y
    }

    /// `Y * max |w'|`, measured on a grid over both transition regions.
    pub fn measured_derivative_constant(&self) -> f64 {
        let samples = 4096;
        let mut best: f64 = 0.0;
        for i in 0..=samples {
            let s = i as f64 / samples as f64;
            for t in [self.y * (1.0 + s), self.x + self.y * s] {
                best = best.max(self.derivative(t).abs());
            }
        }
        best * self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_shape() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
            assert!(smooth_step(t) >= smooth_step(t - 0.01));
        }
        assert!((smooth_step_derivative(0.5) - SMOOTH_STEP_MAX_SLOPE).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..50 {
            let t = i as f64 / 50.0;
            let fd = (smooth_step(t + h) - smooth_step(t - h)) / (2.0 * h);
            assert!((fd - smooth_step_derivative(t)).abs() < 1e-7, "t = {t}");
            let fd2 = (smooth_step_derivative(t + h) - smooth_step_derivative(t - h)) / (2.0 * h);
            assert!(
                (fd2 - smooth_step_second_derivative(t)).abs() < 1e-5,
                "t = {t}"
            );
        }
    }

    #[test]
    fn cutoff_invariants() {
        let w = SmoothCutoff::new(1000.0, 80.0).unwrap();
        assert_eq!(w.value(80.0), 0.0);
        assert_eq!(w.value(1080.0), 0.0);
        assert_eq!(w.value(160.0), 1.0);
        assert_eq!(w.value(1000.0), 1.0);
        assert_eq!(w.value(500.0), 1.0);
        for i in 0..2000 {
            let t = i as f64 * 0.6;
            let v = w.value(t);
            assert!((0.0..=1.0).contains(&v));
        }
        let c1 = w.measured_derivative_constant();
        assert!(c1 <= 4.0 && (c1 - 2.0).abs() < 1e-3, "C1 = {c1}");
    }

    #[test]
    fn cutoff_integral() {
        use crate::voronoi::quadrature::{integrate_panels, QuadOptions};
        let w = SmoothCutoff::new(2000.0, 300.0).unwrap();
        let r = integrate_panels(|t| w.value(t), &w.breakpoints(), &QuadOptions::default());
        assert!((r.value - w.integral()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SmoothCutoff::new(100.0, 0.5).is_err());
        assert!(SmoothCutoff::new(100.0, 51.0).is_err());
        assert!(SmoothCutoff::new(100.0, 50.0).is_ok());
    }
}
