//! Poisson summation for `tau_g(m) = sum_{m1 m2 = m} g(m1, m2)`, plain and
//! twisted by a primitive character.
//!
//! With `h(x, y) = (1/q) g^(x/q, y/q)` and `g^(u, v) = int g(x, y) e(ux + vy)`,
//!
//! ```text
//! sum_m tau_g(m) e_q(z m) = sum_n tau_h(n) e_q(-z^{-1} n)
//! sum_m tau_g(m) chi(m)   = eta(chi) sum_n tau_h(n) conj(chi)(n)
//! ```
//!
//! where `tau_h(0)` is given by the boundary integral
//! `int (1/q + {x/q} d/dx + {y/q} d/dy) g`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::quadrature::{integrate_panels, QuadOptions};
use crate::arith::{gcd_signed, mod_inverse, reduce};
use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::kloosterman::unit_root;

/// Maximum number of lattice points in the support of `g`.
pub const LATTICE_BUDGET: u64 = 10_000_000;

/// Maximum number of dual frequencies per axis.
pub const DUAL_BUDGET: u64 = 100_000;

/// Dual terms are dropped once `|g^|` falls below this fraction of `g^(0)`.
pub const DUAL_CUTOFF: f64 = 1e-13;

/// Half-width of the support in units of the width.
pub const BUMP_TRUNCATION: f64 = 12.0;

/// `amplitude * exp(-(x - center)^2 / (2 width^2))`, cut off at
/// `|x - center| = 12 width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    amplitude: f64,
    center: f64,
    width: f64,
}

impl GaussianBump {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite() && amplitude.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "bump needs finite parameters and positive width, got center {center}, width {width}"
            )));
        }
        if center - BUMP_TRUNCATION * width <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "bump support must lie in x > 0, got center {center}, width {width}"
            )));
        }
        Ok(Self {
            amplitude,
            center,
            width,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn support(&self) -> (f64, f64) {
        let r = BUMP_TRUNCATION * self.width;
        (self.center - r, self.center + r)
    }

    pub fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() > BUMP_TRUNCATION {
            0.0
        } else {
            self.amplitude * (-0.5 * t * t).exp()
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() > BUMP_TRUNCATION {
            0.0
        } else {
            -self.amplitude * t / self.width * (-0.5 * t * t).exp()
        }
    }

    fn panel_points(&self, max_width: f64) -> Vec<f64> {
        let (lo, hi) = self.support();
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        (0..=pieces)
            .map(|i| lo + (hi - lo) * i as f64 / pieces as f64)
            .collect()
    }

    /// `int phi`.
    pub fn integral(&self) -> f64 {
        integrate_panels(|x| self.value(x), &self.panel_points(self.width), &quad_options()).value
    }

    /// `phi^(u) = int phi(x) e(u x) dx`, by quadrature.
    pub fn fourier(&self, u: f64) -> Complex64 {
        let max_width = if u == 0.0 {
            self.width
        } else {
            self.width.min(0.25 / u.abs())
        };
        let points = self.panel_points(max_width);
        let opts = quad_options();
        let re = integrate_panels(|x| self.value(x) * (TAU * u * x).cos(), &points, &opts);
        let im = integrate_panels(|x| self.value(x) * (TAU * u * x).sin(), &points, &opts);
        Complex64::new(re.value, im.value)
    }

    /// `int {x/q} phi'(x) dx`, integrated cell by cell over `[k q, (k+1) q)`.
    pub fn fractional_moment(&self, q: u64) -> f64 {
        let qf = q as f64;
        let (lo, hi) = self.support();
        let mut points = self.panel_points(self.width);
        let first = (lo / qf).floor() as i64 + 1;
        let last = (hi / qf).ceil() as i64;
        for k in first..last {
            points.push(k as f64 * qf);
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let opts = quad_options();
        let mut total = 0.0;
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let k = (0.5 * (a + b) / qf).floor();
            total += integrate_panels(
                |x| (x / qf - k) * self.derivative(x),
                &[a, b],
                &opts,
            )
            .value;
        }
        total
    }
}

fn quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 400,
        refine: 0,
    }
}

/// `g(x, y) = phi_x(x) phi_y(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorBump {
    pub fx: GaussianBump,
    pub fy: GaussianBump,
}

impl TensorBump {
    pub fn new(fx: GaussianBump, fy: GaussianBump) -> Self {
        Self { fx, fy }
    }

    /// The documented test function: centers 16 and 23, widths 1.25 and 1.5.
    pub fn standard() -> Self {
        Self {
            fx: GaussianBump::new(1.0, 16.0, 1.25).expect("valid bump"),
            fy: GaussianBump::new(1.0, 23.0, 1.5).expect("valid bump"),
        }
    }

    pub fn zero() -> Self {
        let s = Self::standard();
        Self {
            fx: GaussianBump { amplitude: 0.0, ..s.fx },
            fy: s.fy,
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.fx.value(x) * self.fy.value(y)
    }

    fn lattice(&self) -> Result<(Vec<i64>, Vec<i64>)> {
        let axis = |f: &GaussianBump| {
            let (lo, hi) = f.support();
            (lo.ceil() as i64..=hi.floor() as i64).collect::<Vec<_>>()
        };
        let (xs, ys) = (axis(&self.fx), axis(&self.fy));
        let count = xs.len() as u64 * ys.len() as u64;
        if count > LATTICE_BUDGET {
            return Err(Error::SupportTooLarge(count));
        }
        Ok((xs, ys))
    }
}

/// `phi^(j/q)` for `j = -J..=J`, with `J` the first index past which the
/// transform stays below `DUAL_CUTOFF * |phi^(0)|`.
fn dual_table(f: &GaussianBump, q: u64) -> Result<(i64, Vec<Complex64>)> {
    let zero = f.fourier(0.0);
    let floor = DUAL_CUTOFF * zero.norm().max(f64::MIN_POSITIVE);
    let mut positive = vec![zero];
    let mut below = 0;
    let mut j = 0u64;
    while below < 2 {
        j += 1;
        if j > DUAL_BUDGET {
            return Err(Error::SupportTooLarge(j));
        }
        let v = f.fourier(j as f64 / q as f64);
        below = if v.norm() < floor { below + 1 } else { 0 };
        positive.push(v);
    }
    let big_j = positive.len() as i64 - 1;
    // phi is real, so phi^(-u) = conj(phi^(u)).
    let table = (-big_j..=big_j)
        .map(|j| {
            let v = positive[j.unsigned_abs() as usize];
            if j < 0 {
                v.conj()
            } else {
                v
            }
        })
        .collect();
    Ok((big_j, table))
}

/// Both sides of the plain identity and the two routes to `tau_h(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonSides {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `tau_h(0)` from the boundary integral.
    pub tau_h_zero: f64,
    /// `sum_{j1 j2 = 0} h(j1, j2)`, an independent route to `tau_h(0)`.
    pub tau_h_zero_axis_sum: f64,
    pub dual_terms: u64,
}

/// Both sides of the twisted identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistedPoissonSides {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub eta: Complex64,
}

struct Dual {
    jx: i64,
    jy: i64,
    tx: Vec<Complex64>,
    ty: Vec<Complex64>,
}

impl Dual {
    fn new(g: &TensorBump, q: u64) -> Result<Self> {
        let (jx, tx) = dual_table(&g.fx, q)?;
        let (jy, ty) = dual_table(&g.fy, q)?;
        Ok(Self { jx, jy, tx, ty })
    }

    fn h(&self, j1: i64, j2: i64, q: u64) -> Complex64 {
        self.tx[(j1 + self.jx) as usize] * self.ty[(j2 + self.jy) as usize] / q as f64
    }
}

fn tau_h_zero_integral(g: &TensorBump, q: u64) -> f64 {
    let (ix, iy) = (g.fx.integral(), g.fy.integral());
    ix * iy / q as f64 + iy * g.fx.fractional_moment(q) + ix * g.fy.fractional_moment(q)
}

fn tau_h_zero_axis(dual: &Dual, q: u64) -> f64 {
    let mut s = -dual.h(0, 0, q);
    for j in -dual.jy..=dual.jy {
        s += dual.h(0, j, q);
    }
    for j in -dual.jx..=dual.jx {
        s += dual.h(j, 0, q);
    }
    s.re
}

/// Evaluates both sides of the plain identity for `gcd(z, q) = 1`.
pub fn poisson_tau(g: &TensorBump, q: u64, z: i64) -> Result<PoissonSides> {
    if q == 0 {
        return Err(Error::InvalidModulus(q));
    }
    if gcd_signed(z, q) != 1 {
        return Err(Error::NotInvertible { x: z, modulus: q });
    }
    let (xs, ys) = g.lattice()?;
    let zr = reduce(z, q);
    let mut lhs = Complex64::new(0.0, 0.0);
    for &m1 in &xs {
        let a = g.fx.value(m1 as f64);
        if a == 0.0 {
            continue;
        }
        for &m2 in &ys {
            let k = (zr as u128 * reduce(m1, q) as u128 * reduce(m2, q) as u128 % q as u128) as u64;
            lhs += a * g.fy.value(m2 as f64) * unit_root(k, q);
        }
    }

    let dual = Dual::new(g, q)?;
    let z_inv = if q == 1 { 0 } else { mod_inverse(z, q)? };
    let neg_inv = (q - z_inv % q) % q;
    let mut rhs = Complex64::new(0.0, 0.0);
    for j1 in (-dual.jx..=dual.jx).filter(|&j| j != 0) {
        let r1 = reduce(j1, q) as u128;
        for j2 in (-dual.jy..=dual.jy).filter(|&j| j != 0) {
            let k = (neg_inv as u128 * r1 * reduce(j2, q) as u128 % q as u128) as u64;
            rhs += dual.h(j1, j2, q) * unit_root(k, q);
        }
    }
    let tau0 = tau_h_zero_integral(g, q);
    rhs += tau0;
    Ok(PoissonSides {
        lhs,
        rhs,
        tau_h_zero: tau0,
        tau_h_zero_axis_sum: tau_h_zero_axis(&dual, q),
        dual_terms: ((2 * dual.jx + 1) * (2 * dual.jy + 1)) as u64,
    })
}

/// Evaluates both sides of the character-twisted identity.
pub fn poisson_tau_twisted(g: &TensorBump, chi: &DirichletCharacter) -> Result<TwistedPoissonSides> {
    let q = chi.modulus();
    let eta = chi.eta()?;
    let (xs, ys) = g.lattice()?;
    let mut lhs = Complex64::new(0.0, 0.0);
    for &m1 in &xs {
        let a = g.fx.value(m1 as f64);
        let c1 = chi.value(m1);
        if a == 0.0 || c1 == Complex64::new(0.0, 0.0) {
            continue;
        }
        for &m2 in &ys {
            lhs += a * g.fy.value(m2 as f64) * c1 * chi.value(m2);
        }
    }
    let dual = Dual::new(g, q)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for j1 in -dual.jx..=dual.jx {
        let c1 = chi.value(j1).conj();
        for j2 in -dual.jy..=dual.jy {
            if j1 == 0 || j2 == 0 {
                continue;
            }
            sum += dual.h(j1, j2, q) * c1 * chi.value(j2).conj();
        }
    }
    if q == 1 {
        sum += tau_h_zero_integral(g, q);
    }
    Ok(TwistedPoissonSides {
        lhs,
        rhs: eta * sum,
        eta,
    })
}
