//! Right-hand sides and range conditions of the averaged bounds, with every
//! `X^{o(1)}` factor set to 1.

use serde::{Deserialize, Serialize};

/// `A X^{1/2} p^{-1/2} + A^{3/2} X^{1/2} p^{-5/8} + A^{1/2} X^{1/2} p^{-1/8}
/// + A^{5/6} X^{5/18} p^{11/72}`, bounding `D(X; I, p)` for an interval.
pub fn interval_prime_rhs(a: f64, x: f64, p: f64) -> f64 {
    a * x.sqrt() * p.powf(-0.5)
        + a.powf(1.5) * x.sqrt() * p.powf(-5.0 / 8.0)
        + a.sqrt() * x.sqrt() * p.powf(-1.0 / 8.0)
        + a.powf(5.0 / 6.0) * x.powf(5.0 / 18.0) * p.powf(11.0 / 72.0)
}

/// `A <= p` and `X >= p >= X^{4/7}`.
pub fn interval_prime_regime(a: f64, x: f64, p: f64) -> bool {
    a <= p && x >= p && p >= x.powf(4.0 / 7.0)
}

/// `A X^{1/2} q^{-1/2} + A^{1/8} X^{1/4} q^{1/2} + A^{1/2} X^{1/4} q^{1/4}`,
/// bounding `|E(X; I, q)|` for an interval and any modulus.
pub fn interval_any_rhs(a: f64, x: f64, q: f64) -> f64 {
    a * x.sqrt() * q.powf(-0.5) + a.powf(0.125) * x.powf(0.25) * q.sqrt() + a.sqrt() * x.powf(0.25) * q.powf(0.25)
}

/// `A <= q` and `X >= q >= X^{19/31}`.
pub fn interval_any_regime(a: f64, x: f64, q: f64) -> bool {
    a <= q && x >= q && q >= x.powf(19.0 / 31.0)
}

/// `A^{3/4} X^{1/4} p^{1/4} + A^{2/3} X^{1/3}`, bounding `D(X; A, p)` for
/// an arbitrary set of size `A`.
pub fn arbitrary_set_rhs(a: f64, x: f64, p: f64) -> f64 {
    a.powf(0.75) * x.powf(0.25) * p.powf(0.25) + a.powf(2.0 / 3.0) * x.powf(1.0 / 3.0)
}

/// `p <= min{A X^{1/3 - eps}, X^{1 - eps} / A}`: the bound beats both the
/// summed individual bound and the Cauchy-Schwarz bound.
pub fn arbitrary_set_regime(a: f64, x: f64, p: f64, epsilon: f64) -> bool {
    p <= (a * x.powf(1.0 / 3.0 - epsilon)).min(x.powf(1.0 - epsilon) / a)
}

/// `max{p X^{-1/3 + 4 kappa}, X^{3 kappa}}`.
pub fn exceptional_envelope(x: f64, p: f64, kappa: f64) -> f64 {
    (p * x.powf(-1.0 / 3.0 + 4.0 * kappa)).max(x.powf(3.0 * kappa))
}

/// The envelope says something only when it is below the trivial `p - 1`.
pub fn exceptional_regime(x: f64, p: f64, kappa: f64) -> bool {
    exceptional_envelope(x, p, kappa) < p - 1.0
}

/// Choice of the cutoff parameter `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum YPolicy {
    Fixed { value: f64 },
    /// `sqrt(q X^{1+eps})`.
    SqrtQ,
    /// `max{A^{1/2} X^{1/2+eps/2} p^{3/8}, A^{-1/2} X^{1/2+eps/2} p^{7/8},
    /// A^{-1/6} X^{5/18} p^{83/72}}`.
    LargeP,
    /// `X^{1/3} p / A^{1/3}`.
    SmallY,
}

impl YPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            YPolicy::Fixed { .. } => "fixed",
            YPolicy::SqrtQ => "sqrt-q",
            YPolicy::LargeP => "large-p",
            YPolicy::SmallY => "small-y",
        }
    }

    /// Unclamped `Y` for set size `a`.
    pub fn raw(&self, x: f64, q: f64, a: f64, epsilon: f64) -> f64 {
        match *self {
            YPolicy::Fixed { value } => value,
            YPolicy::SqrtQ => (q * x.powf(1.0 + epsilon)).sqrt(),
            YPolicy::LargeP => {
                let xe = x.powf(0.5 + epsilon / 2.0);
                (a.sqrt() * xe * q.powf(3.0 / 8.0))
                    .max(xe * q.powf(7.0 / 8.0) / a.sqrt())
                    .max(a.powf(-1.0 / 6.0) * x.powf(5.0 / 18.0) * q.powf(83.0 / 72.0))
            }
            YPolicy::SmallY => x.powf(1.0 / 3.0) * q / a.cbrt(),
        }
    }

    /// `Y` clamped into `[1, X/2]`, the range the smooth cutoff accepts.
    pub fn resolve(&self, x: f64, q: f64, a: f64, epsilon: f64) -> f64 {
        self.raw(x, q, a, epsilon).clamp(1.0, (x / 2.0).max(1.0))
    }
}
