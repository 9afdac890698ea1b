//! The Voronoi expansion of the divisor-sum error term
//!
//! ```text
//! R(X; a, q) ~ (1/q) sum_{d | q} sum_{n <= V(d)} tau(n) [u+_d(n) K_d(-n, a) + u-_d(n) K_d(n, a)]
//! ```
//!
//! together with the exactly computable smoothed error term it approximates.

use super::cutoff::SmoothCutoff;
use super::quadrature::{integrate_panels, QuadOptions};
use super::weights::{Sign, VoronoiWeights, DEFAULT_EPSILON};
use crate::arith::{gcd, reduce, FactoredModulus};
use crate::error::{Error, Result};
use crate::kloosterman::KloostermanEvaluator;
use crate::main_term::{error_term, EULER_GAMMA};
use crate::numeric::CompensatedSum;
use crate::par;
use crate::tau::sieve_tau;

pub const DEFAULT_BUDGET_EXPONENT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiOptions {
    /// `eps` in `V(d) = d^2 X^(1 + eps) / Y^2`.
    pub epsilon: f64,
    /// The dual sum runs over `n <= truncation_factor * V(d)`.
    pub truncation_factor: f64,
    /// Exponent `theta` in the budget `(Y/q + 1)(Y q)^theta`.
    pub budget_exponent: f64,
}

impl Default for VoronoiOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            truncation_factor: 1.0,
            budget_exponent: DEFAULT_BUDGET_EXPONENT,
        }
    }
}

/// `Y = sqrt(q X^(1 + eps))`, clamped to `[1, X/2]`.
pub fn default_y(x: u64, q: u64, epsilon: f64) -> f64 {
    let y = (q as f64 * (x as f64).powf(1.0 + epsilon)).sqrt();
    y.clamp(1.0, 0.5 * x as f64)
}

/// Per-divisor truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisorTruncation {
    pub d: u64,
    pub u_threshold: f64,
    pub v_threshold: f64,
    pub terms: u64,
    /// `max |u+|, |u-|` at the first `n` past the cut.
    pub first_omitted_weight: f64,
    /// Bound on the error the quadrature can inject into `R`, using the Weil
    /// bound `tau(d) sqrt(d)` for the Kloosterman factors.
    pub quadrature_error_bound: f64,
    pub flagged_weights: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub x: u64,
    pub q: u64,
    pub y: f64,
    pub epsilon: f64,
    pub divisors: Vec<DivisorTruncation>,
}

impl TruncationReport {
    pub fn total_terms(&self) -> u64 {
        self.divisors.iter().map(|t| t.terms).sum()
    }

    pub fn quadrature_error_bound(&self) -> f64 {
        self.divisors.iter().map(|t| t.quadrature_error_bound).sum()
    }
}

#[derive(Debug)]
struct DivisorData {
    weights: VoronoiWeights,
    evaluator: KloostermanEvaluator,
}

/// Precomputed weights and divisor counts for one `(X, q, Y)`, reusable
/// across residues `a`.
#[derive(Debug)]
pub struct VoronoiExpansion {
    x: u64,
    q: u64,
    cutoff: SmoothCutoff,
    options: VoronoiOptions,
    modulus: FactoredModulus,
    divisors: Vec<DivisorData>,
    tau: Vec<u32>,
    report: TruncationReport,
}

impl VoronoiExpansion {
    pub fn new(x: u64, q: u64, y: f64, options: VoronoiOptions) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidModulus(q));
        }
        if !(options.truncation_factor >= 1.0) {
            return Err(Error::InvalidRange(format!(
                "truncation factor {} is below 1",
                options.truncation_factor
            )));
        }
        let cutoff = SmoothCutoff::new(x as f64, y)?;
        let modulus = FactoredModulus::new(q)?;
        let divisor_list = modulus.divisors();
        let built = par::map_slice(&divisor_list, |&d| -> Result<DivisorData> {
            let mut weights = VoronoiWeights::new(d, cutoff, options.epsilon)?;
            let n_max = (options.truncation_factor * weights.v_threshold()).floor() as u64;
            weights.extend_to(n_max + 1)?;
            Ok(DivisorData {
                weights,
                evaluator: KloostermanEvaluator::new(d)?,
            })
        });
        let mut divisors = Vec::with_capacity(built.len());
        for b in built {
            divisors.push(b?);
        }
        let n_max = divisors
            .iter()
            .map(|dd| dd.weights.len() as u64)
            .max()
            .unwrap_or(1)
            .max(1);
        let tau = sieve_tau(1, n_max)?.values().to_vec();

        let divisor_reports = divisors
            .iter()
            .map(|dd| {
                let w = &dd.weights;
                let terms = w.len() as u64 - 1;
                let d = w.d();
                let weil = FactoredModulus::new(d)
                    .map(|f| f.num_divisors() as f64)
                    .unwrap_or(1.0)
                    * (d as f64).sqrt();
                let mut err = 0.0;
                let mut flagged = 0;
                for n in 1..=terms {
                    let p = w.get(n, Sign::Plus).expect("computed");
                    let m = w.get(n, Sign::Minus).expect("computed");
                    err += tau[n as usize - 1] as f64 * (p.error + m.error);
                    flagged += usize::from(p.flagged()) + usize::from(m.flagged());
                }
                let next = terms + 1;
                let first_omitted = w
                    .get(next, Sign::Plus)
                    .map(|v| v.value.abs())
                    .unwrap_or(0.0)
                    .max(w.get(next, Sign::Minus).map(|v| v.value.abs()).unwrap_or(0.0));
                DivisorTruncation {
                    d,
                    u_threshold: w.u_threshold(),
                    v_threshold: w.v_threshold(),
                    terms,
                    first_omitted_weight: first_omitted,
                    quadrature_error_bound: err * weil / q as f64,
                    flagged_weights: flagged,
                }
            })
            .collect();
        let report = TruncationReport {
            x,
            q,
            y,
            epsilon: options.epsilon,
            divisors: divisor_reports,
        };
        Ok(Self {
            x,
            q,
            cutoff,
            options,
            modulus,
            divisors,
            tau,
            report,
        })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn cutoff(&self) -> &SmoothCutoff {
        &self.cutoff
    }

    pub fn options(&self) -> &VoronoiOptions {
        &self.options
    }

    pub fn report(&self) -> &TruncationReport {
        &self.report
    }

    fn check_residue(&self, a: i64) -> Result<u64> {
        let r = reduce(a, self.q);
        if gcd(r, self.q) != 1 {
            return Err(Error::NonReducedResidue { a: r, q: self.q });
        }
        Ok(r)
    }

    /// The `+` and `-` branches of the dual sum, each already divided by `q`.
    pub fn branch_sums(&self, a: i64) -> Result<(f64, f64)> {
        let a = self.check_residue(a)? as i64;
        let mut plus = CompensatedSum::new();
        let mut minus = CompensatedSum::new();
        for dd in &self.divisors {
            let d = dd.evaluator.modulus();
            // K_d is symmetric, so the row of K_d(a, .) is the row of K_d(., a).
            let row = dd.evaluator.row(a);
            let terms = dd.weights.len() as u64 - 1;
            for n in 1..=terms {
                let t = self.tau[n as usize - 1] as f64;
                let up = dd.weights.get(n, Sign::Plus).expect("computed").value;
                let um = dd.weights.get(n, Sign::Minus).expect("computed").value;
                let k_neg = row[reduce(-(n as i64), d) as usize];
                let k_pos = row[(n % d) as usize];
                plus.add(t * up * k_neg);
                minus.add(t * um * k_pos);
            }
        }
        let q = self.q as f64;
        Ok((plus.value() / q, minus.value() / q))
    }

    /// Truncated dual sum approximating `R(X; a, q)`.
    pub fn approx_error_term(&self, a: i64) -> Result<f64> {
        let (p, m) = self.branch_sums(a)?;
        Ok(p + m)
    }

    /// `(Y/q + 1)(Y q)^theta`.
    pub fn budget(&self) -> f64 {
        let y = self.cutoff.y();
        let q = self.q as f64;
        (y / q + 1.0) * (y * q).powf(self.options.budget_exponent)
    }

    /// `sum_{n = a (q)} tau(n) w(n) - (1/q) sum_{d | q} (r_d(a)/d) int w(x)(ln x + 2 gamma - 2 ln d) dx`,
    /// the error term of the smoothed divisor sum that the dual sum
    /// represents exactly once untruncated.
    pub fn smoothed_error_term(&self, a: i64) -> Result<f64> {
        let a = self.check_residue(a)?;
        smoothed_error_term_inner(&self.cutoff, &self.modulus, a)
    }
}

fn smoothed_error_term_inner(cutoff: &SmoothCutoff, modulus: &FactoredModulus, a: u64) -> Result<f64> {
    let q = modulus.value();
    let lo = cutoff.y().floor() as u64 + 1;
    let hi = (cutoff.x() + cutoff.y()).ceil() as u64;
    let table = sieve_tau(lo, hi - lo + 1)?;
    let mut sum = CompensatedSum::new();
    let first = lo + (a + q - lo % q) % q;
    let mut n = first;
    while n <= hi {
        let w = cutoff.value(n as f64);
        if w != 0.0 {
            sum.add(table.get(n).expect("inside window") as f64 * w);
        }
        n += q;
    }
    let opts = QuadOptions {
        refine: 4,
        ..QuadOptions::default()
    };
    let points = cutoff.breakpoints();
    let w0 = cutoff.integral();
    let wlog = integrate_panels(|t| cutoff.value(t) * t.ln(), &points, &opts).value;
    let mut main = CompensatedSum::new();
    for d in modulus.divisor_factorizations() {
        let dv = d.value() as f64;
        let r = crate::arith::ramanujan_sum_factored(&d, a as i64) as f64;
        main.add(r / dv * (wlog + (2.0 * EULER_GAMMA - 2.0 * dv.ln()) * w0));
    }
    Ok(sum.value() - main.value() / q as f64)
}

/// The smoothed error term for a single residue without building the dual sum.
pub fn smoothed_error_term(x: u64, q: u64, a: i64, y: f64) -> Result<f64> {
    let cutoff = SmoothCutoff::new(x as f64, y)?;
    let modulus = FactoredModulus::new(q)?;
    let r = reduce(a, q);
    if gcd(r, q) != 1 {
        return Err(Error::NonReducedResidue { a: r, q });
    }
    smoothed_error_term_inner(&cutoff, &modulus, r)
}

/// Approximation of `R(X; a, q)` by the truncated dual sum, with the
/// per-divisor truncation report.
pub fn voronoi_error_term(x: u64, q: u64, a: i64, y: f64) -> Result<(f64, TruncationReport)> {
    let expansion = VoronoiExpansion::new(x, q, y, VoronoiOptions::default())?;
    let r = expansion.approx_error_term(a)?;
    Ok((r, expansion.report))
}

/// One row of a Voronoi check: the exact error term, its dual-sum
/// approximation, and the budget it is held to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiCheckRow {
    pub a: u64,
    pub r_exact: f64,
    pub r_voronoi: f64,
    pub residual: f64,
    pub budget: f64,
    pub r_smoothed: f64,
}

impl VoronoiExpansion {
    pub fn check(&self, a: i64) -> Result<VoronoiCheckRow> {
        let r_exact = error_term(self.x, self.q, a)?.r;
        let r_voronoi = self.approx_error_term(a)?;
        Ok(VoronoiCheckRow {
            a: reduce(a, self.q),
            r_exact,
            r_voronoi,
            residual: (r_exact - r_voronoi).abs(),
            budget: self.budget(),
            r_smoothed: self.smoothed_error_term(a)?,
        })
    }
}
