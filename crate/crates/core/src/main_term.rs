//! Main term `M(X; a, q) = (X/q) P(log X; q, a)`, the error term
//! `R = S - M`, and averages of `R` over residue sets.

use std::collections::HashMap;

use crate::arith::{gcd, gcd_signed, is_prime, ramanujan_sum_factored, reduce, FactoredModulus, Interval};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::par;
use crate::tau::{divisor_sum_progressions, divisor_sum_residue};

/// Euler-Mascheroni constant to 20 digits.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// `P(T; q, a) = sum_{d | q} (r_d(a)/d) (T - 2 log d + 2 gamma - 1)`, stored
/// both as its divisor terms and as the linear form `c1 T + c0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MainTermPolynomial {
    q: u64,
    a: u64,
    coefficients: Vec<(u64, i64)>,
    c1: f64,
    c0: f64,
}

impl MainTermPolynomial {
    pub fn new(q: u64, a: i64) -> Result<Self> {
        let fq = FactoredModulus::new(q)?;
        Ok(Self::from_factored(&fq, a))
    }

    fn from_factored(fq: &FactoredModulus, a: i64) -> Self {
        let coefficients: Vec<(u64, i64)> = fq
            .divisor_factorizations()
            .iter()
            .map(|fd| (fd.value(), ramanujan_sum_factored(fd, a)))
            .collect();
        let c1 = compensated_sum(coefficients.iter().map(|&(d, r)| r as f64 / d as f64));
        let c0 = compensated_sum(coefficients.iter().map(|&(d, r)| {
            r as f64 / d as f64 * (-2.0 * (d as f64).ln() + 2.0 * EULER_GAMMA - 1.0)
        }));
        Self {
            q: fq.value(),
            a: reduce(a, fq.value()),
            coefficients,
            c1,
            c0,
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// `(d, r_d(a))` for each divisor `d` of `q`.
    pub fn coefficients(&self) -> &[(u64, i64)] {
        &self.coefficients
    }

    pub fn slope(&self) -> f64 {
        self.c1
    }

    pub fn intercept(&self) -> f64 {
        self.c0
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.c1 * t + self.c0
    }

    /// Evaluates the defining divisor sum term by term.
    pub fn evaluate_direct(&self, t: f64) -> f64 {
        compensated_sum(self.coefficients.iter().map(|&(d, r)| {
            r as f64 / d as f64 * (t - 2.0 * (d as f64).ln() + 2.0 * EULER_GAMMA - 1.0)
        }))
    }

    pub fn main_term(&self, x: u64) -> f64 {
        let xf = x as f64;
        xf / self.q as f64 * self.evaluate(xf.ln())
    }
}

fn check_modulus(q: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::InvalidModulus(q));
    }
    Ok(())
}

pub fn main_term(x: u64, q: u64, a: i64) -> Result<f64> {
    check_modulus(q)?;
    Ok(MainTermPolynomial::new(q, a)?.main_term(x))
}

/// The simplified form of `M(X; a, q)` valid when `gcd(a, q) = 1`:
/// `(phi(q)/q^2) X (ln X + 2 gamma - 1) - (2/q) X sum_{d | q} mu(d) ln d / d`.
pub fn main_term_coprime_form(x: u64, q: u64) -> Result<f64> {
    check_modulus(q)?;
    let fq = FactoredModulus::new(q)?;
    let xf = x as f64;
    let qf = q as f64;
    let mu_sum = compensated_sum(
        fq.divisors_with_mobius()
            .into_iter()
            .map(|(d, mu)| mu as f64 * (d as f64).ln() / d as f64),
    );
    Ok(fq.phi() as f64 / (qf * qf) * xf * (xf.ln() + 2.0 * EULER_GAMMA - 1.0) - 2.0 / qf * xf * mu_sum)
}

/// One row of the decomposition `S = M + R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTermRecord {
    pub x: u64,
    pub q: u64,
    pub a: u64,
    pub s: u64,
    pub m: f64,
    pub r: f64,
}

impl ErrorTermRecord {
    fn new(x: u64, q: u64, a: u64, s: u64, m: f64) -> Self {
        Self {
            x,
            q,
            a,
            s,
            m,
            r: s as f64 - m,
        }
    }
}

pub fn error_term(x: u64, q: u64, a: i64) -> Result<ErrorTermRecord> {
    check_modulus(q)?;
    let s = divisor_sum_residue(x, q, a)?;
    let m = main_term(x, q, a)?;
    Ok(ErrorTermRecord::new(x, q, reduce(a, q), s, m))
}

/// Main terms for every residue modulo `q`, sharing one polynomial per
/// value of `gcd(a, q)` (the polynomial depends on `a` only through it).
pub struct MainTermTable {
    q: u64,
    by_gcd: HashMap<u64, MainTermPolynomial>,
}

impl MainTermTable {
    pub fn new(q: u64) -> Result<Self> {
        check_modulus(q)?;
        let fq = FactoredModulus::new(q)?;
        let by_gcd = fq
            .divisors()
            .into_iter()
            .map(|g| (g, MainTermPolynomial::from_factored(&fq, g as i64)))
            .collect();
        Ok(Self { q, by_gcd })
    }

    pub fn polynomial(&self, a: i64) -> &MainTermPolynomial {
        &self.by_gcd[&gcd_signed(a, self.q)]
    }

    pub fn main_term(&self, x: u64, a: i64) -> f64 {
        self.polynomial(a).main_term(x)
    }
}

/// Error-term records for every residue `a` in `[0, q)`.
pub fn error_terms(x: u64, q: u64) -> Result<Vec<ErrorTermRecord>> {
    let sums = divisor_sum_progressions(x, q)?;
    let table = MainTermTable::new(q)?;
    Ok(par::map_range(0..q, |a| {
        ErrorTermRecord::new(x, q, a, sums.sums()[a as usize], table.main_term(x, a as i64))
    }))
}

/// Error-term records for a chosen list of residues.
///
/// Small lists use the per-residue counting routine; large ones compute the
/// whole progression vector once.
pub fn error_terms_for(x: u64, q: u64, residues: &[u64]) -> Result<Vec<ErrorTermRecord>> {
    check_modulus(q)?;
    let table = MainTermTable::new(q)?;
    let per_residue_cost = residues.len() as u64 * crate::arith::isqrt(x);
    if per_residue_cost < x {
        residues
            .iter()
            .map(|&a| {
                let s = divisor_sum_residue(x, q, a as i64)?;
                Ok(ErrorTermRecord::new(x, q, a % q, s, table.main_term(x, a as i64)))
            })
            .collect()
    } else {
        let sums = divisor_sum_progressions(x, q)?;
        Ok(residues
            .iter()
            .map(|&a| ErrorTermRecord::new(x, q, a % q, sums.get(a as i64), table.main_term(x, a as i64)))
            .collect())
    }
}

/// A set of residues: an interval `{B+1, ..., B+A}` or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResidueSet {
    Interval(Interval),
    List(Vec<u64>),
}

/// How [`ResidueSet::resolve`] treats elements that are not reduced residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetMode {
    /// Every element must lie in `[1, q-1]` and be coprime to `q`.
    Strict,
    /// Elements are reduced modulo `q`; non-coprime ones and duplicates are
    /// dropped and counted.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSet {
    pub residues: Vec<u64>,
    pub dropped: usize,
}

impl ResidueSet {
    fn elements(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match self {
            ResidueSet::Interval(i) => Box::new(i.iter()),
            ResidueSet::List(v) => Box::new(v.iter().copied()),
        }
    }

    pub fn resolve(&self, q: u64, mode: SetMode) -> Result<ResolvedSet> {
        let mut residues = Vec::new();
        let mut dropped = 0;
        match mode {
            SetMode::Strict => {
                for a in self.elements() {
                    if a == 0 || a >= q || gcd(a, q) != 1 {
                        return Err(Error::NonReducedResidue { a, q });
                    }
                    residues.push(a);
                }
            }
            SetMode::Lenient => {
                let mut seen = std::collections::HashSet::new();
                for a in self.elements() {
                    let r = a % q;
                    if gcd(r, q) != 1 || !seen.insert(r) {
                        dropped += 1;
                    } else {
                        residues.push(r);
                    }
                }
            }
        }
        Ok(ResolvedSet { residues, dropped })
    }
}

/// `D = sum |R|` and `E = sum R` over a residue set.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedErrors {
    pub x: u64,
    pub q: u64,
    pub set: ResidueSet,
    pub d_sum: f64,
    pub e_sum: f64,
    pub cardinality: usize,
    pub dropped: usize,
}

pub fn averaged_errors(x: u64, q: u64, set: &ResidueSet, mode: SetMode) -> Result<AveragedErrors> {
    let resolved = set.resolve(q, mode)?;
    let records = error_terms_for(x, q, &resolved.residues)?;
    let (d_sum, e_sum) = sum_abs_and_signed(&records);
    Ok(AveragedErrors {
        x,
        q,
        set: set.clone(),
        d_sum,
        e_sum,
        cardinality: resolved.residues.len(),
        dropped: resolved.dropped,
    })
}

/// `(sum |R|, sum R)` accumulated in ascending residue order.
pub fn sum_abs_and_signed(records: &[ErrorTermRecord]) -> (f64, f64) {
    let mut sorted: Vec<&ErrorTermRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.a);
    let mut d = CompensatedSum::new();
    let mut e = CompensatedSum::new();
    for r in sorted {
        d.add(r.r.abs());
        e.add(r.r);
    }
    (d.value(), e.value())
}

/// Which residues enter a moment computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueScope {
    /// Every `a` in `[0, q)`.
    All,
    /// Only `a` coprime to `q`.
    Reduced,
}

/// `sum_a R(X; a, q)^2` over the chosen scope.
pub fn second_moment(records: &[ErrorTermRecord], scope: ResidueScope) -> f64 {
    let mut sorted: Vec<&ErrorTermRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.a);
    compensated_sum(
        sorted
            .into_iter()
            .filter(|r| scope == ResidueScope::All || gcd(r.a, r.q) == 1)
            .map(|r| r.r * r.r),
    )
}

fn check_exceptional_inputs(x: u64, p: u64, kappa: f64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p > x {
        return Err(Error::InvalidRange(format!("need p <= X, got p = {p}, X = {x}")));
    }
    if !(kappa > 0.0 && kappa < 1.0 / 3.0) {
        return Err(Error::InvalidRange(format!("kappa = {kappa} outside (0, 1/3)")));
    }
    Ok(())
}

/// Records for `a` in `[1, p-1]` with `R(X; a, p) >= X^{1/3 - kappa}`.
pub fn exceptional_records(x: u64, p: u64, kappa: f64) -> Result<Vec<ErrorTermRecord>> {
    check_exceptional_inputs(x, p, kappa)?;
    let threshold = (x as f64).powf(1.0 / 3.0 - kappa);
    Ok(error_terms(x, p)?
        .into_iter()
        .filter(|r| r.a != 0 && r.r >= threshold)
        .collect())
}

pub fn exceptional_set(x: u64, p: u64, kappa: f64) -> Result<Vec<u64>> {
    Ok(exceptional_records(x, p, kappa)?.into_iter().map(|r| r.a).collect())
}

/// `max{p X^{-1/3 + 4 kappa}, X^{3 kappa}}`, the size envelope for the
/// exceptional set with the `X^{o(1)}` factor dropped.
pub fn exceptional_set_envelope(x: u64, p: u64, kappa: f64) -> f64 {
    let xf = x as f64;
    (p as f64 * xf.powf(-1.0 / 3.0 + 4.0 * kappa)).max(xf.powf(3.0 * kappa))
}
