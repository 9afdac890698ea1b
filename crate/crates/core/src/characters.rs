//! Multiplicative characters modulo a prime, the fourth moment of short
//! character sums, and counts of multiplicative congruences
//! `x1 x2 = x3 x4 (mod p)` over boxes.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::{gcd, is_prime, mul_mod, primitive_root, reduce, FactoredModulus};
use crate::error::{Error, Result};
use crate::kloosterman::unit_root;

/// The character group modulo an odd prime `p`, indexed by discrete logs:
/// `chi_j(g^k) = e((j k) / (p - 1))`.
#[derive(Debug, Clone)]
pub struct CharacterTable {
    p: u64,
    g: u64,
    index: Vec<u32>,
}

impl CharacterTable {
    pub fn new(p: u64) -> Result<Self> {
        if p > u32::MAX as u64 {
            return Err(Error::InvalidModulus(p));
        }
        let g = primitive_root(p)?;
        let mut index = vec![u32::MAX; p as usize];
        let mut x = 1u64;
        for k in 0..p - 1 {
            index[x as usize] = k as u32;
            x = mul_mod(x, g, p);
        }
        Ok(Self { p, g, index })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.g
    }

    /// Number of characters, `p - 1`.
    pub fn order(&self) -> u64 {
        self.p - 1
    }

    /// Discrete log of `x` base the generator; `None` when `p | x`.
    pub fn discrete_log(&self, x: i64) -> Option<u64> {
        let r = reduce(x, self.p);
        (r != 0).then(|| self.index[r as usize] as u64)
    }

    pub fn chi(&self, j: u64, x: i64) -> Complex64 {
        match self.discrete_log(x) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => {
                let n = self.order();
                let e = (j % n) as u128 * k as u128 % n as u128;
                unit_root(e as u64, n)
            }
        }
    }

    pub fn character(&self, j: u64) -> DirichletCharacter {
        DirichletCharacter {
            q: self.p,
            values: (0..self.p).map(|x| self.chi(j, x as i64)).collect(),
        }
    }

    /// The Legendre symbol, i.e. the character of order two.
    pub fn quadratic(&self) -> DirichletCharacter {
        self.character(self.order() / 2)
    }
}

/// A Dirichlet character given by its table of values on `[0, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCharacter {
    q: u64,
    values: Vec<Complex64>,
}

impl DirichletCharacter {
    /// Wraps a value table, checking that it is completely multiplicative and
    /// supported exactly on the units.
    pub fn from_values(q: u64, values: Vec<Complex64>) -> Result<Self> {
        if q == 0 || values.len() as u64 != q {
            return Err(Error::InvalidModulus(q));
        }
        let chi = Self { q, values };
        for a in 0..q {
            let unit = gcd(a, q) == 1;
            let v = chi.values[a as usize];
            if unit != (v.norm() > 0.5) || (unit && (v.norm() - 1.0).abs() > 1e-9) {
                return Err(Error::InvalidWeights(format!("value at {a} is {v}")));
            }
            for b in 0..q {
                let ab = chi.values[mul_mod(a, b, q) as usize];
                if (ab - v * chi.values[b as usize]).norm() > 1e-9 {
                    return Err(Error::InvalidWeights(format!("not multiplicative at ({a}, {b})")));
                }
            }
        }
        Ok(chi)
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn value(&self, n: i64) -> Complex64 {
        self.values[reduce(n, self.q) as usize]
    }

    pub fn conj(&self) -> Self {
        Self {
            q: self.q,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Primitive iff not induced from any proper divisor `d` of `q`, i.e.
    /// for each such `d` some unit `a = 1 (mod d)` has `chi(a) != 1`.
    pub fn is_primitive(&self) -> bool {
        if self.q == 1 {
            return true;
        }
        let one = Complex64::new(1.0, 0.0);
        let divs = FactoredModulus::new(self.q).expect("positive").divisors();
        divs.into_iter().filter(|&d| d < self.q).all(|d| {
            (1..self.q)
                .step_by(d as usize)
                .any(|a| gcd(a, self.q) == 1 && (self.values[a as usize] - one).norm() > 1e-9)
        })
    }

    /// `tau(chi) = sum_{z=1}^{q} conj(chi(z)) e_q(z)`.
    pub fn gauss_sum(&self) -> Complex64 {
        (1..=self.q)
            .map(|z| self.values[(z % self.q) as usize].conj() * unit_root(z % self.q, self.q))
            .sum()
    }

    /// `eta(chi) = conj(tau(chi)) / tau(chi)`.
    pub fn eta(&self) -> Result<Complex64> {
        if !self.is_primitive() {
            return Err(Error::NotPrimitive(self.q));
        }
        let t = self.gauss_sum();
        Ok(t.conj() / t)
    }
}

/// `#{x in [start, start + len) : x = r (mod p)}` for every `r`.
fn residue_histogram(start: i64, len: u64, p: u64) -> Vec<u64> {
    let mut hist = vec![len / p; p as usize];
    let first = reduce(start, p);
    for k in 0..len % p {
        hist[((first + k) % p) as usize] += 1;
    }
    hist
}

/// `sum_{chi != chi_0} |sum_{x=K}^{K+H} chi(x)|^4` modulo the odd prime `p`.
///
/// The inner sums for all characters at once are the DFT over `Z_{p-1}` of
/// the discrete-log histogram of `[K, K+H]`.
pub fn fourth_moment(p: u64, k: i64, h: u64) -> Result<f64> {
    let table = CharacterTable::new(p)?;
    let n = table.order() as usize;
    let hist = residue_histogram(k, h + 1, p);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (r, &c) in hist.iter().enumerate().skip(1) {
        buf[table.index[r] as usize] += c as f64;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().skip(1).map(|z| z.norm_sqr().powi(2)).sum())
}

/// A run of consecutive integers `start, ..., start + len - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub start: i64,
    pub len: u64,
}

impl IntRange {
    pub fn new(start: i64, len: u64) -> Self {
        Self { start, len }
    }

    /// The inclusive range `[lo, hi]`; empty when `hi < lo`.
    pub fn inclusive(lo: i64, hi: i64) -> Self {
        Self {
            start: lo,
            len: (hi - lo + 1).max(0) as u64,
        }
    }
}

fn product_histogram(p: u64, h1: &[u64], h2: &[u64]) -> Vec<u128> {
    let nz1: Vec<(u64, u64)> = (1..p).filter(|&r| h1[r as usize] > 0).map(|r| (r, h1[r as usize])).collect();
    let nz2: Vec<(u64, u64)> = (1..p).filter(|&r| h2[r as usize] > 0).map(|r| (r, h2[r as usize])).collect();
    let mut out = vec![0u128; p as usize];
    for &(r1, c1) in &nz1 {
        for &(r2, c2) in &nz2 {
            out[mul_mod(r1, r2, p) as usize] += c1 as u128 * c2 as u128;
        }
    }
    out
}

/// `#{(x1, x2, x3, x4) in H1 x H2 x H3 x H4 : p does not divide x1 x2 x3 x4,
/// x1 x2 = x3 x4 (mod p)}`.
pub fn multiplicative_congruence_count(p: u64, boxes: &[IntRange; 4]) -> Result<u128> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let hist: Vec<Vec<u64>> = boxes.iter().map(|b| residue_histogram(b.start, b.len, p)).collect();
    let left = product_histogram(p, &hist[0], &hist[1]);
    let right = product_histogram(p, &hist[2], &hist[3]);
    Ok(left.iter().zip(&right).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceBoundReport {
    pub count: u128,
    /// `H1 H2 H3 H4 / p + (H1 H2 H3 H4)^{1/2}`.
    pub envelope: f64,
    pub ratio: f64,
}

pub fn congruence_bound_report(count: u128, p: u64, boxes: &[IntRange; 4]) -> CongruenceBoundReport {
    let prod: f64 = boxes.iter().map(|b| b.len as f64).product();
    let envelope = prod / p as f64 + prod.sqrt();
    let ratio = if envelope == 0.0 { 0.0 } else { count as f64 / envelope };
    CongruenceBoundReport { count, envelope, ratio }
}

/// `(1/phi(p)) sum_chi chi(a)`, which is 1 for `a = 1` and 0 for other units.
pub fn orthogonality_sum(table: &CharacterTable, a: i64) -> Complex64 {
    let n = table.order();
    (0..n).map(|j| table.chi(j, a)).sum::<Complex64>() / n as f64
}
