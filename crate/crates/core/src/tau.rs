//! Exact divisor counts over windows and divisor sums over arithmetic
//! progressions.
//!
//! Two evaluation strategies share one contract: a naive sieve that
//! materializes `tau(n)` for `n <= X` and buckets it by residue, and the
//! hyperbola method that counts pairs `(d, m)` with `dm <= X`, `d <= m`
//! directly in residue buckets without touching `tau` at all.

use crate::arith::{gcd, isqrt, mod_inverse, mul_mod};
use crate::error::{Error, Result};
use crate::par;

/// Default memory budget for a sieve window.
pub const DEFAULT_SIEVE_BUDGET_BYTES: u64 = 2 << 30;

/// Largest `window_start + window_len` the sieve accepts.
pub const SIEVE_CEILING: u64 = 1 << 40;

/// Above this `X`, [`ProgressionMethod::Auto`] switches to the hyperbola method.
pub const DEFAULT_CUTOVER: u64 = 1_000_000;

const SEGMENT_LEN: usize = 1 << 16;

/// Divisor counts for `window_start, ..., window_start + len - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauTable {
    window_start: u64,
    tau: Vec<u32>,
}

impl TauTable {
    pub fn window_start(&self) -> u64 {
        self.window_start
    }

    pub fn window_len(&self) -> u64 {
        self.tau.len() as u64
    }

    pub fn values(&self) -> &[u32] {
        &self.tau
    }

    /// `tau(n)` for `n` inside the window.
    pub fn get(&self, n: u64) -> Option<u32> {
        n.checked_sub(self.window_start)
            .and_then(|i| self.tau.get(i as usize).copied())
    }
}

pub fn sieve_tau(window_start: u64, window_len: u64) -> Result<TauTable> {
    sieve_tau_with_budget(window_start, window_len, DEFAULT_SIEVE_BUDGET_BYTES)
}

pub fn sieve_tau_with_budget(
    window_start: u64,
    window_len: u64,
    budget_bytes: u64,
) -> Result<TauTable> {
    if window_start == 0 || window_len == 0 {
        return Err(Error::InvalidRange(format!(
            "sieve window must start at >= 1 and be nonempty (start {window_start}, len {window_len})"
        )));
    }
    if window_start
        .checked_add(window_len)
        .is_none_or(|end| end > SIEVE_CEILING)
    {
        return Err(Error::InvalidRange(format!(
            "sieve window end exceeds 2^40 (start {window_start}, len {window_len})"
        )));
    }
    if window_len.saturating_mul(4) > budget_bytes {
        return Err(Error::WindowTooLarge {
            len: window_len,
            budget_bytes,
        });
    }
    let mut tau = vec![0u32; window_len as usize];
    par::for_each_chunk_mut(&mut tau, SEGMENT_LEN, |idx, seg| {
        let lo = window_start + (idx * SEGMENT_LEN) as u64;
        sieve_segment(lo, seg);
    });
    Ok(TauTable { window_start, tau })
}

/// Fills `seg[i] = tau(lo + i)` by counting divisor pairs `d <= k`, `dk = n`.
fn sieve_segment(lo: u64, seg: &mut [u32]) {
    let hi = lo + seg.len() as u64;
    for d in 1..=isqrt(hi - 1) {
        let k = lo.div_ceil(d).max(d);
        let mut n = k * d;
        if n >= hi {
            continue;
        }
        if k == d {
            seg[(n - lo) as usize] += 1;
            n += d;
        }
        while n < hi {
            seg[(n - lo) as usize] += 2;
            n += d;
        }
    }
}

/// `S(X; a, q)` for every residue `a` in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressionSumVector {
    x: u64,
    q: u64,
    sums: Vec<u64>,
}

impl ProgressionSumVector {
    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    /// `S(X; a, q)` for any integer `a` (reduced modulo `q`).
    pub fn get(&self, a: i64) -> u64 {
        self.sums[crate::arith::reduce(a, self.q) as usize]
    }

    pub fn total(&self) -> u64 {
        self.sums.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProgressionMethod {
    Naive,
    Hyperbola,
    #[default]
    Auto,
    AutoWithCutover(u64),
}

pub fn divisor_sum_progressions(x: u64, q: u64) -> Result<ProgressionSumVector> {
    divisor_sum_progressions_with(x, q, ProgressionMethod::Auto)
}

pub fn divisor_sum_progressions_with(
    x: u64,
    q: u64,
    method: ProgressionMethod,
) -> Result<ProgressionSumVector> {
    if q < 2 || q > x {
        return Err(Error::InvalidRange(format!(
            "need 2 <= q <= X, got q = {q}, X = {x}"
        )));
    }
    if x >= SIEVE_CEILING {
        return Err(Error::InvalidRange(format!("X = {x} exceeds 2^40")));
    }
    let sums = match method {
        ProgressionMethod::Naive => progressions_naive(x, q)?,
        ProgressionMethod::Hyperbola => progressions_hyperbola(x, q),
        ProgressionMethod::Auto => choose(x, q, DEFAULT_CUTOVER)?,
        ProgressionMethod::AutoWithCutover(c) => choose(x, q, c)?,
    };
    Ok(ProgressionSumVector { x, q, sums })
}

fn choose(x: u64, q: u64, cutover: u64) -> Result<Vec<u64>> {
    if x <= cutover {
        progressions_naive(x, q)
    } else {
        Ok(progressions_hyperbola(x, q))
    }
}

fn progressions_naive(x: u64, q: u64) -> Result<Vec<u64>> {
    let table = sieve_tau(1, x)?;
    let chunk = SEGMENT_LEN as u64;
    let n_chunks = x.div_ceil(chunk);
    let sums = par::fold_range(
        0..n_chunks,
        || vec![0u64; q as usize],
        |mut acc, c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(x);
            let mut r = (lo + 1) % q;
            for &t in &table.values()[lo as usize..hi as usize] {
                acc[r as usize] += t as u64;
                r += 1;
                if r == q {
                    r = 0;
                }
            }
            acc
        },
        merge_buckets,
    );
    Ok(sums)
}

fn merge_buckets(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

struct HyperbolaAcc {
    buckets: Vec<u64>,
    // full_cycles[g] accumulates weight added uniformly to residues divisible by g.
    full_cycles: Vec<u64>,
}

fn progressions_hyperbola(x: u64, q: u64) -> Vec<u64> {
    let root = isqrt(x);
    let qs = q as usize;
    let acc = par::fold_range(
        1..root + 1,
        || HyperbolaAcc {
            buckets: vec![0; qs],
            full_cycles: vec![0; qs + 1],
        },
        |mut acc, d| {
            let dq = d % q;
            acc.buckets[mul_mod(dq, dq, q) as usize] += 1;
            let lo = d + 1;
            let hi = x / d;
            if hi < lo {
                return acc;
            }
            let len = hi - lo + 1;
            let full = len / q;
            if full > 0 {
                acc.full_cycles[gcd(d, q) as usize] += 2 * full;
            }
            let start = lo + full * q;
            let mut r = (dq as u128 * (start % q) as u128 % q as u128) as u64;
            for _ in 0..len % q {
                acc.buckets[r as usize] += 2;
                r += dq;
                if r >= q {
                    r -= q;
                }
            }
            acc
        },
        |mut a, b| {
            a.buckets = merge_buckets(a.buckets, b.buckets);
            a.full_cycles = merge_buckets(a.full_cycles, b.full_cycles);
            a
        },
    );
    let mut sums = acc.buckets;
    for (g, &c) in acc.full_cycles.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let weight = c * g as u64;
        for b in (0..qs).step_by(g) {
            sums[b] += weight;
        }
    }
    sums
}

/// `S(X; a, q)` for a single residue, in `O(sqrt(X) log q)`.
///
/// For each `d <= sqrt(X)` the congruence `d m = a (mod q)` is solved for
/// `m` and the solutions in `(d, X/d]` are counted arithmetically.
pub fn divisor_sum_residue(x: u64, q: u64, a: i64) -> Result<u64> {
    if q < 2 || q > x {
        return Err(Error::InvalidRange(format!(
            "need 2 <= q <= X, got q = {q}, X = {x}"
        )));
    }
    let a = crate::arith::reduce(a, q);
    let root = isqrt(x);
    let counts = par::fold_range(
        1..root + 1,
        || 0u64,
        |acc, d| {
            let dq = d % q;
            let mut total = acc + (mul_mod(dq, dq, q) == a) as u64;
            let g = gcd(dq, q);
            if a % g != 0 {
                return total;
            }
            let step = q / g;
            let m0 = if step == 1 {
                0
            } else {
                let inv = mod_inverse((dq / g) as i64, step).expect("coprime by construction");
                (a / g) as u128 * inv as u128 % step as u128
            } as u64;
            let hi = x / d;
            if hi > d {
                total += 2 * (count_congruent(hi, m0, step) - count_congruent(d, m0, step));
            }
            total
        },
        |a, b| a + b,
    );
    Ok(counts)
}

/// `#{1 <= m <= n : m = r (mod step)}` for `0 <= r < step`.
fn count_congruent(n: u64, r: u64, step: u64) -> u64 {
    let first = if r == 0 { step } else { r };
    if n < first {
        0
    } else {
        (n - first) / step + 1
    }
}

/// `sum_{n <= X} tau(n) = 2 sum_{d <= sqrt X} floor(X/d) - floor(sqrt X)^2`.
pub fn total_divisor_sum(x: u64) -> u64 {
    let r = isqrt(x);
    2 * (1..=r).map(|d| x / d).sum::<u64>() - r * r
}
