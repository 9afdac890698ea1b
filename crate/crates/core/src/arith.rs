//! Elementary arithmetic: gcd, modular inverses, factorization, sieved
//! multiplicative functions, Ramanujan sums and primitive roots.
//!
//! All modular arithmetic is done on `u64` residues with `u128`
//! intermediates. Moduli are capped at [`MAX_MODULUS`].

use crate::error::{Error, Result};

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = 1 << 62;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `gcd(|a|, d)` with `gcd(0, d) = d`.
pub fn gcd_signed(a: i64, d: u64) -> u64 {
    gcd(a.unsigned_abs(), d)
}

/// Reduces a signed integer into `[0, d)`.
#[inline]
pub fn reduce(a: i64, d: u64) -> u64 {
    (a as i128).rem_euclid(d as i128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Integer square root, `floor(sqrt(n))`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

/// Inverse of `x` modulo `d`, in `[1, d-1]`.
pub fn mod_inverse(x: i64, d: u64) -> Result<u64> {
    if !(2..=MAX_MODULUS).contains(&d) {
        return Err(Error::InvalidModulus(d));
    }
    let x_red = reduce(x, d);
    let (mut old_r, mut r) = (x_red as i128, d as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { x, modulus: d });
    }
    Ok(old_s.rem_euclid(d as i128) as u64)
}

/// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Largest prime `<= n`, if any.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&c| is_prime(c))
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        // Brent's cycle detection with batched gcds.
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(128.min(r - k)) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let f = pollard_rho(n);
    factor_into(f, out);
    factor_into(n / f, out);
}

/// A modulus together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredModulus {
    d: u64,
    prime_powers: Vec<(u64, u32)>,
}

impl FactoredModulus {
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 || d > MAX_MODULUS {
            return Err(Error::InvalidModulus(d));
        }
        let mut primes = Vec::new();
        let mut n = d;
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
            while n % p == 0 {
                primes.push(p);
                n /= p;
            }
        }
        factor_into(n, &mut primes);
        primes.sort_unstable();
        let mut prime_powers: Vec<(u64, u32)> = Vec::new();
        for p in primes {
            match prime_powers.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => prime_powers.push((p, 1)),
            }
        }
        Ok(Self { d, prime_powers })
    }

    pub fn value(&self) -> u64 {
        self.d
    }

    pub fn prime_powers(&self) -> &[(u64, u32)] {
        &self.prime_powers
    }

    pub fn is_squarefree(&self) -> bool {
        self.prime_powers.iter().all(|&(_, e)| e == 1)
    }

    pub fn phi(&self) -> u64 {
        self.prime_powers
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    pub fn mobius(&self) -> i64 {
        if self.is_squarefree() {
            if self.prime_powers.len() % 2 == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }

    pub fn num_divisors(&self) -> u64 {
        self.prime_powers.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    /// Divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.prime_powers {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    /// Divisors paired with their Möbius value, ascending.
    pub fn divisors_with_mobius(&self) -> Vec<(u64, i64)> {
        self.divisors()
            .into_iter()
            .map(|e| (e, self.mobius_of_divisor(e)))
            .collect()
    }

    /// Factorizations of every divisor, in ascending order of the divisor.
    pub fn divisor_factorizations(&self) -> Vec<FactoredModulus> {
        let mut out = vec![FactoredModulus {
            d: 1,
            prime_powers: Vec::new(),
        }];
        for &(p, e) in &self.prime_powers {
            let len = out.len();
            for k in 1..=e {
                for i in 0..len {
                    let mut pp = out[i].prime_powers.clone();
                    pp.push((p, k));
                    out.push(FactoredModulus {
                        d: out[i].d * p.pow(k),
                        prime_powers: pp,
                    });
                }
            }
        }
        out.sort_unstable_by_key(|f| f.d);
        out
    }

    /// `mu(e)` for a divisor `e` of this modulus.
    fn mobius_of_divisor(&self, mut e: u64) -> i64 {
        let mut sign = 1;
        for &(p, _) in &self.prime_powers {
            if e % p == 0 {
                e /= p;
                if e % p == 0 {
                    return 0;
                }
                sign = -sign;
            }
        }
        sign
    }
}

pub fn divisors(d: u64) -> Vec<u64> {
    FactoredModulus::new(d)
        .map(|f| f.divisors())
        .unwrap_or_default()
}

pub fn euler_phi(n: u64) -> u64 {
    FactoredModulus::new(n).map(|f| f.phi()).unwrap_or(0)
}

pub fn mobius(n: u64) -> i64 {
    FactoredModulus::new(n).map(|f| f.mobius()).unwrap_or(0)
}

/// `r_d(a) = sum_{e | gcd(a, d)} e * mu(d / e)`, integer exact.
pub fn ramanujan_sum(d: u64, a: i64) -> i64 {
    let fm = FactoredModulus::new(d).expect("modulus must be positive");
    ramanujan_sum_factored(&fm, a)
}

pub fn ramanujan_sum_factored(d: &FactoredModulus, a: i64) -> i64 {
    let g = gcd_signed(a, d.value());
    let g_fact = d
        .prime_powers()
        .iter()
        .filter_map(|&(p, _)| {
            let mut e = 0;
            let mut t = g;
            while t % p == 0 {
                t /= p;
                e += 1;
            }
            (e > 0).then_some((p, e))
        })
        .collect::<Vec<_>>();
    let divs_of_g = FactoredModulus {
        d: g,
        prime_powers: g_fact,
    }
    .divisors();
    divs_of_g
        .into_iter()
        .map(|e| e as i64 * d.mobius_of_divisor(d.value() / e))
        .sum()
}

/// Smallest primitive root of the odd prime `p`.
pub fn primitive_root(p: u64) -> Result<u64> {
    if p < 3 || !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let ells: Vec<u64> = FactoredModulus::new(p - 1)?
        .prime_powers()
        .iter()
        .map(|&(l, _)| l)
        .collect();
    (2..p)
        .find(|&g| ells.iter().all(|&l| pow_mod(g, (p - 1) / l, p) != 1))
        .ok_or(Error::NotPrime(p))
}

/// Linear-sieve tables of `mu`, `phi` and the smallest prime factor.
#[derive(Debug, Clone)]
pub struct MultiplicativeSieveTables {
    limit: usize,
    mobius: Vec<i8>,
    phi: Vec<u64>,
    smallest_prime_factor: Vec<u32>,
}

impl MultiplicativeSieveTables {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(1);
        let mut mobius = vec![0i8; limit + 1];
        let mut phi = vec![0u64; limit + 1];
        let mut spf = vec![0u32; limit + 1];
        let mut primes: Vec<usize> = Vec::new();
        mobius[1] = 1;
        phi[1] = 1;
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mobius[i] = -1;
                phi[i] = i as u64 - 1;
                primes.push(i);
            }
            for &p in &primes {
                let ip = i * p;
                if p > spf[i] as usize || ip > limit {
                    break;
                }
                spf[ip] = p as u32;
                if i % p == 0 {
                    mobius[ip] = 0;
                    phi[ip] = phi[i] * p as u64;
                } else {
                    mobius[ip] = -mobius[i];
                    phi[ip] = phi[i] * (p as u64 - 1);
                }
            }
        }
        Self {
            limit,
            mobius,
            phi,
            smallest_prime_factor: spf,
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn mobius(&self, n: usize) -> i8 {
        self.mobius[n]
    }

    pub fn phi(&self, n: usize) -> u64 {
        self.phi[n]
    }

    /// Smallest prime factor; 0 for `n = 1`.
    pub fn smallest_prime_factor(&self, n: usize) -> u32 {
        self.smallest_prime_factor[n]
    }
}

/// The integer interval `{offset + 1, ..., offset + len}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub offset: u64,
    pub len: u64,
}

impl Interval {
    pub fn new(offset: u64, len: u64) -> Self {
        Self { offset, len }
    }

    pub fn first(&self) -> u64 {
        self.offset + 1
    }

    pub fn last(&self) -> u64 {
        self.offset + self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.first()..=self.last()
    }

    /// Whether the interval lies inside `[1, max]`.
    pub fn within(&self, max: u64) -> bool {
        self.len >= 1 && self.last() <= max
    }
}
