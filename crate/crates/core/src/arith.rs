//! Integer and modular arithmetic primitives.
//!
//! Everything here is exact: Kronecker symbols, deterministic Miller-Rabin
//! for the full `u64` range, a segmented sieve, the integer Hasse-window
//! predicate and the closed form for complete quadratic character sums.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sieve segment length in flags.
const SEGMENT_LEN: u64 = 1 << 18;

/// Ranges shorter than this are sieved on the calling thread.
const PARALLEL_THRESHOLD: u64 = 1 << 22;

/// Kronecker symbol `(d / n)` for any integer `d` and `n >= 0`.
pub fn kronecker(d: i64, n: u64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut result: i8 = 1;
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        // (d/2) = 1 for d = ±1 mod 8, -1 for d = ±3 mod 8
        let r = d.rem_euclid(8);
        if (r == 3 || r == 5) && tz % 2 == 1 {
            result = -1;
        }
    }
    if odd == 1 {
        return result;
    }
    let a = (d as i128).rem_euclid(odd as i128) as u64;
    result * jacobi(a, odd)
}

/// Jacobi symbol `(a / n)` for odd `n`.
pub fn jacobi(a: u64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a % n;
    let mut n = n;
    let mut result: i8 = 1;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
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

/// Deterministic primality test valid for every `u64`.
///
/// The first twelve primes as Miller-Rabin bases are a proven witness set
/// below 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
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

/// Floor of the square root.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Primes of a closed interval, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeList {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

impl PrimeList {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u64> {
        self.primes.iter()
    }
}

impl IntoIterator for PrimeList {
    type Item = u64;
    type IntoIter = std::vec::IntoIter<u64>;

    fn into_iter(self) -> Self::IntoIter {
        self.primes.into_iter()
    }
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let len = (hi - lo + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        if p.saturating_mul(p) > hi {
            break;
        }
        let mut start = lo.div_ceil(p) * p;
        if start < p * p {
            start = p * p;
        }
        let mut j = start;
        while j <= hi {
            composite[(j - lo) as usize] = true;
            j = match j.checked_add(p) {
                Some(v) => v,
                None => break,
            };
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|&(i, &c)| !c && lo + i as u64 >= 2)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

/// All primes in `[lo, hi]` by a segmented sieve of Eratosthenes.
pub fn primes_in(lo: u64, hi: u64) -> Result<PrimeList> {
    if lo < 2 || hi < lo {
        return Err(Error::InvalidInput(format!(
            "prime range requires 2 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let base = small_primes(isqrt(hi));
    let segments: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut start = lo;
        loop {
            let end = start.saturating_add(SEGMENT_LEN - 1).min(hi);
            v.push((start, end));
            if end == hi {
                break;
            }
            start = end + 1;
        }
        v
    };
    let primes: Vec<u64> = if hi - lo >= PARALLEL_THRESHOLD {
        segments
            .par_iter()
            .map(|&(a, b)| sieve_segment(a, b, &base))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        segments
            .iter()
            .flat_map(|&(a, b)| sieve_segment(a, b, &base))
            .collect()
    };
    Ok(PrimeList { lo, hi, primes })
}

/// The open interval `(p + 1 - 2 sqrt p, p + 1 + 2 sqrt p)` of admissible
/// group orders at `p`, decided in exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HasseWindow {
    p: u64,
}

impl HasseWindow {
    pub fn new(p: u64) -> Self {
        HasseWindow { p }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn contains(&self, q: u64) -> bool {
        let diff = q as i128 - self.p as i128 - 1;
        diff * diff < 4 * self.p as i128
    }

    /// Smallest and largest integers inside the window.
    pub fn bounds(&self) -> (u64, u64) {
        let r = isqrt(4 * self.p);
        // r^2 <= 4p, with equality only when 4p is a square (never for prime p)
        let half = if r * r == 4 * self.p { r - 1 } else { r };
        let lo = (self.p + 1).saturating_sub(half);
        let hi = self.p + 1 + half;
        debug_assert!(self.contains(lo) && self.contains(hi));
        (lo, hi)
    }

    pub fn integers(&self) -> std::ops::RangeInclusive<u64> {
        let (lo, hi) = self.bounds();
        lo..=hi
    }
}

/// Primes `q` with `(q - p - 1)^2 < 4p`.
pub fn hasse_primes(p: u64) -> Result<PrimeList> {
    if p <= 3 {
        return Err(Error::InvalidInput(format!("hasse_primes needs p > 3, got {p}")));
    }
    let window = HasseWindow::new(p);
    let (lo, hi) = window.bounds();
    let mut list = primes_in(lo.max(2), hi)?;
    list.primes.retain(|&q| window.contains(q));
    Ok(list)
}

/// `sum_{t mod l} ((a t^2 + b t + c) / l)` for an odd prime `l`.
///
/// Equals `(a/l)(l - 1)` when `l` divides the discriminant and `-(a/l)`
/// otherwise.
pub fn quadratic_char_sum(a: i64, b: i64, c: i64, ell: u64) -> Result<i64> {
    if ell < 3 || !is_prime(ell) {
        return Err(Error::InvalidInput(format!("{ell} is not an odd prime")));
    }
    let m = ell as i128;
    if (a as i128).rem_euclid(m) == 0 {
        return Err(Error::InvalidInput(format!("leading coefficient {a} vanishes mod {ell}")));
    }
    let chi_a = kronecker(a, ell) as i64;
    let disc = (b as i128 * b as i128 - 4 * a as i128 * c as i128).rem_euclid(m);
    Ok(if disc == 0 { chi_a * (ell as i64 - 1) } else { -chi_a })
}
