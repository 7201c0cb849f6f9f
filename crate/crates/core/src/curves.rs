//! Short Weierstrass curves over prime fields and over the integers.
//!
//! Point counting is the naive character sum `a_p = -sum_x ((x^3+sx+t)/p)`
//! against a precomputed table of quadratic residues. That is the fastest
//! option for the `p <= 10^4` workloads this crate runs; a baby-step
//! giant-step counter would slot in behind [`trace_with_table`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, mul_mod};
use crate::error::{Error, Result};

/// Family coefficients are limited to `|a|, |b| <= 2^31`.
pub const COEFF_BOUND: i64 = 1 << 31;

/// `y^2 = x^3 + s x + t` over `F_p`, `p > 3`, nonsingular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CurveModP {
    p: u64,
    s: u64,
    t: u64,
}

fn check_field_prime(p: u64) -> Result<()> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("field characteristic must be a prime > 3, got {p}")));
    }
    Ok(())
}

fn is_singular_mod(p: u64, s: u64, t: u64) -> bool {
    let s3 = mul_mod(mul_mod(s, s, p), s, p);
    let t2 = mul_mod(t, t, p);
    (mul_mod(4, s3, p) + mul_mod(27, t2, p)) % p == 0
}

impl CurveModP {
    pub fn new(p: u64, s: u64, t: u64) -> Result<Self> {
        check_field_prime(p)?;
        let (s, t) = (s % p, t % p);
        if is_singular_mod(p, s, t) {
            return Err(Error::InvalidInput(format!(
                "singular curve mod {p}: (s, t) = ({s}, {t})"
            )));
        }
        Ok(CurveModP { p, s, t })
    }

    /// Skips the primality check; `p` must already be a prime > 3.
    pub(crate) fn new_unchecked(p: u64, s: u64, t: u64) -> Option<Self> {
        let (s, t) = (s % p, t % p);
        (!is_singular_mod(p, s, t)).then_some(CurveModP { p, s, t })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn t(&self) -> u64 {
        self.t
    }
}

/// `y^2 = x^3 + a x + b` over the integers with `4a^3 + 27b^2 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CurveZ {
    a: i64,
    b: i64,
}

impl CurveZ {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a.abs() > COEFF_BOUND || b.abs() > COEFF_BOUND {
            return Err(Error::InvalidInput(format!(
                "coefficients must satisfy |a|, |b| <= 2^31, got ({a}, {b})"
            )));
        }
        if discriminant_term(a, b) == 0 {
            return Err(Error::SingularCurve { a, b });
        }
        Ok(CurveZ { a, b })
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    /// `4a^3 + 27b^2`; the discriminant is `-16` times this.
    pub fn discriminant_term(&self) -> i128 {
        discriminant_term(self.a, self.b)
    }
}

pub(crate) fn discriminant_term(a: i64, b: i64) -> i128 {
    let (a, b) = (a as i128, b as i128);
    4 * a * a * a + 27 * b * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Good(CurveModP),
    Bad,
}

impl Reduction {
    pub fn good(self) -> Option<CurveModP> {
        match self {
            Reduction::Good(c) => Some(c),
            Reduction::Bad => None,
        }
    }
}

/// Reduces an integral curve modulo a prime `p > 3`.
pub fn reduce(curve: &CurveZ, p: u64) -> Result<Reduction> {
    check_field_prime(p)?;
    Ok(reduce_unchecked(curve, p))
}

pub(crate) fn reduce_unchecked(curve: &CurveZ, p: u64) -> Reduction {
    let s = curve.a.rem_euclid(p as i64) as u64;
    let t = curve.b.rem_euclid(p as i64) as u64;
    match CurveModP::new_unchecked(p, s, t) {
        Some(c) => Reduction::Good(c),
        None => Reduction::Bad,
    }
}

/// Quadratic character of `F_p` as a lookup table.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    p: u64,
    chi: Vec<i8>,
}

impl LegendreTable {
    pub fn new(p: u64) -> Self {
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        let mut sq = 0u64;
        // (x+1)^2 = x^2 + 2x + 1
        for x in 0..p / 2 + 1 {
            chi[sq as usize] = if sq == 0 { 0 } else { 1 };
            sq = (sq + 2 * x + 1) % p;
        }
        LegendreTable { p, chi }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn chi(&self, v: u64) -> i8 {
        self.chi[(v % self.p) as usize]
    }

    pub(crate) fn as_slice(&self) -> &[i8] {
        &self.chi
    }
}

/// Trace of Frobenius and group order of a curve over `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub curve: CurveModP,
    pub a_p: i64,
    pub group_order: u64,
}

pub fn trace_of_frobenius(curve: &CurveModP) -> TraceRecord {
    trace_with_table(curve, &LegendreTable::new(curve.p))
}

pub fn trace_with_table(curve: &CurveModP, table: &LegendreTable) -> TraceRecord {
    debug_assert_eq!(table.p(), curve.p);
    let p = curve.p;
    let chi = table.as_slice();
    // f(x) = x^3 + s x + t stepped by finite differences:
    // f(x+1) - f(x) = 3x^2 + 3x + 1 + s, and that difference grows by 6x + 6.
    let mut f = curve.t;
    let mut delta = (1 + curve.s) % p;
    let six = 6 % p;
    let mut step = six;
    let mut sum: i64 = 0;
    for _ in 0..p {
        sum += chi[f as usize] as i64;
        f += delta;
        if f >= p {
            f -= p;
        }
        delta += step;
        if delta >= p {
            delta -= p;
        }
        step += six;
        if step >= p {
            step -= p;
        }
    }
    let a_p = -sum;
    TraceRecord {
        curve: *curve,
        a_p,
        group_order: (p as i64 + 1 - a_p) as u64,
    }
}

/// Order of the automorphism group over `F_p`: 6, 4 or 2.
pub fn aut_order(curve: &CurveModP) -> u8 {
    if curve.s == 0 && curve.p % 3 == 1 {
        6
    } else if curve.t == 0 && curve.p % 4 == 1 {
        4
    } else {
        2
    }
}

/// All curves `(s u^4, t u^6)` for `u` in `F_p^*`.
pub fn twist_orbit(curve: &CurveModP) -> BTreeSet<CurveModP> {
    let p = curve.p;
    (1..p)
        .map(|u| {
            let u2 = mul_mod(u, u, p);
            let u4 = mul_mod(u2, u2, p);
            let u6 = mul_mod(u4, u2, p);
            CurveModP {
                p,
                s: mul_mod(curve.s, u4, p),
                t: mul_mod(curve.t, u6, p),
            }
        })
        .collect()
}

/// Number of `(s, t)` in `[0, p)^2` with `4s^3 + 27t^2 != 0 mod p`.
pub fn nonsingular_pair_count(p: u64) -> Result<u64> {
    check_field_prime(p)?;
    let mut singular = 0;
    for s in 0..p {
        for t in 0..p {
            if is_singular_mod(p, s, t) {
                singular += 1;
            }
        }
    }
    Ok(p * p - singular)
}

/// One representative per `F_p`-isomorphism class, paired with the size of
/// its twist orbit `(p - 1) / #Aut`. Representatives are the lexicographically
/// smallest `(s, t)` of their class.
pub fn isomorphism_class_reps(p: u64) -> Result<Vec<(CurveModP, u64)>> {
    check_field_prime(p)?;
    let n = p as usize;
    let mut seen = vec![false; n * n];
    let mut reps = Vec::new();
    for s in 0..p {
        for t in 0..p {
            if seen[s as usize * n + t as usize] {
                continue;
            }
            let Some(curve) = CurveModP::new_unchecked(p, s, t) else {
                continue;
            };
            let orbit = twist_orbit(&curve);
            for member in &orbit {
                seen[member.s as usize * n + member.t as usize] = true;
            }
            let size = orbit.len() as u64;
            debug_assert_eq!(size, (p - 1) / aut_order(&curve) as u64);
            reps.push((curve, size));
        }
    }
    Ok(reps)
}
