//! Imaginary quadratic class numbers.
//!
//! `h(D)` is the number of reduced primitive binary quadratic forms of
//! discriminant `D`, i.e. the class number of the order of discriminant
//! `D`. The Hurwitz-Kronecker class number sums `h/w` over the orders
//! containing it:
//!
//! ```text
//! H(D) = sum_{f^2 | D, D/f^2 = 0,1 mod 4} h(D/f^2) / w(D/f^2)
//! ```
//!
//! with `w = 6, 4, 2` for `-3`, `-4` and everything else. `12 H(D)` is an
//! integer, which is how values travel through the cache.

mod cache;
mod lseries;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, isqrt};
use crate::error::{Error, Result};

pub use cache::HurwitzCache;
pub(crate) use lseries::Neumaier;
pub use lseries::{
    dirichlet_l1, dirichlet_l1_series, fundamental_discriminants, gs_truncation_report,
    truncated_l1, truncated_l1_with_primes, GsReport, GsRow, LMethod, LValue,
};

/// A negative integer congruent to 0 or 1 mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Discriminant(i64);

impl Discriminant {
    pub fn new(value: i64) -> Result<Self> {
        if value >= 0 {
            return Err(Error::InvalidInput(format!("discriminant must be negative, got {value}")));
        }
        if !matches!(value.rem_euclid(4), 0 | 1) {
            return Err(Error::InvalidInput(format!("{value} is not 0 or 1 mod 4")));
        }
        Ok(Discriminant(value))
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> u64 {
        self.0.unsigned_abs()
    }

    pub fn is_fundamental(self) -> bool {
        fundamental_decomposition(self.0).is_ok_and(|(_, f)| f == 1)
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of reduced primitive forms `(a, b, c)` with `b^2 - 4ac = d`.
///
/// Reduced means `|b| <= a <= c` and `b >= 0` whenever `|b| = a` or `a = c`.
pub fn class_number_h(d: Discriminant) -> u64 {
    let n = d.abs();
    let a_max = isqrt(n / 3);
    let parity = n % 2;
    let mut count = 0;
    for a in 1..=a_max {
        // b runs over (-a, a] with b = d mod 2
        let mut b = -(a as i64) + 1;
        if (b.unsigned_abs() % 2) != parity {
            b += 1;
        }
        while b <= a as i64 {
            let num = (b * b) as u64 + n;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                let ok = c >= a
                    && !(b < 0 && c == a)
                    && gcd(gcd(a, b.unsigned_abs()), c) == 1;
                if ok {
                    count += 1;
                }
            }
            b += 2;
        }
    }
    count
}

/// Units in the order of discriminant `d`.
pub fn roots_of_unity_w(d: Discriminant) -> u8 {
    match d.value() {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

/// An exact value of `H(D)`; the denominator divides 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HurwitzValue {
    numerator: u64,
    denominator: u64,
}

impl HurwitzValue {
    pub fn from_twelfths(twelve_h: u64) -> Self {
        let g = gcd(twelve_h, 12);
        HurwitzValue {
            numerator: twelve_h / g,
            denominator: 12 / g,
        }
    }

    pub fn zero() -> Self {
        HurwitzValue { numerator: 0, denominator: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn twelve_h(&self) -> u64 {
        self.numerator * (12 / self.denominator)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for HurwitzValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 1 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator)
        }
    }
}

/// `12 H(D)` computed from form counts. Zero when `D = 2, 3 mod 4`.
pub fn hurwitz_twelve_h(big_d: i64) -> Result<u64> {
    if big_d >= 0 {
        return Err(Error::InvalidInput(format!("H(D) needs D < 0, got {big_d}")));
    }
    let n = big_d.unsigned_abs();
    let mut total = 0;
    let mut f = 1u64;
    while f * f <= n {
        if n % (f * f) == 0 {
            let sub = big_d / (f * f) as i64;
            if let Ok(disc) = Discriminant::new(sub) {
                total += class_number_h(disc) * (12 / roots_of_unity_w(disc) as u64);
            }
        }
        f += 1;
    }
    Ok(total)
}

/// The Hurwitz-Kronecker class number `H(D)` for `D < 0`.
pub fn hurwitz_class_number(big_d: i64) -> Result<HurwitzValue> {
    hurwitz_twelve_h(big_d).map(HurwitzValue::from_twelfths)
}

/// Splits `D = d f^2` with `d` a fundamental discriminant.
pub fn fundamental_decomposition(big_d: i64) -> Result<(Discriminant, u64)> {
    let disc = Discriminant::new(big_d)?;
    // |D| = m g^2 with m squarefree
    let mut rest = disc.abs();
    let mut m = 1u64;
    let mut g = 1u64;
    let mut q = 2u64;
    while q * q <= rest {
        let mut e = 0;
        while rest % q == 0 {
            rest /= q;
            e += 1;
        }
        g *= q.pow(e / 2);
        if e % 2 == 1 {
            m *= q;
        }
        q += if q == 2 { 1 } else { 2 };
    }
    m *= rest;
    let core = -(m as i64);
    let (d, f) = if core.rem_euclid(4) == 1 {
        (core, g)
    } else {
        debug_assert!(g % 2 == 0);
        (4 * core, g / 2)
    };
    Ok((Discriminant(d), f))
}

/// `D(m, n) = (m + 1 - n)^2 - 4m`, symmetric in `m` and `n`.
pub fn chain_discriminant(m: u64, n: u64) -> i64 {
    let diff = m as i128 + 1 - n as i128;
    (diff * diff - 4 * m as i128) as i64
}
