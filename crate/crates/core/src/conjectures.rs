//! Reference densities for cycle counts: `sqrt X / (log X)^L`, the integral
//! `int_2^X dt / (2 sqrt t (log t)^L)`, and the Euler product for the
//! amicable-pair constant
//!
//! ```text
//! C_2 = 8 / (3 pi^2) * prod_l l^2 (l^4 - 2l^3 - 2l^2 + 3l + 3) / ((l^2 - 1)(l - 1))^2
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arith::{primes_in, gcd};
use crate::classnum::Neumaier;
use crate::error::{Error, Result};

pub fn ss_density(x: f64, length: u32) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::InvalidInput(format!("density needs X >= 2, got {x}")));
    }
    Ok(x.sqrt() / x.ln().powi(length as i32))
}

const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 60;

fn jones_integrand(u: f64, length: u32) -> f64 {
    // t = e^u: dt / (2 sqrt t (log t)^L) = e^(u/2) / (2 u^L) du
    (0.5 * u).exp() / (2.0 * u.powi(length as i32))
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `int_2^X dt / (2 sqrt t (log t)^L)` by adaptive Simpson in `u = log t`,
/// absolute tolerance `1e-10`.
pub fn jones_integral(x: f64, length: u32) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::InvalidInput(format!("integral needs X >= 2, got {x}")));
    }
    let (a, b) = (2f64.ln(), x.ln());
    if b <= a {
        return Ok(0.0);
    }
    let f = |u: f64| jones_integrand(u, length);
    // split into unit pieces so the tolerance is met on long ranges
    let pieces = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / pieces as f64;
    let tol = QUAD_TOL / pieces as f64;
    let mut total = Neumaier::default();
    for i in 0..pieces {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
        total.add(adaptive(&f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), tol, QUAD_MAX_DEPTH));
    }
    Ok(total.sum())
}

/// The Euler factor at `l` as a reduced fraction.
pub fn c2_factor(l: u64) -> (u128, u128) {
    let l = l as u128;
    let num = l * l * (l.pow(4) + 3 * l + 3 - 2 * l.pow(3) - 2 * l * l);
    let base = (l * l - 1) * (l - 1);
    let den = base * base;
    let g = gcd_u128(num, den);
    (num / g, den / g)
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd(a as u64, b as u64) as u128;
    }
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `factor - 1` in floating point without cancellation.
fn c2_factor_minus_one(l: u64) -> f64 {
    // numerator minus denominator is -l^4 - l^3 + 4l^2 + 2l - 1
    let lf = l as i128;
    let diff = -lf.pow(4) - lf.pow(3) + 4 * lf * lf + 2 * lf - 1;
    let base = (lf * lf - 1) * (lf - 1);
    diff as f64 / (base * base) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerProductState {
    pub cutoff: u64,
    /// Largest prime included.
    pub last_prime: u64,
    /// `8 / (3 pi^2)` times the product over primes up to the cutoff.
    pub partial_product: f64,
    pub last_factor: f64,
    /// Whether `|factor - 1|` decreased at every prime after 3.
    pub factors_settling: bool,
}

/// Partial product of `C_2` over primes `l <= cutoff`.
///
/// Factors are accumulated as a compensated sum of `log(1 + (factor - 1))`
/// with `factor - 1` formed exactly, in ascending prime order.
pub fn jones_c2(cutoff: u64) -> Result<EulerProductState> {
    if cutoff < 2 {
        return Err(Error::InvalidInput(format!("cutoff must be at least 2, got {cutoff}")));
    }
    let mut log = Neumaier::default();
    log.add((8.0 / (3.0 * PI * PI)).ln());
    let mut last_prime = 2;
    let mut last_factor = 1.0;
    let mut prev_dev = f64::INFINITY;
    let mut settling = true;
    for l in primes_in(2, cutoff)?.primes {
        let dev = c2_factor_minus_one(l);
        log.add(dev.ln_1p());
        if l > 3 {
            settling &= dev.abs() < prev_dev;
            prev_dev = dev.abs();
        }
        last_prime = l;
        last_factor = 1.0 + dev;
    }
    Ok(EulerProductState {
        cutoff,
        last_prime,
        partial_product: log.sum().exp(),
        last_factor,
        factors_settling: settling,
    })
}

/// `|P(hi) - P(lo)| / P(hi)` for partial products at two cutoffs.
pub fn c2_relative_change(lo: u64, hi: u64) -> Result<f64> {
    let a = jones_c2(lo)?.partial_product;
    let b = jones_c2(hi)?.partial_product;
    Ok((b - a).abs() / b)
}
