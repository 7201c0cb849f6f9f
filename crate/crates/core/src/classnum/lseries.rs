//! `L(1, chi_D)` for negative discriminants by three routes: the class
//! number formula, the Dirichlet series, and a truncated Euler product.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{class_number_h, roots_of_unity_w, Discriminant};
use crate::arith::{kronecker, primes_in};
use crate::error::{Error, Result};

/// Full periods summed directly before the Euler-Maclaurin tail kicks in.
const SERIES_PERIODS: u64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LMethod {
    FormsFormula,
    Series,
    Truncated { y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LValue {
    pub d: Discriminant,
    pub method: LMethod,
    pub value: f64,
    /// A rigorous bound on the truncation error, when the method has one.
    pub error_bound: Option<f64>,
}

/// `L(1, chi_D) = 2 pi h(D) / (w(D) sqrt|D|)`, with `h` and `w` taken for the
/// order of discriminant `D`.
pub fn dirichlet_l1(big_d: i64) -> Result<LValue> {
    let d = Discriminant::new(big_d)?;
    let h = class_number_h(d) as f64;
    let w = roots_of_unity_w(d) as f64;
    let value = 2.0 * PI * h / (w * (d.abs() as f64).sqrt());
    assert!(value > 0.0);
    Ok(LValue {
        d,
        method: LMethod::FormsFormula,
        value,
        error_bound: None,
    })
}

/// `sum_n chi_D(n) / n`, summed over `SERIES_PERIODS` full periods of the
/// character with the remaining tail evaluated by Euler-Maclaurin.
///
/// Write `k = |D|` and `g(x) = sum_{r=1}^{k} chi(r) / (xk + r)`, so the tail
/// after `M` periods is `sum_{m >= M} g(m)`. Since the character sums to zero
/// over a period, `g` decays like `x^-2` and its integral is
/// `-(1/k) sum_r chi(r) log(1 + r/(Mk))`. Correction terms run through the
/// fifth derivative; the remainder is at most
/// `2 zeta(6) / (2 pi)^6 * 120 / M^6`.
pub fn dirichlet_l1_series(big_d: i64) -> Result<LValue> {
    let d = Discriminant::new(big_d)?;
    let k = d.abs();
    let chi: Vec<f64> = (0..k).map(|r| kronecker(big_d, r) as f64).collect();

    let m = SERIES_PERIODS;
    let mut head = Neumaier::default();
    for period in 0..m {
        let base = (period * k) as f64;
        for r in 1..=k {
            let c = chi[(r % k) as usize];
            if c != 0.0 {
                head.add(c / (base + r as f64));
            }
        }
    }

    let mk = (m * k) as f64;
    let kf = k as f64;
    let mut integral = Neumaier::default();
    // g^(j)(M) = (-1)^j j! k^j sum_r chi(r) / (Mk + r)^(j+1)
    let mut derivs = [Neumaier::default(), Neumaier::default(), Neumaier::default(), Neumaier::default(), Neumaier::default(), Neumaier::default()];
    for r in 1..k {
        let c = chi[r as usize];
        if c == 0.0 {
            continue;
        }
        integral.add(c * (r as f64 / mk).ln_1p());
        let inv = 1.0 / (mk + r as f64);
        let mut pow = inv;
        for slot in derivs.iter_mut() {
            slot.add(c * pow);
            pow *= inv;
        }
    }
    let deriv = |j: usize| -> f64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        sign * fact * kf.powi(j as i32) * derivs[j].sum()
    };
    let integral = -integral.sum() / kf;
    let tail = integral + deriv(0) / 2.0 - deriv(1) / 12.0 + deriv(3) / 720.0 - deriv(5) / 30240.0;

    let zeta6 = PI.powi(6) / 945.0;
    let bound = 2.0 * zeta6 / (2.0 * PI).powi(6) * 120.0 / (m as f64).powi(6);
    let value = head.sum() + tail;
    assert!(value > 0.0, "L(1, chi_{big_d}) must be positive");
    Ok(LValue {
        d,
        method: LMethod::Series,
        value,
        error_bound: Some(bound),
    })
}

/// `prod_{l <= y} (1 - chi_D(l)/l)^-1` over primes.
pub fn truncated_l1(big_d: i64, y: f64) -> Result<LValue> {
    let d = Discriminant::new(big_d)?;
    if !(y > 1.0) {
        return Err(Error::InvalidInput(format!("truncation point must exceed 1, got {y}")));
    }
    let primes = if y < 2.0 {
        Vec::new()
    } else {
        primes_in(2, y.floor() as u64)?.primes
    };
    Ok(LValue {
        d,
        method: LMethod::Truncated { y },
        value: truncated_l1_with_primes(big_d, &primes),
        error_bound: None,
    })
}

/// Euler product over a caller-supplied prime list.
pub fn truncated_l1_with_primes(big_d: i64, primes: &[u64]) -> f64 {
    let mut log = Neumaier::default();
    for &l in primes {
        let c = kronecker(big_d, l);
        if c != 0 {
            log.add(-(-(c as f64) / l as f64).ln_1p());
        }
    }
    log.sum().exp()
}

/// Fundamental discriminants `d` with `-bound <= d <= -3`, descending.
pub fn fundamental_discriminants(bound: u64) -> Vec<Discriminant> {
    (3..=bound)
        .filter_map(|n| Discriminant::new(-(n as i64)).ok())
        .filter(|d| d.is_fundamental())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsRow {
    pub d: i64,
    pub l_value: f64,
    pub truncated: f64,
    pub relative_error: f64,
}

/// Quality of the truncated Euler product at `y = (log Q)^(8 alpha^2)` over
/// all fundamental discriminants of absolute value at most `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsReport {
    pub q: u64,
    pub alpha: f64,
    /// The nominal truncation point.
    pub y: f64,
    /// The truncation point actually used, after the cap.
    pub y_used: f64,
    pub threshold: f64,
    pub exceptional_count: usize,
    pub exceptional_bound: f64,
    pub mean_relative_error: f64,
    pub rows: Vec<GsRow>,
}

/// Builds the truncation report. `y_cap` bounds the sieve; the nominal
/// truncation point grows like `(log Q)^(8 alpha^2)` and is out of reach
/// beyond `alpha = 1`.
pub fn gs_truncation_report(q: u64, alpha: f64, y_cap: f64) -> Result<GsReport> {
    if q < 3 {
        return Err(Error::InvalidInput(format!("Q must be at least 3, got {q}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be at least 1, got {alpha}")));
    }
    let y = (q as f64).ln().powf(8.0 * alpha * alpha);
    let y_used = y.min(y_cap).max(2.0);
    gs_report_at(q, alpha, y, y_used)
}

pub(crate) fn gs_report_at(q: u64, alpha: f64, y: f64, y_used: f64) -> Result<GsReport> {
    let primes = primes_in(2, y_used.floor() as u64)?.primes;
    let rows: Vec<GsRow> = fundamental_discriminants(q)
        .par_iter()
        .map(|d| {
            let l_value = dirichlet_l1(d.value()).expect("fundamental").value;
            let truncated = truncated_l1_with_primes(d.value(), &primes);
            GsRow {
                d: d.value(),
                l_value,
                truncated,
                relative_error: (l_value / truncated - 1.0).abs(),
            }
        })
        .collect();
    let threshold = (q as f64).ln().powf(-alpha);
    let exceptional_count = rows.iter().filter(|r| r.relative_error > threshold).count();
    let mean_relative_error = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.relative_error).sum::<f64>() / rows.len() as f64
    };
    Ok(GsReport {
        q,
        alpha,
        y,
        y_used,
        threshold,
        exceptional_count,
        exceptional_bound: (q as f64).powf(2.0 / alpha),
        mean_relative_error,
        rows,
    })
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms_formula_examples() {
        let l4 = dirichlet_l1(-4).unwrap().value;
        assert!((l4 - PI / 4.0).abs() < 1e-15);
        let l3 = dirichlet_l1(-3).unwrap().value;
        assert!((l3 - PI / (3.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!(dirichlet_l1(5).is_err());
        assert!(dirichlet_l1(-5).is_err());
    }

    #[test]
    fn leibniz_series_for_minus_four() {
        // 1 - 1/3 + 1/5 - ... averaged over two consecutive partial sums
        let n = 2_000_000u64;
        let mut s = 0.0;
        let mut prev = 0.0;
        for j in 0..n {
            prev = s;
            let term = 1.0 / (2 * j + 1) as f64;
            s += if j % 2 == 0 { term } else { -term };
        }
        let leibniz = (s + prev) / 2.0;
        assert!((leibniz - PI / 4.0).abs() < 1e-12);
        let series = dirichlet_l1_series(-4).unwrap();
        assert!((series.value - leibniz).abs() < 1e-11);
    }

    #[test]
    fn series_matches_forms_formula() {
        for d in fundamental_discriminants(800) {
            let forms = dirichlet_l1(d.value()).unwrap().value;
            let series = dirichlet_l1_series(d.value()).unwrap();
            let bound = series.error_bound.unwrap();
            assert!(bound < 1e-9);
            assert!((forms - series.value).abs() < 1e-9, "d = {d}: {forms} vs {}", series.value);
        }
    }

    #[test]
    fn series_handles_non_fundamental_discriminants() {
        // L(1, chi_D) = L(1, chi_d) prod_{l | f} (1 - chi_d(l)/l)
        for (big_d, d, ls) in [(-12i64, -3i64, vec![2u64]), (-63, -7, vec![3]), (-300, -3, vec![2, 5])] {
            let base = dirichlet_l1(d).unwrap().value;
            let expect = ls
                .iter()
                .fold(base, |acc, &l| acc * (1.0 - kronecker(d, l) as f64 / l as f64));
            assert!((dirichlet_l1_series(big_d).unwrap().value - expect).abs() < 1e-9);
            assert!((dirichlet_l1(big_d).unwrap().value - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_examples() {
        assert_eq!(truncated_l1(-4, 1.5).unwrap().value, 1.0);
        assert_eq!(truncated_l1(-4, 2.0).unwrap().value, 1.0);
        assert!(truncated_l1(-4, 1.0).is_err());
        let v = truncated_l1(-4, 1e6).unwrap().value;
        assert!((v - PI / 4.0).abs() < 1e-3, "{v}");
    }

    #[test]
    fn fundamental_list() {
        let small: Vec<i64> = fundamental_discriminants(24).iter().map(|d| d.value()).collect();
        assert_eq!(small, vec![-3, -4, -7, -8, -11, -15, -19, -20, -23, -24]);
    }

    #[test]
    fn gs_report_examples() {
        let r = gs_truncation_report(3, 1.0, 1e6).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].d, -3);
        let r = gs_truncation_report(1000, 1.0, 2e5).unwrap();
        assert!(r.exceptional_count as f64 <= r.exceptional_bound);
        assert_eq!(r.rows.len(), fundamental_discriminants(1000).len());
        assert!(r.y > r.y_used);
        assert!(gs_truncation_report(2, 1.0, 1e3).is_err());
        assert!(gs_truncation_report(10, 0.5, 1e3).is_err());
    }

    #[test]
    fn larger_truncation_point_lowers_mean_error() {
        let coarse = gs_report_at(500, 1.0, 1e3, 1e3).unwrap();
        let fine = gs_report_at(500, 1.0, 1e6, 1e6).unwrap();
        assert!(fine.mean_relative_error < coarse.mean_relative_error);
    }
}
