//! Averages over the family `C(A, B) = { y^2 = x^3 + ax + b : |a| <= A, |b| <= B }`
//! of nonsingular curves.
//!
//! The exact anchor is the per-prime pair count: the number of nonsingular
//! `(s, t)` mod `p` whose curve has `N` points equals `(p - 1) H(D(p, N))`.
//! Summing that over chains of primes through Hasse windows gives the
//! class-number main term that the direct average is compared against.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aliquot::{chain_bound, find_aliquot_cycles_with, CycleSearchConfig, TableSet};
use crate::arith::{gcd, hasse_primes, is_prime, mul_mod, primes_in, HasseWindow};
use crate::classnum::{chain_discriminant, HurwitzCache, Neumaier};
use crate::conjectures::ss_density;
use crate::curves::{discriminant_term, CurveZ, LegendreTable, COEFF_BOUND};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub a_bound: u64,
    pub b_bound: u64,
    pub x_max: u64,
    pub length: usize,
}

impl FamilySpec {
    pub fn new(a_bound: u64, b_bound: u64, x_max: u64, length: usize) -> Result<Self> {
        if a_bound == 0 || b_bound == 0 {
            return Err(Error::InvalidInput(format!("A and B must be positive, got A={a_bound} B={b_bound}")));
        }
        if a_bound > COEFF_BOUND as u64 || b_bound > COEFF_BOUND as u64 {
            return Err(Error::InvalidInput("A and B are limited to 2^31".into()));
        }
        if length == 0 {
            return Err(Error::InvalidInput("cycle length must be at least 1".into()));
        }
        if x_max < 5 {
            return Err(Error::InvalidInput(format!("X must be at least 5, got {x_max}")));
        }
        Ok(FamilySpec { a_bound, b_bound, x_max, length })
    }
}

/// Members of `C(A, B)` in lexicographic `(a, b)` order.
pub fn family_members(a_bound: u64, b_bound: u64) -> Vec<CurveZ> {
    let (a_bound, b_bound) = (a_bound as i64, b_bound as i64);
    (-a_bound..=a_bound)
        .flat_map(|a| (-b_bound..=b_bound).filter_map(move |b| CurveZ::new(a, b).ok()))
        .collect()
}

/// `|C(A, B)|`. Singular pairs are exactly `(a, b) = (-3k^2, 2k^3)`.
pub fn family_size(a_bound: u64, b_bound: u64) -> u64 {
    let total = (2 * a_bound + 1) * (2 * b_bound + 1);
    let mut singular = 1; // k = 0
    let mut k = 1u64;
    while 3 * k * k <= a_bound {
        if 2 * k * k * k <= b_bound {
            singular += 2;
        }
        k += 1;
    }
    total - singular
}

/// `| |C(A, B)| - 4AB | / (A + B + 1)`.
pub fn family_size_constant(a_bound: u64, b_bound: u64) -> f64 {
    let size = family_size(a_bound, b_bound) as f64;
    (size - 4.0 * a_bound as f64 * b_bound as f64).abs() / (a_bound + b_bound + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectAverage {
    pub total_cycles: u64,
    pub family_size: u64,
    pub numerator: u64,
    pub denominator: u64,
}

impl DirectAverage {
    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Exact mean of `pi_{E,L}(X)` over the family.
pub fn direct_average(spec: &FamilySpec) -> Result<DirectAverage> {
    let counts = per_curve_counts(spec)?;
    let total: u64 = counts.iter().map(|&(_, n)| n as u64).sum();
    let size = counts.len() as u64;
    let g = gcd(total, size).max(1);
    Ok(DirectAverage {
        total_cycles: total,
        family_size: size,
        numerator: total / g,
        denominator: size / g,
    })
}

/// `pi_{E,L}(X)` for every member, in family order.
pub fn per_curve_counts(spec: &FamilySpec) -> Result<Vec<(CurveZ, usize)>> {
    let cfg = CycleSearchConfig::new(spec.length, spec.x_max)?;
    let tables = TableSet::up_to(chain_bound(spec.x_max, spec.length));
    family_members(spec.a_bound, spec.b_bound)
        .into_par_iter()
        .map(|c| find_aliquot_cycles_with(&c, &cfg, &tables).map(|v| (c, v.len())))
        .collect()
}

/// Primes `p_1, ..., p_L`, all above 3, with `p_{i+1}` in the Hasse window of
/// `p_i` for `i < L`. The closing step back to `p_1` is not constrained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainTuple(Vec<u64>);

impl ChainTuple {
    pub fn new(primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidInput("empty prime chain".into()));
        }
        for &p in &primes {
            if p <= 3 || !is_prime(p) {
                return Err(Error::InvalidInput(format!("{p} is not a prime > 3")));
            }
        }
        for w in primes.windows(2) {
            if !HasseWindow::new(w[0]).contains(w[1]) {
                return Err(Error::OutsideHasseWindow(w[1], w[0]));
            }
        }
        Ok(ChainTuple(primes))
    }

    pub fn primes(&self) -> &[u64] {
        &self.0
    }
}

/// Window primes above 3, memoised for every prime a chain can reach.
struct WindowMap {
    windows: BTreeMap<u64, Vec<u64>>,
}

impl WindowMap {
    fn new(bound: u64) -> Result<Self> {
        let primes = if bound < 5 { Vec::new() } else { primes_in(5, bound)?.primes };
        let windows = primes
            .into_par_iter()
            .map(|p| {
                let mut w = hasse_primes(p).expect("p > 3").primes;
                w.retain(|&q| q > 3);
                (p, w)
            })
            .collect();
        Ok(WindowMap { windows })
    }

    fn get(&self, p: u64) -> &[u64] {
        &self.windows[&p]
    }
}

fn chain_sum(chain: &mut Vec<u64>, partial: f64, length: usize, windows: &WindowMap, cache: &HurwitzCache) -> f64 {
    let last = *chain.last().unwrap();
    if chain.len() == length {
        let close = chain_discriminant(last, chain[0]);
        return partial * cache.h_or_zero(close) / last as f64;
    }
    let mut acc = Neumaier::default();
    for &q in windows.get(last) {
        let d = chain_discriminant(last, q);
        debug_assert!(d < 0 && matches!(d.rem_euclid(4), 0 | 1));
        let factor = cache.h_or_zero(d) / last as f64;
        chain.push(q);
        acc.add(chain_sum(chain, partial * factor, length, windows, cache));
        chain.pop();
    }
    acc.sum()
}

/// `sum over chains p_1 <= X of prod_j H(D(p_j, p_{j+1})) / p_j` with
/// `p_{L+1} = p_1`. Chains run through primes above 3 with each `p_{i+1}`
/// in the window of `p_i`; a closing step outside the window contributes 0.
pub fn main_term_sum(x_max: u64, length: usize, cache: &HurwitzCache) -> Result<f64> {
    if x_max < 5 {
        return Err(Error::InvalidInput(format!("X must be at least 5, got {x_max}")));
    }
    if length == 0 {
        return Err(Error::InvalidInput("cycle length must be at least 1".into()));
    }
    let windows = WindowMap::new(chain_bound(x_max, length))?;
    let starts = primes_in(5, x_max)?.primes;
    let per_start: Vec<f64> = starts
        .par_iter()
        .map(|&p| chain_sum(&mut vec![p], 1.0, length, &windows, cache))
        .collect();
    // fixed summation order keeps the result independent of scheduling
    let mut total = Neumaier::default();
    for v in per_start {
        total.add(v);
    }
    Ok(total.sum())
}

/// Which `(s, t)` pairs a brute-force count ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairConvention {
    /// Every nonsingular pair in `[0, p)^2`; the Deuring identity is exact.
    #[default]
    Nonsingular,
    /// Nonsingular pairs with `s t != 0`; differs from the exact count by
    /// `O(p)`.
    NonzeroResidues,
}

/// Number of pairs `(s, t)` with each group order, by direct point counting.
pub fn order_histogram(p: u64, convention: PairConvention) -> Result<BTreeMap<u64, u64>> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("need a prime > 3, got {p}")));
    }
    let table = LegendreTable::new(p);
    let chi = table.as_slice();
    let first = match convention {
        PairConvention::Nonsingular => 0,
        PairConvention::NonzeroResidues => 1,
    };
    let partial: Vec<BTreeMap<u64, u64>> = (first..p)
        .into_par_iter()
        .map(|s| {
            let cubic: Vec<u64> = (0..p)
                .map(|x| (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(s, x, p)) % p)
                .collect();
            let s_term = mul_mod(4, mul_mod(mul_mod(s, s, p), s, p), p);
            let mut hist = BTreeMap::new();
            for t in first..p {
                if (s_term + mul_mod(27, mul_mod(t, t, p), p)) % p == 0 {
                    continue;
                }
                let mut sum: i64 = 0;
                for &c in &cubic {
                    let v = c + t;
                    sum += chi[(if v >= p { v - p } else { v }) as usize] as i64;
                }
                *hist.entry((p as i64 + 1 + sum) as u64).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let mut total = BTreeMap::new();
    for h in partial {
        for (k, v) in h {
            *total.entry(k).or_insert(0) += v;
        }
    }
    Ok(total)
}

/// Brute-force count of pairs mod `p` whose curve has exactly `n` points.
pub fn deuring_pair_count(p: u64, n: u64, convention: PairConvention) -> Result<u64> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("need a prime > 3, got {p}")));
    }
    if !HasseWindow::new(p).contains(n) {
        return Err(Error::OutsideHasseWindow(n, p));
    }
    Ok(order_histogram(p, convention)?.get(&n).copied().unwrap_or(0))
}

/// One instance of the pair-count identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeuringRecord {
    pub p: u64,
    pub n: u64,
    /// Brute-force pair count.
    pub lhs: u64,
    /// `12 (p - 1) H(D(p, n))`.
    pub rhs_twelfths: u64,
}

impl DeuringRecord {
    pub fn holds(&self) -> bool {
        self.rhs_twelfths % 12 == 0 && self.lhs * 12 == self.rhs_twelfths
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_twelfths as f64 / 12.0
    }
}

/// Every `(p, N)` record for one prime, over the whole window.
pub fn deuring_records(p: u64, cache: &HurwitzCache) -> Result<Vec<DeuringRecord>> {
    deuring_records_with(p, PairConvention::Nonsingular, cache)
}

/// As [`deuring_records`], with the left side counted under `convention`.
pub fn deuring_records_with(p: u64, convention: PairConvention, cache: &HurwitzCache) -> Result<Vec<DeuringRecord>> {
    let hist = order_histogram(p, convention)?;
    HasseWindow::new(p)
        .integers()
        .map(|n| {
            let twelve = cache.twelve_h(chain_discriminant(p, n))?;
            Ok(DeuringRecord {
                p,
                n,
                lhs: hist.get(&n).copied().unwrap_or(0),
                rhs_twelfths: (p - 1) * twelve,
            })
        })
        .collect()
}

/// Records for all primes `5 <= p <= pmax`, ordered by `(p, N)`.
pub fn verify_deuring(pmax: u64, cache: &HurwitzCache) -> Result<Vec<DeuringRecord>> {
    verify_deuring_with(pmax, PairConvention::Nonsingular, cache)
}

pub fn verify_deuring_with(pmax: u64, convention: PairConvention, cache: &HurwitzCache) -> Result<Vec<DeuringRecord>> {
    if pmax < 5 {
        return Ok(Vec::new());
    }
    let primes = primes_in(5, pmax)?.primes;
    let per_prime: Result<Vec<Vec<DeuringRecord>>> =
        primes.par_iter().map(|&p| deuring_records_with(p, convention, cache)).collect();
    Ok(per_prime?.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RCount {
    pub count: u64,
    /// `4AB / (2^L p_1 ... p_L)`.
    pub reference: f64,
    /// `(2A+1)(2B+1) prod (p_i - 1) / (2 p_i^2)`, the exact density of
    /// admissible residue pairs times the box size.
    pub expected: f64,
}

fn orbit_masks(chain: &ChainTuple, s: &[u64], t: &[u64]) -> Result<Vec<Vec<bool>>> {
    let ps = chain.primes();
    if s.len() != ps.len() || t.len() != ps.len() {
        return Err(Error::InvalidInput("S and T must have one residue per prime".into()));
    }
    let mut sorted = ps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ps.len() {
        return Err(Error::InvalidInput("primes in the chain must be distinct".into()));
    }
    ps.iter()
        .zip(s.iter().zip(t))
        .map(|(&p, (&si, &ti))| {
            if si % p == 0 || ti % p == 0 {
                return Err(Error::InvalidInput(format!("s and t must be nonzero mod {p}")));
            }
            let mut mask = vec![false; (p * p) as usize];
            for u in 1..p {
                let u2 = mul_mod(u, u, p);
                let u4 = mul_mod(u2, u2, p);
                let u6 = mul_mod(u4, u2, p);
                let a = mul_mod(si % p, u4, p);
                let b = mul_mod(ti % p, u6, p);
                mask[(a * p + b) as usize] = true;
            }
            Ok(mask)
        })
        .collect()
}

/// Count of `(a, b)` in the given ranges that reduce, at every `p_i`, into
/// the twist orbit of `(s_i, t_i)`.
pub fn r_count_ranges(chain: &ChainTuple, s: &[u64], t: &[u64], a_range: RangeInclusive<i64>, b_range: RangeInclusive<i64>) -> Result<u64> {
    let masks = orbit_masks(chain, s, t)?;
    let ps = chain.primes();
    let mut count = 0;
    for a in a_range {
        let rows: Vec<usize> = ps.iter().map(|&p| (a.rem_euclid(p as i64) as u64 * p) as usize).collect();
        for b in b_range.clone() {
            let ok = ps.iter().zip(&masks).zip(&rows).all(|((&p, mask), &row)| mask[row + b.rem_euclid(p as i64) as usize]);
            if ok {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `R(P, S, T)` over the box `|a| <= A`, `|b| <= B`.
pub fn r_count(chain: &ChainTuple, s: &[u64], t: &[u64], a_bound: u64, b_bound: u64) -> Result<RCount> {
    let (a, b) = (a_bound as i64, b_bound as i64);
    let count = r_count_ranges(chain, s, t, -a..=a, -b..=b)?;
    let ps = chain.primes();
    let prod: f64 = ps.iter().map(|&p| p as f64).product();
    let reference = 4.0 * a_bound as f64 * b_bound as f64 / (2f64.powi(ps.len() as i32) * prod);
    let density: f64 = ps.iter().map(|&p| (p - 1) as f64 / (2.0 * (p * p) as f64)).product();
    let expected = (2 * a_bound + 1) as f64 * (2 * b_bound + 1) as f64 * density;
    Ok(RCount { count, reference, expected })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropSum {
    pub p: u64,
    pub r: u64,
    pub sum: f64,
    pub ratio: f64,
}

fn check_prime_above_3(p: u64) -> Result<()> {
    if p <= 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("need a prime > 3, got {p}")));
    }
    Ok(())
}

/// `sum_{q in window(p), q != p, r} H(D(p, q)) H(D(r, q))` and the ratio
/// `sum log p / p^{3/2}`. `r` must satisfy `(r - p - 1)^2 < 9p`.
pub fn prop33_sum(p: u64, r: u64, cache: &HurwitzCache) -> Result<PropSum> {
    check_prime_above_3(p)?;
    check_prime_above_3(r)?;
    let diff = r as i128 - p as i128 - 1;
    if diff * diff >= 9 * p as i128 {
        return Err(Error::InvalidInput(format!("r = {r} is too far from p = {p}: need (r - p - 1)^2 < 9p")));
    }
    let mut acc = Neumaier::default();
    for q in hasse_primes(p)? {
        if q == p || q == r {
            continue;
        }
        acc.add(cache.h_or_zero(chain_discriminant(p, q)) * cache.h_or_zero(chain_discriminant(r, q)));
    }
    let sum = acc.sum();
    let pf = p as f64;
    Ok(PropSum { p, r, sum, ratio: sum * pf.ln() / pf.powf(1.5) })
}

/// `sum_{q in window(p), q != p} H(D(p, q))` and the ratio `sum log p / p`.
pub fn prop34_sum(p: u64, cache: &HurwitzCache) -> Result<PropSum> {
    check_prime_above_3(p)?;
    let mut acc = Neumaier::default();
    for q in hasse_primes(p)? {
        if q != p {
            acc.add(cache.h_or_zero(chain_discriminant(p, q)));
        }
    }
    let sum = acc.sum();
    let pf = p as f64;
    Ok(PropSum { p, r: p, sum, ratio: sum * pf.ln() / pf })
}

/// `count` primes drawn log-uniformly from `[lo, hi]`: `u` uniform in
/// `[log lo, log hi]`, then the least prime at or above `floor(e^u)`. Draws
/// that land past the last prime below `hi` are repeated. With replacement.
pub fn sample_primes_log_uniform(lo: u64, hi: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    if lo < 5 || hi < lo {
        return Err(Error::InvalidInput(format!("need 5 <= lo <= hi, got [{lo}, {hi}]")));
    }
    let primes = primes_in(lo, hi)?.primes;
    let Some(&last) = primes.last() else {
        return Err(Error::InvalidInput(format!("no primes in [{lo}, {hi}]")));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u: f64 = if b > a { rng.gen_range(a..=b) } else { a };
        let start = (u.exp().floor() as u64).clamp(lo, hi);
        if start > last {
            continue;
        }
        out.push(primes[primes.partition_point(|&q| q < start)]);
    }
    Ok(out)
}

/// Largest `H(D(p, q)) / (sqrt p log p log log p)` over primes `5 <= p <= pmax`
/// and window primes `q`, with the maximising pair.
pub fn class_number_bound_constant(pmax: u64, cache: &HurwitzCache) -> Result<(f64, u64, u64)> {
    if pmax < 5 {
        return Err(Error::InvalidInput(format!("need pmax >= 5, got {pmax}")));
    }
    let best = primes_in(5, pmax)?
        .primes
        .par_iter()
        .map(|&p| {
            let pf = p as f64;
            let scale = pf.sqrt() * pf.ln() * pf.ln().ln();
            hasse_primes(p)
                .expect("p > 3")
                .into_iter()
                .map(|q| (cache.h_or_zero(chain_discriminant(p, q)) / scale, p, q))
                .fold((0.0, p, p), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(best)
}

/// Output record of a family run. Ratios are `None` when the denominator
/// vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family_size: u64,
    pub direct_average_num: u64,
    pub direct_average_den: u64,
    pub main_term: f64,
    pub ss_density: f64,
    pub ratio_direct_main: Option<f64>,
    pub ratio_direct_ss: Option<f64>,
}

impl FamilyReport {
    pub fn direct_average(&self) -> f64 {
        self.direct_average_num as f64 / self.direct_average_den as f64
    }
}

pub fn family_report(spec: &FamilySpec, cache: &HurwitzCache) -> Result<FamilyReport> {
    let avg = direct_average(spec)?;
    let main_term = main_term_sum(spec.x_max, spec.length, cache)?;
    let density = ss_density(spec.x_max as f64, spec.length as u32)?;
    let direct = avg.to_f64();
    let ratio = |den: f64| (den != 0.0).then(|| direct / den);
    Ok(FamilyReport {
        family_size: avg.family_size,
        direct_average_num: avg.numerator,
        direct_average_den: avg.denominator,
        main_term,
        ss_density: density,
        ratio_direct_main: ratio(main_term),
        ratio_direct_ss: ratio(density),
    })
}

/// Sanity helper shared by callers that accept raw `(a, b)`.
pub fn is_family_member(a: i64, b: i64, a_bound: u64, b_bound: u64) -> bool {
    a.unsigned_abs() <= a_bound && b.unsigned_abs() <= b_bound && discriminant_term(a, b) != 0
}
