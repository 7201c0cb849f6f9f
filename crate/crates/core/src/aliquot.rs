//! Aliquot cycles of a fixed curve over the rationals.
//!
//! A cycle of length `L` is a tuple of distinct primes of good reduction with
//! `#E(F_{p_i}) = p_{i+1}` cyclically. It is normalised when it starts at its
//! smallest prime; `pi_{E,L}(X)` counts normalised cycles with `p_1 <= X`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, primes_in, HasseWindow};
use crate::curves::{reduce, reduce_unchecked, trace_of_frobenius, trace_with_table, CurveZ, LegendreTable, Reduction};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_PRIME: u64 = 5;

/// Tables are precomputed only for primes below this; their total size is
/// roughly `bound^2 / (2 log bound)` bytes.
const TABLE_CAP: u64 = 30_000;

/// Chain values above this abort instead of risking overflow.
const CHAIN_LIMIT: u64 = i64::MAX as u64 / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSearchConfig {
    pub length: usize,
    pub x_max: u64,
    pub min_prime: u64,
}

impl CycleSearchConfig {
    pub fn new(length: usize, x_max: u64) -> Result<Self> {
        Self::with_min_prime(length, x_max, DEFAULT_MIN_PRIME)
    }

    pub fn with_min_prime(length: usize, x_max: u64, min_prime: u64) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidInput("cycle length must be at least 1".into()));
        }
        if min_prime < 5 {
            return Err(Error::InvalidInput(format!("min_prime must be at least 5, got {min_prime}")));
        }
        Ok(CycleSearchConfig { length, x_max, min_prime })
    }
}

/// A normalised aliquot cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AliquotCycle {
    primes: Vec<u64>,
}

impl AliquotCycle {
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn first(&self) -> u64 {
        self.primes[0]
    }

    /// Rotates `primes` so the minimum leads.
    pub fn normalized(primes: &[u64]) -> Self {
        let start = primes
            .iter()
            .enumerate()
            .min_by_key(|&(_, p)| *p)
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut v = primes.to_vec();
        v.rotate_left(start);
        AliquotCycle { primes: v }
    }

    /// Re-checks every defining property by reducing the curve afresh.
    pub fn verify(&self, curve: &CurveZ, min_prime: u64) -> bool {
        let n = self.primes.len();
        if n == 0 || self.primes[0] != *self.primes.iter().min().unwrap() {
            return false;
        }
        let mut sorted = self.primes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return false;
        }
        (0..n).all(|i| {
            let p = self.primes[i];
            let next = self.primes[(i + 1) % n];
            p >= min_prime
                && is_prime(p)
                && HasseWindow::new(p).contains(next)
                && matches!(reduce(curve, p), Ok(Reduction::Good(c)) if trace_of_frobenius(&c).group_order == next)
        })
    }
}

/// Result of one step `p -> #E(F_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Order(u64),
    BadReduction,
}

/// Legendre tables for every prime up to a bound (capped at 30 000), shared
/// read-only across workers. Other primes get a table built on demand.
#[derive(Debug, Default)]
pub struct TableSet {
    tables: HashMap<u64, LegendreTable>,
}

impl TableSet {
    pub fn up_to(bound: u64) -> Self {
        let bound = bound.min(TABLE_CAP);
        let tables = if bound < 5 {
            HashMap::new()
        } else {
            primes_in(5, bound)
                .expect("valid range")
                .primes
                .into_par_iter()
                .map(|p| (p, LegendreTable::new(p)))
                .collect()
        };
        TableSet { tables }
    }

    /// Group order of the reduction at a prime `p > 3`.
    pub fn step(&self, curve: &CurveZ, p: u64) -> Step {
        match reduce_unchecked(curve, p) {
            Reduction::Bad => Step::BadReduction,
            Reduction::Good(c) => {
                let order = match self.tables.get(&p) {
                    Some(t) => trace_with_table(&c, t).group_order,
                    None => trace_with_table(&c, &LegendreTable::new(p)).group_order,
                };
                Step::Order(order)
            }
        }
    }
}

/// Largest prime a chain started at or below `x_max` can visit within
/// `length` steps, going up through Hasse windows.
pub fn chain_bound(x_max: u64, length: usize) -> u64 {
    let mut b = x_max;
    for _ in 0..length {
        b = HasseWindow::new(b.max(5)).bounds().1;
    }
    b
}

pub fn aliquot_step(curve: &CurveZ, p: u64) -> Result<Step> {
    Ok(match reduce(curve, p)? {
        Reduction::Bad => Step::BadReduction,
        Reduction::Good(c) => Step::Order(trace_of_frobenius(&c).group_order),
    })
}

/// Follows the chain from `p1`, returning the cycle if it closes after
/// exactly `cfg.length` steps through distinct primes none below `p1`.
fn cycle_from(curve: &CurveZ, p1: u64, cfg: &CycleSearchConfig, tables: &TableSet) -> Result<Option<AliquotCycle>> {
    let mut chain = Vec::with_capacity(cfg.length);
    chain.push(p1);
    let mut current = p1;
    for step in 1..=cfg.length {
        let next = match tables.step(curve, current) {
            Step::BadReduction => return Ok(None),
            Step::Order(n) => n,
        };
        if next > CHAIN_LIMIT {
            return Err(Error::Overflow(current));
        }
        if step == cfg.length {
            return Ok((next == p1).then_some(AliquotCycle { primes: chain }));
        }
        // next == p1 here is an early return: the tuple would repeat.
        if next <= p1 || next < cfg.min_prime || chain.contains(&next) || !is_prime(next) {
            return Ok(None);
        }
        chain.push(next);
        current = next;
    }
    unreachable!("loop returns at the final step")
}

pub fn find_aliquot_cycles(curve: &CurveZ, cfg: &CycleSearchConfig) -> Result<Vec<AliquotCycle>> {
    let tables = TableSet::up_to(chain_bound(cfg.x_max, cfg.length));
    find_aliquot_cycles_with(curve, cfg, &tables)
}

pub fn find_aliquot_cycles_with(curve: &CurveZ, cfg: &CycleSearchConfig, tables: &TableSet) -> Result<Vec<AliquotCycle>> {
    if cfg.x_max < cfg.min_prime {
        return Ok(Vec::new());
    }
    let starts = primes_in(cfg.min_prime, cfg.x_max)?.primes;
    let found: Result<Vec<Option<AliquotCycle>>> = starts
        .par_iter()
        .map(|&p1| cycle_from(curve, p1, cfg, tables))
        .collect();
    let mut cycles: Vec<AliquotCycle> = found?.into_iter().flatten().collect();
    cycles.sort();
    Ok(cycles)
}

/// `pi_{E,L}(X)`.
pub fn pi_e_l(curve: &CurveZ, cfg: &CycleSearchConfig) -> Result<usize> {
    find_aliquot_cycles(curve, cfg).map(|c| c.len())
}

/// Good primes `5 <= p <= X` where `#E(F_p)` is prime.
pub fn pi_e_twin(curve: &CurveZ, x_max: u64) -> Result<usize> {
    if x_max < 5 {
        return Ok(0);
    }
    let tables = TableSet::default();
    Ok(primes_in(5, x_max)?
        .primes
        .par_iter()
        .filter(|&&p| matches!(tables.step(curve, p), Step::Order(n) if is_prime(n)))
        .count())
}

/// Good primes `5 <= p <= X` with `#E(F_p) = p`, i.e. `a_p = 1`.
pub fn anomalous_primes(curve: &CurveZ, x_max: u64) -> Result<Vec<u64>> {
    if x_max < 5 {
        return Ok(Vec::new());
    }
    let tables = TableSet::default();
    Ok(primes_in(5, x_max)?
        .primes
        .into_par_iter()
        .filter(|&p| tables.step(curve, p) == Step::Order(p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::CurveModP;

    fn curve(a: i64, b: i64) -> CurveZ {
        CurveZ::new(a, b).unwrap()
    }

    /// Group order by listing points.
    fn oracle_order(c: &CurveZ, p: u64) -> Option<u64> {
        let s = c.a().rem_euclid(p as i64) as u64;
        let t = c.b().rem_euclid(p as i64) as u64;
        CurveModP::new(p, s, t).ok()?;
        let mut n = 1;
        for x in 0..p {
            let rhs = (x * x % p * x + s * x + t) % p;
            n += (0..p).filter(|y| y * y % p == rhs).count() as u64;
        }
        Some(n)
    }

    #[test]
    fn step_examples() {
        let e = curve(0, 2);
        assert_eq!(aliquot_step(&e, 13).unwrap(), Step::Order(19));
        assert_eq!(oracle_order(&e, 13), Some(19));
        assert_eq!(aliquot_step(&e, 19).unwrap(), Step::Order(13));
        assert_eq!(oracle_order(&e, 19), Some(13));
        // 4 + 27 = 31
        assert_eq!(aliquot_step(&curve(1, 1), 31).unwrap(), Step::BadReduction);
        assert!(aliquot_step(&e, 3).is_err());
    }

    #[test]
    fn amicable_pair_on_x3_plus_2() {
        let e = curve(0, 2);
        let cycles = find_aliquot_cycles(&e, &CycleSearchConfig::new(2, 100).unwrap()).unwrap();
        assert!(cycles.contains(&AliquotCycle::normalized(&[19, 13])));
        for c in &cycles {
            assert!(c.verify(&e, 5));
        }
        assert!(pi_e_l(&e, &CycleSearchConfig::new(2, 100).unwrap()).unwrap() >= 1);
        assert_eq!(pi_e_l(&e, &CycleSearchConfig::new(2, 12).unwrap()).unwrap(), 0);
    }

    #[test]
    fn empty_ranges() {
        let e = curve(0, 2);
        assert!(find_aliquot_cycles(&e, &CycleSearchConfig::new(2, 4).unwrap()).unwrap().is_empty());
        assert_eq!(pi_e_twin(&e, 4).unwrap(), 0);
        assert!(anomalous_primes(&e, 4).unwrap().is_empty());
        assert!(CycleSearchConfig::new(0, 10).is_err());
        assert!(CycleSearchConfig::with_min_prime(2, 10, 3).is_err());
    }

    #[test]
    fn twin_count_matches_oracle() {
        let e = curve(0, 2);
        let oracle = [5u64, 7, 11, 13]
            .iter()
            .filter(|&&p| oracle_order(&e, p).is_some_and(is_prime))
            .count();
        assert_eq!(pi_e_twin(&e, 13).unwrap(), oracle);
        assert!(oracle_order(&e, 13).is_some_and(is_prime));
    }

    #[test]
    fn anomalous_primes_match_scan() {
        let e = curve(1, 3);
        let scan: Vec<u64> = (5..=200u64)
            .filter(|&p| is_prime(p) && oracle_order(&e, p) == Some(p))
            .collect();
        let found = anomalous_primes(&e, 200).unwrap();
        assert_eq!(found, scan);
        let flat: Vec<u64> = find_aliquot_cycles(&e, &CycleSearchConfig::new(1, 200).unwrap())
            .unwrap()
            .iter()
            .map(|c| c.first())
            .collect();
        assert_eq!(found, flat);
    }

    /// Exhaustive cycle listing straight from the definition, without pruning.
    fn oracle_cycles(e: &CurveZ, length: usize, x_max: u64) -> Vec<AliquotCycle> {
        let bound = chain_bound(x_max, length);
        let order: HashMap<u64, Option<u64>> = (5..=bound)
            .filter(|&p| is_prime(p))
            .map(|p| (p, oracle_order(e, p)))
            .collect();
        let mut out = std::collections::BTreeSet::new();
        for p1 in (5..=x_max).filter(|&p| is_prime(p)) {
            let mut tuple = vec![p1];
            let mut cur = p1;
            let closed = loop {
                // absent: composite or below 5; None: bad reduction
                let Some(Some(n)) = order.get(&cur).copied() else { break false };
                if tuple.len() == length {
                    break n == p1;
                }
                tuple.push(n);
                cur = n;
            };
            let mut distinct = tuple.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if closed && distinct.len() == length && tuple.iter().all(|&p| p >= p1) {
                out.insert(AliquotCycle::normalized(&tuple));
            }
        }
        out.into_iter().collect()
    }

    #[test]
    fn search_matches_unpruned_oracle() {
        for (a, b) in [(0, 2), (1, 3), (-1, 1), (2, -5), (0, 7), (5, 11)] {
            let e = curve(a, b);
            for length in 1..=3 {
                let got = find_aliquot_cycles(&e, &CycleSearchConfig::new(length, 150).unwrap()).unwrap();
                assert_eq!(got, oracle_cycles(&e, length, 150), "({a},{b}) L={length}");
            }
        }
    }

    #[test]
    fn every_rotation_leads_back_to_the_normalized_cycle() {
        for (a, b) in [(0, 2), (3, 4), (-7, 10)] {
            let e = curve(a, b);
            for length in 2..=3 {
                let cfg = CycleSearchConfig::new(length, 400).unwrap();
                let cycles = find_aliquot_cycles(&e, &cfg).unwrap();
                let mut seen = std::collections::HashSet::new();
                for c in &cycles {
                    assert!(c.verify(&e, 5));
                    assert!(seen.insert(c.clone()), "duplicate {c:?}");
                    for r in 0..length {
                        let mut rot = c.primes().to_vec();
                        rot.rotate_left(r);
                        assert_eq!(&AliquotCycle::normalized(&rot), c);
                    }
                    for i in 0..length {
                        let p = c.primes()[i];
                        let q = c.primes()[(i + 1) % length];
                        let diff = q as i128 - p as i128 - 1;
                        assert!(diff * diff < 4 * p as i128);
                    }
                }
            }
        }
    }

    #[test]
    fn counts_are_monotone_in_x() {
        let e = curve(0, 2);
        let mut last = (0, 0);
        let mut prev: Vec<AliquotCycle> = Vec::new();
        for x in [10u64, 50, 100, 300, 1000] {
            let cycles = find_aliquot_cycles(&e, &CycleSearchConfig::new(2, x).unwrap()).unwrap();
            assert!(prev.iter().all(|c| cycles.contains(c)));
            let now = (cycles.len(), pi_e_twin(&e, x).unwrap());
            assert!(now.0 >= last.0 && now.1 >= last.1);
            last = now;
            prev = cycles;
        }
    }

    #[test]
    fn verify_rejects_bad_tuples() {
        let e = curve(0, 2);
        assert!(AliquotCycle::normalized(&[13, 19]).verify(&e, 5));
        assert!(!AliquotCycle { primes: vec![19, 13] }.verify(&e, 5));
        assert!(!AliquotCycle::normalized(&[13, 17]).verify(&e, 5));
        assert!(!AliquotCycle::normalized(&[13, 19]).verify(&e, 17));
    }
}
