//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aliquot_core::aliquot::{find_aliquot_cycles, pi_e_l, pi_e_twin, AliquotCycle, CycleSearchConfig};
use aliquot_core::arith::{is_prime, kronecker, primes_in, quadratic_char_sum, HasseWindow};
use aliquot_core::classnum::{
    chain_discriminant, class_number_h, dirichlet_l1, dirichlet_l1_series, fundamental_discriminants, hurwitz_class_number,
    roots_of_unity_w, HurwitzCache,
};
use aliquot_core::conjectures::{c2_factor, c2_relative_change, jones_c2, jones_integral};
use aliquot_core::curves::{nonsingular_pair_count, trace_of_frobenius, CurveModP, CurveZ};
use aliquot_core::family::{
    deuring_records, family_report, main_term_sum, prop33_sum, prop34_sum, sample_primes_log_uniform, FamilySpec, FamilyReport,
};

/// Criterion outcome: whether it passed, and a one-line detail.
type Verdict = (bool, String);

/// `#E(F_p)` from a table of square-root counts: `1 + sum_x #{y : y^2 = f(x)}`.
fn brute_group_order(p: u64, s: u64, t: u64) -> u64 {
    let mut roots = vec![0u64; p as usize];
    for y in 0..p {
        roots[(y * y % p) as usize] += 1;
    }
    1 + (0..p).map(|x| roots[((x * x % p * x + s * x + t) % p) as usize]).sum::<u64>()
}

fn deuring_exactness() -> Verdict {
    let cache = HurwitzCache::in_memory();
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in primes_in(5, 199).unwrap() {
        for r in deuring_records(p, &cache).unwrap() {
            checked += 1;
            if !r.holds() {
                bad.push((r.p, r.n, r.lhs, r.rhs()));
            }
        }
    }
    let first = bad.first().map_or(String::new(), |b| format!(", first (p, N, lhs, rhs) = {b:?}"));
    (bad.is_empty(), format!("{checked} (p, N) pairs checked, {} mismatches{first}", bad.len()))
}

fn partition_check() -> Verdict {
    let cache = HurwitzCache::in_memory();
    let mut bad = Vec::new();
    let primes = primes_in(5, 199).unwrap().primes;
    for &p in &primes {
        let total: u64 = deuring_records(p, &cache).unwrap().iter().map(|r| r.lhs).sum();
        // nonsingular pairs: p^2 minus the p solutions of 4s^3 + 27t^2 = 0
        let expect = nonsingular_pair_count(p).unwrap();
        if total != expect || expect != p * p - p {
            bad.push((p, total, expect));
        }
    }
    (bad.is_empty(), format!("{} primes, mismatches {bad:?}", primes.len()))
}

fn l_value_cross_validation() -> Verdict {
    let mut worst = (0.0f64, 0i64);
    let ds = fundamental_discriminants(5000);
    for d in &ds {
        let h = class_number_h(*d) as f64;
        let w = roots_of_unity_w(*d) as f64;
        let forms = 2.0 * std::f64::consts::PI * h / (w * (d.abs() as f64).sqrt());
        assert_eq!(forms, dirichlet_l1(d.value()).unwrap().value);
        let series = dirichlet_l1_series(d.value()).unwrap().value;
        let rel = (forms - series).abs() / forms;
        if rel > worst.0 {
            worst = (rel, d.value());
        }
    }
    (worst.0 < 1e-6, format!("{} fundamental d, max relative error {:.3e} at d = {}", ds.len(), worst.0, worst.1))
}

fn amicable_pair() -> Verdict {
    // oracle: group orders of y^2 = x^3 + 2 by listing points
    let oracle = (brute_group_order(13, 0, 2), brute_group_order(19, 0, 2));
    let curve = CurveZ::new(0, 2).unwrap();
    let cycles = find_aliquot_cycles(&curve, &CycleSearchConfig::new(2, 100).unwrap()).unwrap();
    let want = AliquotCycle::normalized(&[13, 19]);
    let ok = oracle == (19, 13) && cycles.contains(&want) && want.verify(&curve, 5);
    let found: Vec<&[u64]> = cycles.iter().map(|c| c.primes()).collect();
    (ok, format!("oracle #E(F_13) = {}, #E(F_19) = {}; search found {found:?}", oracle.0, oracle.1))
}

fn character_sum_identity() -> Verdict {
    let mut cases = 0;
    let mut bad = Vec::new();
    for ell in [3u64, 5, 7, 11, 13] {
        let l = ell as i64;
        for a in 1..l {
            for b in 0..l {
                for c in 0..l {
                    let brute: i64 = (0..l).map(|t| kronecker(a * t * t + b * t + c, ell) as i64).sum();
                    cases += 1;
                    if quadratic_char_sum(a, b, c, ell).unwrap() != brute {
                        bad.push((ell, a, b, c));
                    }
                }
            }
        }
    }
    // (1, 4p, 0): discriminant 16 p^2 is a nonzero square mod l, so the sum is -1
    let mut spec_ok = true;
    for p in primes_in(5, 200).unwrap() {
        for ell in [3u64, 5, 7, 11, 13].into_iter().filter(|&l| l != p) {
            spec_ok &= quadratic_char_sum(1, 4 * p as i64, 0, ell).unwrap() == -1;
        }
    }
    (bad.is_empty() && spec_ok, format!("{cases} (l, a, b, c) cases, {} mismatches; c(l, 1) = -1 for (1, 4p, 0): {spec_ok}", bad.len()))
}

fn hasse_property() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let primes = primes_in(5, 1000).unwrap().primes;
    let mut n = 0;
    let mut worst = 0.0f64;
    let mut ok = true;
    while n < 1000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let (s, t) = (rng.gen_range(0..p), rng.gen_range(0..p));
        let Ok(curve) = CurveModP::new(p, s, t) else { continue };
        let rec = trace_of_frobenius(&curve);
        ok &= rec.group_order == brute_group_order(p, s, t);
        ok &= (rec.a_p * rec.a_p) as u64 <= 4 * p;
        worst = worst.max((rec.a_p * rec.a_p) as f64 / (4 * p) as f64);
        n += 1;
    }
    (ok, format!("{n} curves, max a_p^2 / 4p = {worst:.4}"))
}

fn proposition_ratios() -> Verdict {
    let cache = HurwitzCache::in_memory();
    let primes = sample_primes_log_uniform(1_000, 10_000, 50, 0).unwrap();
    let (mut max34, mut max33) = ((0.0f64, 0u64), (0.0f64, 0u64));
    for &p in &primes {
        let r34 = prop34_sum(p, &cache).unwrap().ratio;
        let r33 = prop33_sum(p, p, &cache).unwrap().ratio;
        if r34 > max34.0 {
            max34 = (r34, p);
        }
        if r33 > max33.0 {
            max33 = (r33, p);
        }
    }
    (
        max34.0 < 100.0 && max33.0 < 100.0,
        format!("50 primes (seed 0); max prop34 ratio {:.4} at p = {}, max prop33 ratio {:.4} at p = {}", max34.0, max34.1, max33.0, max33.1),
    )
}

fn coherence_report() -> Verdict {
    let spec = FamilySpec::new(40, 40, 500, 2).unwrap();
    let run = |jobs: usize| -> FamilyReport {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().unwrap();
        pool.install(|| family_report(&spec, &HurwitzCache::in_memory()).unwrap())
    };
    let (one, eight) = (run(1), run(8));
    let same = serde_json::to_string(&one).unwrap() == serde_json::to_string(&eight).unwrap();
    let direct = one.direct_average();
    let ratio = one.ratio_direct_main;
    let finite_pos = |v: f64| v.is_finite() && v > 0.0;
    let ok = same && finite_pos(direct) && finite_pos(one.main_term) && ratio.is_some_and(finite_pos);
    (
        ok,
        format!(
            "|C| = {}, direct_average = {}/{} = {direct:.6}, main_term = {:.6}, ratio = {}, identical for jobs 1 and 8: {same}",
            one.family_size,
            one.direct_average_num,
            one.direct_average_den,
            one.main_term,
            ratio.map_or("undefined".into(), |r| format!("{r:.6}"))
        ),
    )
}

fn c2_convergence() -> Verdict {
    let factors_ok = c2_factor(2) == (4, 9) && c2_factor(3) == (189, 256);
    let change = c2_relative_change(1_000, 10_000).unwrap();
    let value = jones_c2(10_000).unwrap().partial_product;
    (
        factors_ok && change < 1e-6,
        format!("factors 4/9 and 189/256 exact: {factors_ok}; |P(1e4) - P(1e3)| / P(1e4) = {change:.3e} (need < 1e-6); P(1e4) = {value:.9}"),
    )
}

fn monotonicity() -> Verdict {
    let grid = [10u64, 100, 1000];
    let cache = HurwitzCache::in_memory();
    let mut failures = Vec::new();
    let mut check = |name: String, values: Vec<f64>| {
        if values.windows(2).any(|w| w[1] < w[0]) {
            failures.push(format!("{name}: {values:?}"));
        }
    };
    for (a, b) in [(0i64, 2i64), (1, 1), (-1, 3), (2, -5)] {
        let curve = CurveZ::new(a, b).unwrap();
        for l in 1..=3 {
            let v = grid.iter().map(|&x| pi_e_l(&curve, &CycleSearchConfig::new(l, x).unwrap()).unwrap() as f64).collect();
            check(format!("pi_E,{l} for ({a},{b})"), v);
        }
        check(format!("pi_twin for ({a},{b})"), grid.iter().map(|&x| pi_e_twin(&curve, x).unwrap() as f64).collect());
    }
    for l in 1..=3 {
        check(format!("main_term L={l}"), grid.iter().map(|&x| main_term_sum(x, l, &cache).unwrap()).collect());
        check(format!("jones_integral L={l}"), grid.iter().map(|&x| jones_integral(x as f64, l as u32).unwrap()).collect());
    }
    (failures.is_empty(), if failures.is_empty() { "all sequences nondecreasing on X in {10, 100, 1000}".into() } else { failures.join("; ") })
}

fn main() -> ExitCode {
    // sanity: the class numbers the suite leans on
    assert_eq!(hurwitz_class_number(-3).unwrap().to_string(), "1/6");
    assert_eq!(chain_discriminant(13, 19), -27);
    assert!(HasseWindow::new(13).contains(19) && is_prime(19));

    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("1 Deuring exactness, 5 <= p <= 199", deuring_exactness),
        ("2 partition of nonsingular pairs, p <= 199", partition_check),
        ("3 L(1, chi_d) forms vs series, rel err < 1e-6", l_value_cross_validation),
        ("4 amicable pair (13, 19) on y^2 = x^3 + 2", amicable_pair),
        ("5 complete quadratic character sum", character_sum_identity),
        ("6 Hasse bound on 1000 random curves", hasse_property),
        ("7 proposition ratios < 100", proposition_ratios),
        ("8 family coherence (40, 40, 500, 2)", coherence_report),
        ("9 C2 convergence < 1e-6", c2_convergence),
        ("10 monotonicity in X", monotonicity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        failed += usize::from(!ok);
        println!("{} criterion {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
