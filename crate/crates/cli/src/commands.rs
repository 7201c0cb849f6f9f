use std::path::PathBuf;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde_json::{json, Value};

use aliquot_core::aliquot::{anomalous_primes, find_aliquot_cycles, pi_e_twin, CycleSearchConfig};
use aliquot_core::classnum::{dirichlet_l1, dirichlet_l1_series, gs_truncation_report, truncated_l1, Discriminant, HurwitzCache, LMethod};
use aliquot_core::conjectures::{c2_relative_change, jones_c2};
use aliquot_core::curves::CurveZ;
use aliquot_core::family::{
    family_report, family_size, main_term_sum, prop33_sum, prop34_sum, r_count, sample_primes_log_uniform, verify_deuring_with,
    ChainTuple, FamilySpec, PairConvention,
};

use crate::output::Sink;
use crate::{Cli, Command, Convention, Failure, ENV_CACHE};

/// Brute-force Deuring checks above this need --force.
const DEURING_PMAX_GUARD: u64 = 1_000;

/// Discriminants handled per parallel batch in range mode.
const CLASSNUM_BATCH: usize = 4096;

type Outcome = Result<(), Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    cache: OnceLock<HurwitzCache>,
}

fn default_cache_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(ENV_CACHE).filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(p));
    }
    let data = std::env::var_os("XDG_DATA_HOME")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".local").join("share")))?;
    Some(data.join("aliquot-ec").join("hcache.tsv"))
}

impl Ctx<'_> {
    fn cache(&self) -> Result<&HurwitzCache, Failure> {
        if let Some(c) = self.cache.get() {
            return Ok(c);
        }
        let path = if self.cli.no_cache { None } else { self.cli.cache.clone().or_else(default_cache_path) };
        let cache = match path {
            Some(p) => HurwitzCache::open(p)?,
            None => HurwitzCache::in_memory(),
        };
        Ok(self.cache.get_or_init(|| cache))
    }

    fn flush(&self) -> Outcome {
        if let Some(c) = self.cache.get() {
            c.flush()?;
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, sink: &mut Sink) -> Outcome {
    let ctx = Ctx { cli, cache: OnceLock::new() };
    let result = dispatch(&ctx, sink);
    // keep whatever was computed, even when the run itself failed
    let flushed = ctx.flush();
    result.and(flushed)
}

fn dispatch(ctx: &Ctx, sink: &mut Sink) -> Outcome {
    match &ctx.cli.command {
        Command::Cycles(a) => {
            let curve = CurveZ::new(a.a, a.b)?;
            let cfg = CycleSearchConfig::with_min_prime(a.length, a.x_max, a.min_prime)?;
            let cycles = find_aliquot_cycles(&curve, &cfg)?;
            let columns: Vec<String> = (1..=a.length).map(|i| format!("p{i}")).collect();
            sink.table(&columns.iter().map(String::as_str).collect::<Vec<_>>())?;
            for c in &cycles {
                sink.row(c.primes().iter().map(|&p| json!(p)).collect())?;
            }
            sink.summary("count", json!(cycles.len()));
        }
        Command::Twin(a) => {
            let curve = CurveZ::new(a.a, a.b)?;
            let n = pi_e_twin(&curve, a.x_max)?;
            sink.record(vec![("a", json!(a.a)), ("b", json!(a.b)), ("x_max", json!(a.x_max)), ("twin_count", json!(n))])?;
        }
        Command::Anomalous(a) => {
            let curve = CurveZ::new(a.a, a.b)?;
            let primes = anomalous_primes(&curve, a.x_max)?;
            sink.table(&["p"])?;
            for &p in &primes {
                sink.row(vec![json!(p)])?;
            }
            sink.summary("count", json!(primes.len()));
        }
        Command::Classnum(a) => classnum(ctx, sink, a.d, a.range.as_deref())?,
        Command::Lvalue(a) => {
            let d = Discriminant::new(a.d)?;
            let mut values = vec![dirichlet_l1(d.value())?, dirichlet_l1_series(d.value())?];
            if let Some(y) = a.y {
                values.push(truncated_l1(d.value(), y)?);
            }
            sink.table(&["D", "method", "value", "error_bound"])?;
            for v in values {
                let method = match v.method {
                    LMethod::FormsFormula => "forms".to_string(),
                    LMethod::Series => "series".to_string(),
                    LMethod::Truncated { y } => format!("truncated:{y}"),
                };
                sink.row(vec![json!(d.value()), json!(method), json!(v.value), json!(v.error_bound)])?;
            }
        }
        Command::GsReport(a) => {
            let report = gs_truncation_report(a.q, a.alpha, a.y_cap)?;
            sink.table(&["d", "l_value", "truncated", "relative_error"])?;
            for r in &report.rows {
                sink.row(vec![json!(r.d), json!(r.l_value), json!(r.truncated), json!(r.relative_error)])?;
            }
            sink.summary("q", json!(report.q));
            sink.summary("alpha", json!(report.alpha));
            sink.summary("y", json!(report.y));
            sink.summary("y_used", json!(report.y_used));
            sink.summary("threshold", json!(report.threshold));
            sink.summary("exceptional_count", json!(report.exceptional_count));
            sink.summary("exceptional_bound", json!(report.exceptional_bound));
            sink.summary("mean_relative_error", json!(report.mean_relative_error));
        }
        Command::Deuring(a) => {
            if a.pmax > DEURING_PMAX_GUARD && !ctx.cli.force {
                return Err(Failure::Budget(format!(
                    "pmax = {} exceeds the brute-force guard {DEURING_PMAX_GUARD}; pass --force to run anyway",
                    a.pmax
                )));
            }
            let convention = match a.convention {
                Convention::Nonsingular => PairConvention::Nonsingular,
                Convention::NonzeroResidues => PairConvention::NonzeroResidues,
            };
            let mut records = verify_deuring_with(a.pmax, convention, ctx.cache()?)?;
            if a.inject_fault {
                if let Some(r) = records.first_mut() {
                    r.lhs += 1;
                }
            }
            sink.table(&["p", "n", "lhs", "rhs", "holds"])?;
            let mut mismatches = Vec::new();
            for r in &records {
                let rhs = if r.rhs_twelfths % 12 == 0 { json!(r.rhs_twelfths / 12) } else { json!(r.rhs()) };
                sink.row(vec![json!(r.p), json!(r.n), json!(r.lhs), rhs.clone(), json!(r.holds())])?;
                if !r.holds() {
                    mismatches.push(json!({"p": r.p, "n": r.n, "lhs": r.lhs, "rhs": rhs}));
                }
            }
            sink.summary("checked", json!(records.len()));
            let failed = mismatches.len();
            if failed == 0 {
                eprintln!("all identities hold ({} (p, N) pairs checked)", records.len());
            }
            sink.summary("mismatches", Value::Array(mismatches));
            if failed > 0 && matches!(convention, PairConvention::Nonsingular) {
                return Err(Failure::Identity(format!("{failed} of {} identities failed", records.len())));
            }
        }
        Command::Family(a) => {
            let spec = FamilySpec::new(a.a_bound, a.b_bound, a.x_max, a.length)?;
            let work = a.a_bound.saturating_mul(a.b_bound).saturating_mul(a.x_max);
            eprintln!(
                "estimate: {} curves, A*B*X = {work} (budget {})",
                family_size(a.a_bound, a.b_bound),
                a.budget
            );
            if work > a.budget && !ctx.cli.force {
                return Err(Failure::Budget(format!("A*B*X = {work} exceeds the budget {}; pass --force to run anyway", a.budget)));
            }
            let r = family_report(&spec, ctx.cache()?)?;
            sink.record(vec![
                ("family_size", json!(r.family_size)),
                ("direct_average_num", json!(r.direct_average_num)),
                ("direct_average_den", json!(r.direct_average_den)),
                ("main_term", json!(r.main_term)),
                ("ss_density", json!(r.ss_density)),
                ("ratio_direct_main", json!(r.ratio_direct_main)),
                ("ratio_direct_ss", json!(r.ratio_direct_ss)),
            ])?;
        }
        Command::Mainterm(a) => {
            let v = main_term_sum(a.x_max, a.length, ctx.cache()?)?;
            sink.record(vec![("x_max", json!(a.x_max)), ("length", json!(a.length)), ("main_term", json!(v))])?;
        }
        Command::Props(a) => {
            let primes = match (a.p, a.sample) {
                (Some(p), _) => vec![p],
                (None, Some(n)) => sample_primes_log_uniform(a.lo, a.hi, n, ctx.cli.seed)?,
                (None, None) => unreachable!("clap requires one of --p, --sample"),
            };
            let cache = ctx.cache()?;
            let sums: Result<Vec<_>, _> = primes
                .par_iter()
                .map(|&p| Ok::<_, aliquot_core::Error>((prop34_sum(p, cache)?, prop33_sum(p, a.r.unwrap_or(p), cache)?)))
                .collect();
            sink.table(&["p", "r", "prop34_sum", "prop34_ratio", "prop33_sum", "prop33_ratio"])?;
            let (mut max34, mut max33) = (0f64, 0f64);
            for (s34, s33) in sums? {
                max34 = max34.max(s34.ratio);
                max33 = max33.max(s33.ratio);
                sink.row(vec![json!(s34.p), json!(s33.r), json!(s34.sum), json!(s34.ratio), json!(s33.sum), json!(s33.ratio)])?;
            }
            sink.summary("max_prop34_ratio", json!(max34));
            sink.summary("max_prop33_ratio", json!(max33));
        }
        Command::Rcount(a) => {
            let chain = ChainTuple::new(a.primes.clone())?;
            let r = r_count(&chain, &a.s, &a.t, a.a, a.b)?;
            sink.record(vec![("count", json!(r.count)), ("reference", json!(r.reference)), ("expected", json!(r.expected))])?;
        }
        Command::Constants(a) => {
            let s = jones_c2(a.cutoff)?;
            let change = a.compare.map(|lo| c2_relative_change(lo, a.cutoff)).transpose()?;
            sink.record(vec![
                ("cutoff", json!(s.cutoff)),
                ("last_prime", json!(s.last_prime)),
                ("partial_product", json!(s.partial_product)),
                ("last_factor", json!(s.last_factor)),
                ("factors_settling", json!(s.factors_settling)),
                ("compare_cutoff", json!(a.compare)),
                ("relative_change", json!(change)),
            ])?;
        }
    }
    Ok(())
}

fn classnum(ctx: &Ctx, sink: &mut Sink, single: Option<i64>, range: Option<&[i64]>) -> Outcome {
    let values: Vec<i64> = match (single, range) {
        (Some(d), _) => {
            if d >= 0 {
                return Err(Failure::Invalid(format!("H(D) needs D < 0, got {d}")));
            }
            vec![d]
        }
        (None, Some(&[lo, hi])) => {
            if lo > hi || hi >= 0 {
                return Err(Failure::Invalid(format!("range needs DMIN <= DMAX < 0, got [{lo}, {hi}]")));
            }
            (lo..=hi).filter(|d| matches!(d.rem_euclid(4), 0 | 1)).collect()
        }
        _ => return Err(Failure::Invalid("give D or --range DMIN DMAX".into())),
    };
    let cache = ctx.cache()?;
    sink.table(&["D", "twelve_h", "H"])?;
    for batch in values.chunks(CLASSNUM_BATCH) {
        let computed: Result<Vec<_>, _> = batch.par_iter().map(|&d| cache.hurwitz(d).map(|h| (d, h))).collect();
        for (d, h) in computed? {
            sink.row(vec![json!(d), json!(h.twelve_h()), json!(h.to_string())])?;
        }
    }
    Ok(())
}
