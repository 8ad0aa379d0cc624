//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_core::RngCore;

use rsrforge::bench::{self, emit_report, BenchConfig, Category, ReportFormat, Selection};
use rsrforge::discovery::{infer, property_from_text, InferConfig, Property};
use rsrforge::expr::{canonicalize, eval, parse, parse_relation, simplify_rational, ClosedForm, Env, Expr, Rational};
use rsrforge::regression::{fit_integer_bounded, rationalize};
use rsrforge::rng::{below, stream, uniform};
use rsrforge::sampling::{taylor_program, Interval, Oracle};
use rsrforge::verification::{property_test, symbolic_verify, Channel, VerifyConfig};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

const LINEAR_TEST_RESIDUAL: f64 = 1e-9;
const LINEAR_SECONDS: f64 = 5.0;
const SQUARED_SECONDS: f64 = 5.0;
const EXP_TEST_RESIDUAL: f64 = 1e-8;
const SIGMOID_PROPERTY_RESIDUAL: f64 = 1e-6;
const SIGMOID_SECONDS: f64 = 60.0;
const SIGMOID_MIN_SEEDS: usize = 4;
const TAYLOR_MIN_SEEDS: usize = 3;
const TAYLOR_MAX_SAMPLES: usize = 100;
const TAN_MIN_SEEDS: usize = 4;
const RATIONAL_TARGETS: usize = 1000;
const RATIONAL_MAX_DEN: u64 = 50;
const RATIONAL_NOISE: f64 = 1e-9;
const RATIONAL_SECONDS: f64 = 1.0;
const MUTATION: (i128, i128) = (1, 100);
const INTEGER_INSTANCES: usize = 200;
const INTEGER_MAX_COLUMNS: usize = 6;
const INTEGER_MAX_BOUND: i64 = 3;
const INTEGER_SECONDS: f64 = 30.0;
const FUZZED_IDENTITIES: usize = 1000;
const BENCH_SECONDS: f64 = 300.0;

const SIGMOID_QUERIES: &str = "x+r,x-r,r,x";
const SIGMOID_IDENTITY: [(&str, i64); 5] = [
    ("f(x)*f(x + r)*f(r)", 2),
    ("f(x)*f(x + r)", -1),
    ("f(x)*f(r)", -1),
    ("f(x + r)*f(r)", -1),
    ("f(x + r)", 1),
];
const SIGMOID_RECOVERY: &str = "f(x) = f(x + r)*(f(r) - 1)/(2*f(x + r)*f(r) - f(x + r) - f(r))";
const LINEAR_IDENTITY: [(&str, i64); 3] = [("f(x + r)", 1), ("f(x)", -1), ("f(r)", -1)];
const SQUARED_IDENTITY: [(&str, i64); 4] = [("f(x + r)", 1), ("f(x - r)", 1), ("f(x)", -2), ("f(r)", -2)];
const EXP_IDENTITY: [(&str, i64); 2] = [("f(x + r)", 1), ("f(x)*f(r)", -1)];
const TAN_IDENTITY: [(&str, i64); 4] = [("f(x + r)*f(x)*f(r)", 1), ("f(x + r)", -1), ("f(x)", 1), ("f(r)", 1)];

const BENCH_SUBSET: [&str; 20] = [
    "linear", "squared", "cube", "inverse", "sqrt", "exp", "2_to_x", "10_to_x", "log", "sin", "cos", "tan", "sinh",
    "cosh", "arcsin", "sigmoid", "relu", "square_loss", "erf", "floor",
];
const BENCH_MUST_VERIFY: [&str; 14] = [
    "linear", "squared", "cube", "exp", "2_to_x", "10_to_x", "sin", "cos", "tan", "sinh", "cosh", "sigmoid", "sqrt",
    "log",
];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn monomial(text: &str) -> Expr {
    canonicalize(&parse(text).expect("monomial parses")).expect("monomial canonicalizes")
}

/// True when the property's coefficients are a nonzero multiple of `expected`
/// on exactly the expected monomials.
fn has_coefficients(p: &Property, expected: &[(&str, i64)]) -> bool {
    let want: BTreeMap<String, i64> = expected.iter().map(|(m, c)| (monomial(m).to_string(), *c)).collect();
    let got: BTreeMap<String, Rational> = p.coefficients.iter().map(|(m, q)| (m.to_string(), *q)).collect();
    if want.len() != got.len() || !want.keys().all(|k| got.contains_key(k)) {
        return false;
    }
    let (k0, c0) = want.iter().next().expect("nonempty");
    let g0 = got[k0];
    want.iter().all(|(k, c)| {
        let g = got[k];
        g.numer() * g0.denom() * *c0 as i128 == g0.numer() * g.denom() * *c as i128
    })
}

fn entry_oracle(name: &str) -> Oracle {
    bench::lookup(name).expect("registered").oracle()
}

struct SeedRun {
    found: Option<Property>,
    seconds: f64,
}

fn run_seeds(oracle: &Oracle, base: &InferConfig, expected: &[(&str, i64)]) -> Vec<SeedRun> {
    SEEDS
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let out = infer(oracle, &InferConfig { seed, ..base.clone() });
            let seconds = start.elapsed().as_secs_f64();
            let found = out.ok().and_then(|o| o.properties.into_iter().find(|p| has_coefficients(p, expected)));
            SeedRun { found, seconds }
        })
        .collect()
}

fn summarize(runs: &[SeedRun]) -> (usize, f64, f64) {
    let hits = runs.iter().filter(|r| r.found.is_some()).count();
    let worst_time = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let worst_residual = runs.iter().filter_map(|r| r.found.as_ref()).map(|p| p.test_residual).fold(0.0, f64::max);
    (hits, worst_time, worst_residual)
}

fn c1_linear() -> Verdict {
    let cfg = InferConfig { max_degree: 1, m: Some(50), ..Default::default() };
    let runs = run_seeds(&entry_oracle("linear"), &cfg, &LINEAR_IDENTITY);
    let (hits, time, residual) = summarize(&runs);
    let exact = runs.iter().filter_map(|r| r.found.as_ref()).all(|p| p.coefficients.iter().all(|(_, q)| q.is_integer()));
    verdict(
        hits == SEEDS.len() && exact && residual < LINEAR_TEST_RESIDUAL && time < LINEAR_SECONDS,
        format!("{hits}/5 seeds, integer coefficients {exact}, max test residual {residual:.1e}, max time {time:.2}s"),
    )
}

fn c2_squared() -> Verdict {
    let cfg = InferConfig { max_degree: 1, ..Default::default() };
    let runs = run_seeds(&entry_oracle("squared"), &cfg, &SQUARED_IDENTITY);
    let (hits, time, _) = summarize(&runs);
    verdict(hits == SEEDS.len() && time < SQUARED_SECONDS, format!("{hits}/5 seeds, max time {time:.2}s"))
}

fn c3_exp() -> Verdict {
    let cfg = InferConfig { max_degree: 2, sample_box: Interval::symmetric(3.0), ..Default::default() };
    let runs = run_seeds(&entry_oracle("exp"), &cfg, &EXP_IDENTITY);
    let (hits, _, residual) = summarize(&runs);
    verdict(
        hits == SEEDS.len() && residual < EXP_TEST_RESIDUAL,
        format!("{hits}/5 seeds, max test residual {residual:.1e}"),
    )
}

fn sigmoid_config(sample_box: Interval) -> InferConfig {
    InferConfig {
        max_degree: 3,
        m: Some(TAYLOR_MAX_SAMPLES),
        queries: SIGMOID_QUERIES.split(',').map(String::from).collect(),
        sample_box,
        ..Default::default()
    }
}

fn c4_sigmoid() -> Verdict {
    let oracle = entry_oracle("sigmoid");
    let cfg = sigmoid_config(Interval::symmetric(10.0));
    let expected = simplify_rational(&parse_relation(SIGMOID_RECOVERY).unwrap().rhs).unwrap();
    let vcfg = VerifyConfig { n_test: 1000, ..Default::default() };
    let mut good = 0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_time: f64 = 0.0;
    let mut recovery_ok = 0;
    for &seed in &SEEDS {
        let start = Instant::now();
        let Ok(out) = infer(&oracle, &InferConfig { seed, ..cfg.clone() }) else { continue };
        let Some(p) = out.properties.iter().find(|p| has_coefficients(p, &SIGMOID_IDENTITY)) else { continue };
        let test = property_test(p, &oracle, &vcfg, seed).expect("property test runs");
        let seconds = start.elapsed().as_secs_f64();
        worst_time = worst_time.max(seconds);
        worst_residual = worst_residual.max(test.mean_abs_residual);
        let same_recovery = p.recovery.as_ref().is_some_and(|r| simplify_rational(&r.expr).unwrap() == expected);
        recovery_ok += same_recovery as usize;
        if same_recovery && test.mean_abs_residual < SIGMOID_PROPERTY_RESIDUAL && seconds < SIGMOID_SECONDS {
            good += 1;
        }
    }
    verdict(
        good >= SIGMOID_MIN_SEEDS,
        format!(
            "{good}/5 seeds (need {SIGMOID_MIN_SEEDS}), recovery matches on {recovery_ok}, max property residual {worst_residual:.1e}, max time {worst_time:.2}s"
        ),
    )
}

fn c5_taylor() -> Verdict {
    let oracle = taylor_program("sigmoid", 30).expect("series registered");
    let runs = run_seeds(&oracle, &sigmoid_config(Interval::symmetric(4.0)), &SIGMOID_IDENTITY);
    let (hits, _, _) = summarize(&runs);
    verdict(hits >= TAYLOR_MIN_SEEDS, format!("{hits}/5 seeds (need {TAYLOR_MIN_SEEDS}) with m = {TAYLOR_MAX_SAMPLES}"))
}

fn c6_tan() -> Verdict {
    let cfg = InferConfig { max_degree: 3, ..Default::default() };
    let runs = run_seeds(&entry_oracle("tan"), &cfg, &TAN_IDENTITY);
    let (hits, _, _) = summarize(&runs);
    verdict(hits >= TAN_MIN_SEEDS, format!("{hits}/5 seeds (need {TAN_MIN_SEEDS})"))
}

/// Closest p/q by scanning every denominator; ties to the smaller q.
fn brute_rational(c: f64, max_den: u64) -> (i128, i128) {
    let mut best = (c.round() as i128, 1i128);
    let mut best_err = (c - c.round()).abs();
    for q in 2..=max_den as i128 {
        let p = (c * q as f64).round() as i128;
        let err = (c - p as f64 / q as f64).abs();
        if err < best_err {
            best = (p, q);
            best_err = err;
        }
    }
    let g = gcd(best.0.abs(), best.1);
    (best.0 / g, best.1 / g)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn c7_rationalize() -> Verdict {
    let mut rng = stream(7, "acceptance-rationalize", 0);
    let targets: Vec<(i128, i128, f64)> = (0..RATIONAL_TARGETS)
        .map(|_| {
            let q = 1 + below(&mut rng, RATIONAL_MAX_DEN) as i128;
            let p = below(&mut rng, 20 * q as u64 + 1) as i128 - 10 * q;
            let noise = uniform(&mut rng, -RATIONAL_NOISE, RATIONAL_NOISE);
            (p, q, p as f64 / q as f64 + noise)
        })
        .collect();
    let start = Instant::now();
    let got: Vec<Option<Rational>> = targets.iter().map(|t| rationalize(t.2, RATIONAL_MAX_DEN).ok()).collect();
    let seconds = start.elapsed().as_secs_f64();
    let mut agree = 0;
    let mut exact = 0;
    for (t, g) in targets.iter().zip(&got) {
        let Some(g) = g else { continue };
        let g = (g.numer(), g.denom());
        let g0 = gcd(t.0.abs(), t.1);
        exact += (g == (t.0 / g0, t.1 / g0)) as usize;
        agree += (g == brute_rational(t.2, RATIONAL_MAX_DEN)) as usize;
    }
    verdict(
        exact == RATIONAL_TARGETS && agree == RATIONAL_TARGETS && seconds < RATIONAL_SECONDS,
        format!("exact {exact}/{RATIONAL_TARGETS}, brute-force agreement {agree}/{RATIONAL_TARGETS}, {seconds:.3}s"),
    )
}

fn identity_text(terms: &[(&str, Rational)]) -> String {
    terms.iter().map(|(m, q)| format!("({q})*({m})")).collect::<Vec<_>>().join(" + ")
}

fn c8_mutants() -> Verdict {
    let cases: [(&str, &[(&str, i64)]); 4] =
        [("sigmoid", &SIGMOID_IDENTITY), ("exp", &EXP_IDENTITY), ("squared", &SQUARED_IDENTITY), ("tan", &TAN_IDENTITY)];
    let delta = Rational::new(MUTATION.0, MUTATION.1).unwrap();
    let mut rejected = 0;
    let mut total = 0;
    let mut baseline_ok = true;
    let mut escaped = Vec::new();
    for (name, identity) in cases {
        let entry = bench::lookup(name).unwrap();
        let cfg = VerifyConfig { sample_box: entry.box_override.unwrap_or(Interval::symmetric(10.0)), ..Default::default() };
        let oracle = entry.oracle();
        let base: Vec<(&str, Rational)> = identity.iter().map(|(m, c)| (*m, Rational::from(*c))).collect();
        let truth = property_from_text(0, &identity_text(&base)).unwrap();
        baseline_ok &= property_test(&truth, &oracle, &cfg, 11).unwrap().passed();
        for k in 0..3 {
            let slot = k % base.len();
            let step = if k < base.len() { delta } else { delta.neg().unwrap() };
            let mut terms = base.clone();
            terms[slot].1 = terms[slot].1.add(&step).unwrap();
            let mutant = property_from_text(0, &identity_text(&terms)).unwrap();
            total += 1;
            let outcome = property_test(&mutant, &oracle, &cfg, 11).unwrap();
            if outcome.passed() {
                escaped.push(format!("{name}#{k}"));
            } else {
                rejected += 1;
            }
        }
    }
    verdict(
        baseline_ok && rejected == 12 && total == 12,
        format!("{rejected}/{total} mutants rejected, unmutated identities pass {baseline_ok}, escaped {escaped:?}"),
    )
}

/// Independent enumeration with the documented preference: lower MSE (ties
/// within a relative 1e-12), then fewer nonzeros, then lexicographically
/// smaller vector.
fn brute_integer(x: &DMatrix<f64>, y: &DVector<f64>, bound: i64, max_active: usize) -> Vec<i64> {
    let p = x.ncols();
    let n = x.nrows() as f64;
    let mut best: Option<(f64, usize, Vec<i64>)> = None;
    let mut c = vec![-bound; p];
    loop {
        let nz = c.iter().filter(|v| **v != 0).count();
        if nz <= max_active {
            let r = y - x * DVector::from_iterator(p, c.iter().map(|&v| v as f64));
            let mse = r.norm_squared() / n;
            let better = match &best {
                None => true,
                Some((bm, bnz, bc)) => {
                    if (mse - bm).abs() > 1e-12 * (1.0 + mse.abs().max(bm.abs())) {
                        mse < *bm
                    } else if nz != *bnz {
                        nz < *bnz
                    } else {
                        c < *bc
                    }
                }
            };
            if better {
                best = Some((mse, nz, c.clone()));
            }
        }
        let mut i = p;
        loop {
            if i == 0 {
                return best.unwrap().2;
            }
            i -= 1;
            if c[i] < bound {
                c[i] += 1;
                break;
            }
            c[i] = -bound;
        }
    }
}

fn c9_integer() -> Verdict {
    let mut rng = stream(9, "acceptance-integer", 0);
    let start = Instant::now();
    let mut agree = 0;
    for _ in 0..INTEGER_INSTANCES {
        let p = 1 + below(&mut rng, INTEGER_MAX_COLUMNS as u64) as usize;
        let rows = p + 2 + below(&mut rng, 12) as usize;
        let bound = 1 + below(&mut rng, INTEGER_MAX_BOUND as u64) as i64;
        let max_active = 1 + below(&mut rng, p as u64) as usize;
        let x = DMatrix::from_fn(rows, p, |_, _| uniform(&mut rng, -2.0, 2.0));
        let planted = DVector::from_fn(p, |_, _| below(&mut rng, 2 * bound as u64 + 1) as f64 - bound as f64);
        let noise = if below(&mut rng, 2) == 0 { 0.0 } else { 0.5 };
        let y = &x * planted + DVector::from_fn(rows, |_, _| uniform(&mut rng, -noise, noise));
        let fit = fit_integer_bounded(&x, &y, bound, max_active).expect("within limits");
        agree += (fit.coefficients == brute_integer(&x, &y, bound, max_active)) as usize;
    }
    let seconds = start.elapsed().as_secs_f64();
    verdict(
        agree == INTEGER_INSTANCES && seconds < INTEGER_SECONDS,
        format!("{agree}/{INTEGER_INSTANCES} instances agree, {seconds:.2}s"),
    )
}

fn fuzzed_identity(rng: &mut impl RngCore) -> String {
    const ATOMS: [&str; 6] = ["f(x)", "f(y)", "f(x + y)", "f(x*y)", "x", "y"];
    let terms = 2 + below(rng, 3);
    (0..terms)
        .map(|_| {
            let c = below(rng, 6) as i64 - 3;
            let c = if c >= 0 { c + 1 } else { c };
            let k = 1 + below(rng, 2);
            let factors: Vec<&str> = (0..k).map(|_| ATOMS[below(rng, ATOMS.len() as u64) as usize]).collect();
            format!("({c})*{}", factors.join("*"))
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn numerically_false(identity: &Expr, cf: &ClosedForm, rng: &mut impl RngCore) -> bool {
    let env = Env::new().with_closed("f", cf.clone());
    (0..8).any(|_| {
        let mut e = env.clone();
        e.set_var("x", uniform(rng, 0.5, 3.0));
        e.set_var("y", uniform(rng, 0.5, 3.0));
        eval(identity, &e).is_ok_and(|v| v.abs() > 1e-3)
    })
}

fn c10_channels() -> Verdict {
    let cfg = VerifyConfig::default();
    let example = parse_relation("f(x) + f(y) - f(x + y) = 0").unwrap().residual().unwrap();
    let ct = ClosedForm::parse(&["t"], "c*t").unwrap();
    let worked = symbolic_verify(&example, &ct, &[Interval::REAL], &cfg, 0).unwrap();
    let worked_ok = worked.passed() && worked.channel == Channel::SymbolicExact;

    let forms = ["3*t", "t^2", "1/t", "(2*t + 1)/(t + 3)", "t/(1 + t^2)"];
    let closed: Vec<ClosedForm> = forms.iter().map(|f| ClosedForm::parse(&["t"], f).unwrap()).collect();
    let mut rng = stream(10, "acceptance-fuzz", 0);
    let (mut tried, mut exact_pass, mut numeric_pass) = (0, 0, 0);
    while tried < FUZZED_IDENTITIES {
        let text = fuzzed_identity(&mut rng);
        let Ok(identity) = canonicalize(&parse(&text).unwrap()) else { continue };
        let cf = &closed[below(&mut rng, closed.len() as u64) as usize];
        if !numerically_false(&identity, cf, &mut rng) {
            continue;
        }
        tried += 1;
        if let Ok(o) = symbolic_verify(&identity, cf, &[Interval::REAL], &cfg, tried as u64) {
            if o.passed() {
                match o.channel {
                    Channel::SymbolicExact => exact_pass += 1,
                    _ => numeric_pass += 1,
                }
            }
        }
    }
    verdict(
        worked_ok && exact_pass == 0 && numeric_pass == 0,
        format!(
            "c*t example {} via {}, {tried} false identities: {exact_pass} exact passes, {numeric_pass} numeric passes",
            if worked.passed() { "passes" } else { "fails" },
            worked.channel
        ),
    )
}

fn c11_bench() -> Verdict {
    let names: Vec<String> = BENCH_SUBSET.iter().map(|s| s.to_string()).collect();
    let entries = bench::select(&bench::registry(), &Selection::Names(names)).unwrap();
    let categories: std::collections::BTreeSet<Category> = entries.iter().map(|e| e.category).collect();
    let start = Instant::now();
    let report = bench::run_bench(&entries, &BenchConfig::default()).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let text = emit_report(&report, ReportFormat::Text, false).unwrap();
    let well_formed = text.lines().skip(1).count() == entries.len()
        && text.lines().skip(1).all(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            f.len() == 6 && f[2] == "/" && f[4] == "|" && [1, 3, 5].iter().all(|&i| f[i].parse::<usize>().is_ok())
        });
    let missing: Vec<&str> = BENCH_MUST_VERIFY
        .iter()
        .copied()
        .filter(|n| report.rows.iter().find(|r| r.name == *n).is_none_or(|r| r.verified == 0))
        .collect();
    verdict(
        seconds < BENCH_SECONDS && well_formed && missing.is_empty() && categories.len() == Category::ALL.len(),
        format!(
            "{} rows in {seconds:.1}s, {}/{} categories, well-formed {well_formed}, unverified required rows {missing:?}",
            report.rows.len(),
            categories.len(),
            Category::ALL.len()
        ),
    )
}

fn cli(args: &[&str]) -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_rsrforge"))
        .args(args)
        .env_remove("RSRFORGE_SEED")
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

fn c12_determinism() -> Verdict {
    let runs: [(&str, &[&str]); 3] = [
        ("infer", &["infer", "--function", "sigmoid", "--degree", "3", "--samples", "100", "--seed", "7"]),
        ("verify", &["verify", "--expr", "f(x+y)-f(x)-f(y)", "--function", "sin", "--seed", "7"]),
        ("bench", &["bench", "--names", "linear,exp,floor", "--repetitions", "2", "--seed", "7", "--format", "json"]),
    ];
    let mut same = Vec::new();
    for (label, args) in runs {
        let a = cli(args);
        let b = cli(args);
        same.push((label, !a.0.is_empty() && a == b));
    }
    verdict(same.iter().all(|s| s.1), format!("byte-identical stdout: {same:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("linear additivity, degree 1, m = 50", c1_linear),
        ("parallelogram law for squared", c2_squared),
        ("exponential addition law on [-3, 3]", c3_exp),
        ("sigmoid implicit identity and recovery", c4_sigmoid),
        ("sigmoid from the 30-term series program", c5_taylor),
        ("tangent addition", c6_tan),
        ("rationalization optimality", c7_rationalize),
        ("mutation rejection", c8_mutants),
        ("integer fit equals enumeration", c9_integer),
        ("symbolic channels", c10_channels),
        ("bench smoke over 20 functions", c11_bench),
        ("deterministic stdout", c12_determinism),
    ];
    // ACCEPTANCE_ONLY=5,11 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| verdict(false, "panicked".to_string()));
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {label}: {} [{:.1}s]", i + 1, v.detail, start.elapsed().as_secs_f64());
        failed += (!v.pass) as usize;
    }
    println!("acceptance: {}/{} criteria pass", ran - failed, ran);
    if failed > 0 {
        std::process::exit(1);
    }
}
