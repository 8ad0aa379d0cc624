//! Statistical and symbolic checks of candidate identities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::discovery::{normalized_residual, terms_of, Property, Status, FUNCTION_SYMBOL};
use crate::error::{Error, Result};
use crate::expr::{eval, eval_hp, simplify_rational, ClosedForm, Env, Expr, HpOptions, Symbol};
use crate::rng;
use crate::sampling::{draw_point, oracle_env, Interval, Oracle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub n_test: usize,
    pub epsilon: f64,
    pub hp_points: usize,
    pub hp_precision_bits: u32,
    /// Numeric symbolic checks pass below `2^-hp_tolerance_exponent`.
    pub hp_tolerance_exponent: i64,
    #[serde(rename = "box")]
    pub sample_box: Interval,
    pub max_retries: usize,
    /// Distance kept from domain endpoints and poles at high precision.
    pub guard: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_test: 1000,
            epsilon: 1e-3,
            hp_points: 64,
            hp_precision_bits: 256,
            hp_tolerance_exponent: 100,
            sample_box: Interval::symmetric(10.0),
            max_retries: 100,
            guard: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PropertyTest,
    SymbolicExact,
    SymbolicNumeric,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::PropertyTest => "property_test",
            Channel::SymbolicExact => "symbolic_exact",
            Channel::SymbolicNumeric => "symbolic_numeric",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub status: VerifyStatus,
    pub channel: Channel,
    pub mean_abs_residual: f64,
    pub max_abs_residual: f64,
    pub reason: String,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.status == VerifyStatus::Pass
    }

    fn pass(channel: Channel, mean: f64, max: f64) -> Self {
        VerifyOutcome { status: VerifyStatus::Pass, channel, mean_abs_residual: mean, max_abs_residual: max, reason: String::new() }
    }

    fn fail(channel: Channel, mean: f64, max: f64, reason: String) -> Self {
        debug_assert!(!reason.is_empty());
        VerifyOutcome { status: VerifyStatus::Fail, channel, mean_abs_residual: mean, max_abs_residual: max, reason }
    }
}

fn function_arity(e: &Expr) -> Option<usize> {
    let mut n = None;
    e.walk(&mut |x| {
        if let Expr::Func(name, args) = x {
            if name.as_ref() == FUNCTION_SYMBOL {
                n.get_or_insert(args.len());
            }
        }
    });
    n
}

fn format_point(vars: &BTreeMap<Symbol, f64>) -> String {
    vars.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// Statistical test of an identity against the oracle on fresh draws. Each
/// row's residual is divided by `max(1, max |monomial|)`; the test passes when
/// the mean is at most ε and the maximum at most 10ε.
pub fn property_test(p: &Property, oracle: &Oracle, cfg: &VerifyConfig, seed: u64) -> Result<VerifyOutcome> {
    property_test_expr(&p.identity, p.id as u64, oracle, cfg, seed)
}

pub fn property_test_expr(
    identity: &Expr,
    stream_index: u64,
    oracle: &Oracle,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<VerifyOutcome> {
    let arity = function_arity(identity).unwrap_or(oracle.arity);
    if arity != oracle.arity {
        return Err(Error::InvalidQuery(format!(
            "identity applies f to {arity} argument(s) but `{}` takes {}",
            oracle.name, oracle.arity
        )));
    }
    let terms = terms_of(identity);
    let coefs: Vec<f64> = terms.iter().map(|(_, q)| q.to_f64()).collect();
    let region = oracle.region(&cfg.sample_box)?;
    let probe = oracle_env(oracle, FUNCTION_SYMBOL, &draw_point(&mut rng::stream(0, "probe", 0), &region));
    let extra: Vec<Symbol> = identity
        .free_vars()
        .into_iter()
        .filter(|v| !probe.vars.contains_key(v))
        .collect();
    let mut rng = rng::stream(seed, "property_test", stream_index);
    let (mut sum, mut max) = (0.0f64, 0.0f64);
    let mut values = vec![0.0; terms.len()];
    let mut accepted = 0;
    let mut failures = 0;
    let mut worst = String::new();
    while accepted < cfg.n_test {
        let draw = draw_point(&mut rng, &region);
        let mut env = oracle_env(oracle, FUNCTION_SYMBOL, &draw);
        for v in &extra {
            env.vars.insert(v.clone(), rng::uniform(&mut rng, cfg.sample_box.lo, cfg.sample_box.hi));
        }
        let ok = terms.iter().zip(values.iter_mut()).try_for_each(|((m, _), slot)| {
            *slot = eval(m, &env)?;
            Ok::<(), crate::expr::ExprError>(())
        });
        if let Err(e) = ok {
            failures += 1;
            if failures >= cfg.max_retries {
                return Err(Error::SamplingExhausted { retries: failures, last: e.to_string() });
            }
            continue;
        }
        failures = 0;
        accepted += 1;
        let res = normalized_residual(&coefs, &values).abs();
        sum += res;
        if res > max || worst.is_empty() {
            max = max.max(res);
            let pt: BTreeMap<Symbol, f64> = env.vars.clone().into_iter().collect();
            worst = format_point(&pt);
        }
    }
    let mean = sum / cfg.n_test.max(1) as f64;
    if mean <= cfg.epsilon && max <= 10.0 * cfg.epsilon {
        Ok(VerifyOutcome::pass(Channel::PropertyTest, mean, max))
    } else {
        Ok(VerifyOutcome::fail(
            Channel::PropertyTest,
            mean,
            max,
            format!(
                "normalized residual mean {mean:e} (bound {:e}), max {max:e} (bound {:e}); worst at {worst}",
                cfg.epsilon,
                10.0 * cfg.epsilon
            ),
        ))
    }
}

/// Arguments of every `f` application must sit inside the domain, at least
/// `guard` away from finite endpoints.
fn arguments_in_domain(identity: &Expr, env: &Env, domain: &[Interval], guard: f64) -> bool {
    let mut ok = true;
    identity.walk(&mut |e| {
        if !ok {
            return;
        }
        if let Expr::Func(name, args) = e {
            if name.as_ref() != FUNCTION_SYMBOL {
                return;
            }
            for (a, d) in args.iter().zip(domain) {
                match eval(a, env) {
                    Ok(v) => {
                        let lo_ok = !d.lo.is_finite() || v >= d.lo + guard;
                        let hi_ok = !d.hi.is_finite() || v <= d.hi - guard;
                        ok &= lo_ok && hi_ok;
                    }
                    Err(_) => ok = false,
                }
            }
        }
    });
    ok
}

/// Substitute the closed form for `f` and check the result vanishes: first by
/// exact rational simplification, otherwise at random points in high
/// precision.
pub fn symbolic_verify(
    identity: &Expr,
    closed: &ClosedForm,
    domain: &[Interval],
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<VerifyOutcome> {
    let substituted = identity.substitute_func(FUNCTION_SYMBOL, closed)?;
    if let Ok(simplified) = simplify_rational(&substituted) {
        if simplified.is_zero() {
            return Ok(VerifyOutcome::pass(Channel::SymbolicExact, 0.0, 0.0));
        }
    }
    let vars: Vec<Symbol> = substituted.free_vars().into_iter().collect();
    let mut rng = rng::stream(seed, "symbolic_verify", 0);
    let opts = HpOptions { pole_guard: Some(cfg.guard) };
    let threshold = -cfg.hp_tolerance_exponent;
    let (mut sum, mut max) = (0.0f64, 0.0f64);
    for _ in 0..cfg.hp_points {
        let mut failures = 0;
        let (value, env) = loop {
            let mut env = Env::new();
            for v in &vars {
                env.vars.insert(v.clone(), rng::uniform(&mut rng, cfg.sample_box.lo, cfg.sample_box.hi));
            }
            let attempt = if arguments_in_domain(identity, &env, domain, cfg.guard) {
                eval_hp(&substituted, &env, cfg.hp_precision_bits, opts)
            } else {
                Err(crate::expr::ExprError::Domain("argument outside the domain".into()))
            };
            match attempt {
                Ok(v) => break (v, env),
                Err(e) => {
                    failures += 1;
                    if failures >= cfg.max_retries {
                        return Err(Error::SamplingExhausted { retries: failures, last: e.to_string() });
                    }
                }
            }
        };
        let abs = value.to_f64().abs();
        sum += abs;
        max = max.max(abs);
        if value.magnitude() > threshold {
            let pt: BTreeMap<Symbol, f64> = env.vars.into_iter().collect();
            return Ok(VerifyOutcome::fail(
                Channel::SymbolicNumeric,
                sum,
                max,
                format!(
                    "residual {:e} exceeds 2^-{} at {}",
                    value.to_f64(),
                    cfg.hp_tolerance_exponent,
                    format_point(&pt)
                ),
            ));
        }
    }
    Ok(VerifyOutcome::pass(Channel::SymbolicNumeric, sum / cfg.hp_points.max(1) as f64, max))
}

/// Assign a status: symbolic verification when a closed form is known,
/// property testing otherwise. A closed form that refutes the identity leaves
/// it unverified.
pub fn classify(
    p: &Property,
    oracle: &Oracle,
    closed_form: Option<&ClosedForm>,
    cfg: &VerifyConfig,
    seed: u64,
) -> (Property, Vec<VerifyOutcome>) {
    let mut out = p.clone();
    let mut outcomes = Vec::new();
    let stream_seed = rng::derive_seed(seed, "classify", p.id as u64);
    if let Some(cf) = closed_form {
        match symbolic_verify(&p.identity, cf, &oracle.domain, cfg, stream_seed) {
            Ok(o) => {
                let pass = o.passed();
                outcomes.push(o);
                out.status = if pass { Status::VerifiedSymbolic } else { Status::Unverified };
                return (out, outcomes);
            }
            Err(e) => log::debug!("symbolic check of property {} skipped: {e}", p.id),
        }
    }
    out.status = match property_test(p, oracle, cfg, stream_seed) {
        Ok(o) => {
            let pass = o.passed();
            outcomes.push(o);
            if pass {
                Status::VerifiedNumeric
            } else {
                Status::Unverified
            }
        }
        Err(e) => {
            outcomes.push(VerifyOutcome::fail(Channel::PropertyTest, f64::NAN, f64::NAN, e.to_string()));
            Status::Unverified
        }
    };
    (out, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::property_from_text;
    use crate::expr::parse;

    fn oracle(name: &str, body: &str) -> Oracle {
        Oracle::from_closed_form(name, ClosedForm::parse(&["t"], body).unwrap(), vec![Interval::REAL])
    }

    fn small() -> VerifyConfig {
        VerifyConfig { n_test: 300, hp_points: 16, ..Default::default() }
    }

    #[test]
    fn exp_law_passes_on_exp() {
        let p = property_from_text(0, "f(x+r) - f(x)*f(r)").unwrap();
        let o = oracle("exp", "exp(t)");
        let out = property_test(&p, &o, &VerifyConfig { sample_box: Interval::symmetric(3.0), ..small() }, 1).unwrap();
        assert!(out.passed());
        assert!(out.mean_abs_residual < 1e-12);
        let sin = oracle("sin", "sin(t)");
        assert!(!property_test(&p, &sin, &small(), 1).unwrap().passed());
    }

    #[test]
    fn additive_law_with_symbolic_slope() {
        let e = parse("f(x) + f(y) - f(x+y)").unwrap();
        let out = symbolic_verify(&e, &ClosedForm::parse(&["t"], "c*t").unwrap(), &[Interval::REAL], &small(), 0).unwrap();
        assert!(out.passed());
        assert_eq!(out.channel, Channel::SymbolicExact);
    }

    #[test]
    fn additive_law_fails_for_sine() {
        let e = parse("f(x+y) - f(x) - f(y)").unwrap();
        let out = symbolic_verify(&e, &ClosedForm::parse(&["t"], "sin(t)").unwrap(), &[Interval::REAL], &small(), 0).unwrap();
        assert!(!out.passed());
        assert!(!out.reason.is_empty());
        // the advertised witness
        let env = Env::new().with_var("x", std::f64::consts::FRAC_PI_2).with_var("y", std::f64::consts::FRAC_PI_2);
        let sub = e.substitute_func("f", &ClosedForm::parse(&["t"], "sin(t)").unwrap()).unwrap();
        assert!((eval(&sub, &env).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_additivity_passes_numerically() {
        let e = parse("f(x*r) - f(x) - f(r)").unwrap();
        let dom = [Interval::new(0.0, f64::INFINITY)];
        let out = symbolic_verify(&e, &ClosedForm::parse(&["t"], "log(t)").unwrap(), &dom, &small(), 0).unwrap();
        assert!(out.passed(), "{}", out.reason);
        assert_eq!(out.channel, Channel::SymbolicNumeric);
        assert!(out.max_abs_residual < 2f64.powi(-200));
    }

    #[test]
    fn classify_paths() {
        let p = property_from_text(0, "f(x+r) - f(x) - f(r)").unwrap();
        let lin = ClosedForm::parse(&["t"], "3*t").unwrap();
        let o = Oracle::from_closed_form("linear", lin.clone(), vec![Interval::REAL]);
        assert_eq!(classify(&p, &o, Some(&lin), &small(), 0).0.status, Status::VerifiedSymbolic);
        assert_eq!(classify(&p, &o, None, &small(), 0).0.status, Status::VerifiedNumeric);
        let sq = oracle("squared", "t^2");
        assert_eq!(classify(&p, &sq, None, &small(), 0).0.status, Status::Unverified);
    }

    #[test]
    fn sigmoid_mutant_fails() {
        let o = oracle("sigmoid", "1/(1+exp(-t))");
        let good = property_from_text(0, "2*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)").unwrap();
        assert!(property_test(&good, &o, &small(), 3).unwrap().passed());
        let bad = property_from_text(0, "201/100*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)").unwrap();
        assert!(!property_test(&bad, &o, &small(), 3).unwrap().passed());
    }

    #[test]
    fn monotone_in_epsilon() {
        let o = oracle("sigmoid", "1/(1+exp(-t))");
        let bad = property_from_text(0, "201/100*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)").unwrap();
        let base = property_test(&bad, &o, &small(), 3).unwrap();
        let mut passed = false;
        for eps in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let cfg = VerifyConfig { epsilon: eps, ..small() };
            let out = property_test(&bad, &o, &cfg, 3).unwrap();
            assert_eq!(out.mean_abs_residual, base.mean_abs_residual);
            assert!(out.passed() || !passed);
            passed = out.passed();
        }
        assert!(passed);
    }
}
