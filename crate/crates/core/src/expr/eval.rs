use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::hp::{self, BigFloat};
use super::{parse, Builtin, Expr, ExprError, Symbol};

pub type NativeFn = Arc<dyn Fn(&[f64]) -> Result<f64, ExprError> + Send + Sync>;

/// A function given by an expression in its parameters, e.g. `t -> 1/(1+exp(-t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedForm {
    pub params: Vec<Symbol>,
    pub body: Expr,
}

impl ClosedForm {
    pub fn new(params: &[&str], body: Expr) -> Self {
        ClosedForm {
            params: params.iter().map(|p| Symbol::from(*p)).collect(),
            body,
        }
    }

    pub fn parse(params: &[&str], text: &str) -> Result<Self, ExprError> {
        Ok(ClosedForm::new(params, parse(text)?))
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Double-precision value at `args`.
    pub fn eval(&self, args: &[f64]) -> Result<f64, ExprError> {
        if args.len() != self.params.len() {
            return Err(ExprError::Arity {
                name: "closed form".into(),
                expected: self.params.len(),
                got: args.len(),
            });
        }
        let scope: Vec<(Symbol, f64)> = self.params.iter().cloned().zip(args.iter().copied()).collect();
        eval_scoped(&self.body, &Env::default(), &scope)
    }
}

#[derive(Clone)]
pub enum FunctionBinding {
    Native { arity: usize, f: NativeFn },
    Closed(ClosedForm),
}

impl FunctionBinding {
    pub fn arity(&self) -> usize {
        match self {
            FunctionBinding::Native { arity, .. } => *arity,
            FunctionBinding::Closed(c) => c.arity(),
        }
    }
}

impl fmt::Debug for FunctionBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionBinding::Native { arity, .. } => write!(f, "Native(arity={arity})"),
            FunctionBinding::Closed(c) => write!(f, "Closed({:?} -> {})", c.params, c.body),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Env {
    pub vars: HashMap<Symbol, f64>,
    pub funcs: HashMap<Symbol, FunctionBinding>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn with_var(mut self, name: &str, v: f64) -> Self {
        self.set_var(name, v);
        self
    }

    pub fn set_var(&mut self, name: &str, v: f64) {
        self.vars.insert(Symbol::from(name), v);
    }

    pub fn with_closed(mut self, name: &str, c: ClosedForm) -> Self {
        self.funcs.insert(Symbol::from(name), FunctionBinding::Closed(c));
        self
    }

    pub fn with_native(mut self, name: &str, arity: usize, f: NativeFn) -> Self {
        self.funcs
            .insert(Symbol::from(name), FunctionBinding::Native { arity, f });
        self
    }
}

const POLE_EPS: f64 = 1e-12;

fn domain(msg: &str) -> ExprError {
    ExprError::Domain(msg.to_string())
}

fn finite(v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::NonFinite)
    }
}

/// Double-precision value of a builtin.
pub(crate) fn builtin_f64(b: Builtin, a: &[f64]) -> Result<f64, ExprError> {
    let x = a.first().copied().unwrap_or(0.0);
    let v = match b {
        Builtin::Pi => std::f64::consts::PI,
        Builtin::Sin => x.sin(),
        Builtin::Cos => x.cos(),
        Builtin::Tan => {
            if x.cos().abs() < POLE_EPS {
                return Err(domain("pole of tan"));
            }
            x.tan()
        }
        Builtin::Sec => {
            let c = x.cos();
            if c.abs() < POLE_EPS {
                return Err(domain("pole of sec"));
            }
            1.0 / c
        }
        Builtin::Cot | Builtin::Csc => {
            let s = x.sin();
            if s.abs() < POLE_EPS {
                return Err(domain("pole of cot/csc"));
            }
            if b == Builtin::Cot {
                x.cos() / s
            } else {
                1.0 / s
            }
        }
        Builtin::Sinh => x.sinh(),
        Builtin::Cosh => x.cosh(),
        Builtin::Tanh => x.tanh(),
        Builtin::Exp => x.exp(),
        Builtin::Log | Builtin::Log2 | Builtin::Log10 => {
            if x <= 0.0 {
                return Err(domain("log of a nonpositive number"));
            }
            match b {
                Builtin::Log => x.ln(),
                Builtin::Log2 => x.log2(),
                _ => x.log10(),
            }
        }
        Builtin::Log1p => {
            if x <= -1.0 {
                return Err(domain("log1p at or below -1"));
            }
            x.ln_1p()
        }
        Builtin::Sqrt => {
            if x < 0.0 {
                return Err(domain("sqrt of a negative number"));
            }
            x.sqrt()
        }
        Builtin::Cbrt => x.cbrt(),
        Builtin::Abs => x.abs(),
        Builtin::Sign => {
            if x == 0.0 {
                0.0
            } else {
                x.signum()
            }
        }
        Builtin::Floor => x.floor(),
        Builtin::Ceil => x.ceil(),
        Builtin::Frac => x - x.floor(),
        Builtin::Erf => libm::erf(x),
        Builtin::Gamma => {
            if x <= 0.0 && x == x.round() {
                return Err(domain("pole of gamma"));
            }
            libm::tgamma(x)
        }
        Builtin::Arctan => x.atan(),
        Builtin::Arcsin | Builtin::Arccos => {
            if x.abs() > 1.0 {
                return Err(domain("inverse sine/cosine outside [-1, 1]"));
            }
            if b == Builtin::Arcsin {
                x.asin()
            } else {
                x.acos()
            }
        }
        Builtin::Arcsinh => x.asinh(),
        Builtin::Arccosh => {
            if x < 1.0 {
                return Err(domain("arccosh below 1"));
            }
            x.acosh()
        }
        Builtin::Arctanh => {
            if x.abs() >= 1.0 {
                return Err(domain("arctanh outside (-1, 1)"));
            }
            x.atanh()
        }
        Builtin::Pow => {
            let y = a[1];
            if x < 0.0 && y != y.round() {
                return Err(domain("non-integer power of a negative number"));
            }
            if x == 0.0 && y < 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            x.powf(y)
        }
        Builtin::Mod => {
            let y = a[1];
            if y == 0.0 {
                return Err(domain("mod by zero"));
            }
            x % y
        }
        Builtin::Max => x.max(a[1]),
        Builtin::Min => x.min(a[1]),
    };
    finite(v)
}

/// Evaluate in double precision. Errors instead of producing NaN or infinity.
pub fn eval(e: &Expr, env: &Env) -> Result<f64, ExprError> {
    eval_scoped(e, env, &[])
}

fn lookup_var(name: &Symbol, env: &Env, locals: &[(Symbol, f64)]) -> Result<f64, ExprError> {
    locals
        .iter()
        .rev()
        .find(|(s, _)| s == name)
        .map(|(_, v)| *v)
        .or_else(|| env.vars.get(name).copied())
        .ok_or_else(|| ExprError::UnboundSymbol(name.to_string()))
}

fn eval_scoped(e: &Expr, env: &Env, locals: &[(Symbol, f64)]) -> Result<f64, ExprError> {
    let v = match e {
        Expr::Const(q) => q.to_f64(),
        Expr::Var(s) => lookup_var(s, env, locals)?,
        Expr::Func(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval_scoped(a, env, locals))
                .collect::<Result<Vec<_>, _>>()?;
            let binding = env
                .funcs
                .get(name)
                .ok_or_else(|| ExprError::UnboundSymbol(name.to_string()))?;
            if binding.arity() != vals.len() {
                return Err(ExprError::Arity {
                    name: name.to_string(),
                    expected: binding.arity(),
                    got: vals.len(),
                });
            }
            match binding {
                FunctionBinding::Native { f, .. } => f(&vals)?,
                FunctionBinding::Closed(c) => {
                    let scope: Vec<(Symbol, f64)> =
                        c.params.iter().cloned().zip(vals).collect();
                    eval_scoped(&c.body, env, &scope)?
                }
            }
        }
        Expr::Builtin(b, args) => {
            let vals = args
                .iter()
                .map(|a| eval_scoped(a, env, locals))
                .collect::<Result<Vec<_>, _>>()?;
            builtin_f64(*b, &vals)?
        }
        Expr::Sum(cs) => {
            let mut acc = 0.0;
            for c in cs {
                acc += eval_scoped(c, env, locals)?;
            }
            acc
        }
        Expr::Product(cs) => {
            let mut acc = 1.0;
            for c in cs {
                acc *= eval_scoped(c, env, locals)?;
            }
            acc
        }
        Expr::Power(b, k) => {
            let base = eval_scoped(b, env, locals)?;
            if base == 0.0 && *k < 0 {
                return Err(ExprError::DivisionByZero);
            }
            base.powi((*k).clamp(i32::MIN as i64, i32::MAX as i64) as i32)
        }
        Expr::Quotient(n, d) => {
            let den = eval_scoped(d, env, locals)?;
            if den == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            eval_scoped(n, env, locals)? / den
        }
    };
    finite(v)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HpOptions {
    /// Reject points closer than this to a pole (denominators, tan, gamma, log).
    pub pole_guard: Option<f64>,
}

/// Evaluate at `prec` bits. Function symbols must be bound to closed forms;
/// variable values are taken exactly from their doubles.
pub fn eval_hp(e: &Expr, env: &Env, prec: u32, opts: HpOptions) -> Result<BigFloat, ExprError> {
    if !(hp::MIN_PRECISION..=hp::MAX_PRECISION).contains(&prec) {
        return Err(ExprError::Domain(format!(
            "precision {prec} outside [{}, {}]",
            hp::MIN_PRECISION,
            hp::MAX_PRECISION
        )));
    }
    eval_hp_scoped(e, env, &[], prec, opts)
}

fn guard_denominator(den: &BigFloat, opts: HpOptions) -> Result<(), ExprError> {
    if den.is_zero() {
        return Err(ExprError::DivisionByZero);
    }
    if let Some(g) = opts.pole_guard {
        if den.to_f64().abs() < g {
            return Err(ExprError::Domain("too close to a zero denominator".into()));
        }
    }
    Ok(())
}

fn eval_hp_scoped(
    e: &Expr,
    env: &Env,
    locals: &[(Symbol, BigFloat)],
    prec: u32,
    opts: HpOptions,
) -> Result<BigFloat, ExprError> {
    let eval_args = |args: &[Expr]| -> Result<Vec<BigFloat>, ExprError> {
        args.iter()
            .map(|a| eval_hp_scoped(a, env, locals, prec, opts))
            .collect()
    };
    match e {
        Expr::Const(q) => Ok(BigFloat::from_rational(*q, prec)),
        Expr::Var(s) => {
            if let Some((_, v)) = locals.iter().rev().find(|(n, _)| n == s) {
                return Ok(v.clone());
            }
            let v = env
                .vars
                .get(s)
                .ok_or_else(|| ExprError::UnboundSymbol(s.to_string()))?;
            BigFloat::from_f64(*v)
        }
        Expr::Func(name, args) => {
            let vals = eval_args(args)?;
            match env.funcs.get(name) {
                None => Err(ExprError::UnboundSymbol(name.to_string())),
                Some(FunctionBinding::Native { .. }) => {
                    Err(ExprError::NotHighPrecision(name.to_string()))
                }
                Some(FunctionBinding::Closed(c)) => {
                    if c.arity() != vals.len() {
                        return Err(ExprError::Arity {
                            name: name.to_string(),
                            expected: c.arity(),
                            got: vals.len(),
                        });
                    }
                    let scope: Vec<(Symbol, BigFloat)> =
                        c.params.iter().cloned().zip(vals).collect();
                    eval_hp_scoped(&c.body, env, &scope, prec, opts)
                }
            }
        }
        Expr::Builtin(b, args) => {
            let vals = eval_args(args)?;
            hp::builtin(*b, &vals, prec, opts.pole_guard)
        }
        Expr::Sum(cs) => {
            let mut acc = BigFloat::zero();
            for c in cs {
                acc = acc.add(&eval_hp_scoped(c, env, locals, prec, opts)?, prec);
            }
            Ok(acc)
        }
        Expr::Product(cs) => {
            let mut acc = BigFloat::one();
            for c in cs {
                acc = acc.mul(&eval_hp_scoped(c, env, locals, prec, opts)?, prec);
            }
            Ok(acc)
        }
        Expr::Power(b, k) => {
            let base = eval_hp_scoped(b, env, locals, prec, opts)?;
            if *k < 0 {
                guard_denominator(&base, opts)?;
            }
            hp::powi(&base, *k, prec)
        }
        Expr::Quotient(n, d) => {
            let den = eval_hp_scoped(d, env, locals, prec, opts)?;
            guard_denominator(&den, opts)?;
            eval_hp_scoped(n, env, locals, prec, opts)?.div(&den, prec)
        }
    }
}
