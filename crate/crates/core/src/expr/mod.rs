//! Expression trees over exact rationals, variables, built-in elementary
//! functions and uninterpreted function symbols.
//!
//! Everything that flows through the discovery pipeline (query points,
//! monomials, identities, recovery formulas, closed forms) is an [`Expr`].
//! Expressions are immutable values; [`canonicalize`] brings them into a
//! normal form in which structural equality decides equality modulo
//! associativity, commutativity and constant folding.

mod canon;
mod eval;
mod format;
pub mod hp;
mod parse;
mod poly;
mod rational;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use canon::{canonicalize, split_coefficient, term_degree};
pub use eval::{eval, eval_hp, ClosedForm, Env, FunctionBinding, HpOptions, NativeFn};
pub use parse::{parse, parse_relation, Relation};
pub use poly::{simplify_rational, RationalFunction};
pub use rational::Rational;

pub type Symbol = Arc<str>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("arithmetic overflow in exact rational computation")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value")]
    NonFinite,
    #[error("invalid numeric literal `{0}`")]
    InvalidLiteral(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("not a rational expression over atoms: {0}")]
    NonRationalStructure(String),
    #[error("`{0}` has no high-precision implementation")]
    NotHighPrecision(String),
}

/// Built-in elementary functions with known semantics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Pi,
    Sin,
    Cos,
    Tan,
    Cot,
    Sec,
    Csc,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Log2,
    Log10,
    Log1p,
    Sqrt,
    Cbrt,
    Abs,
    Sign,
    Floor,
    Ceil,
    Frac,
    Erf,
    Gamma,
    Arctan,
    Arcsin,
    Arccos,
    Arcsinh,
    Arccosh,
    Arctanh,
    Pow,
    Mod,
    Max,
    Min,
}

impl Builtin {
    pub const ALL: [Builtin; 34] = [
        Builtin::Pi,
        Builtin::Sin,
        Builtin::Cos,
        Builtin::Tan,
        Builtin::Cot,
        Builtin::Sec,
        Builtin::Csc,
        Builtin::Sinh,
        Builtin::Cosh,
        Builtin::Tanh,
        Builtin::Exp,
        Builtin::Log,
        Builtin::Log2,
        Builtin::Log10,
        Builtin::Log1p,
        Builtin::Sqrt,
        Builtin::Cbrt,
        Builtin::Abs,
        Builtin::Sign,
        Builtin::Floor,
        Builtin::Ceil,
        Builtin::Frac,
        Builtin::Erf,
        Builtin::Gamma,
        Builtin::Arctan,
        Builtin::Arcsin,
        Builtin::Arccos,
        Builtin::Arcsinh,
        Builtin::Arccosh,
        Builtin::Arctanh,
        Builtin::Pow,
        Builtin::Mod,
        Builtin::Max,
        Builtin::Min,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Pi => "pi",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Cot => "cot",
            Builtin::Sec => "sec",
            Builtin::Csc => "csc",
            Builtin::Sinh => "sinh",
            Builtin::Cosh => "cosh",
            Builtin::Tanh => "tanh",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Log2 => "log2",
            Builtin::Log10 => "log10",
            Builtin::Log1p => "log1p",
            Builtin::Sqrt => "sqrt",
            Builtin::Cbrt => "cbrt",
            Builtin::Abs => "abs",
            Builtin::Sign => "sign",
            Builtin::Floor => "floor",
            Builtin::Ceil => "ceil",
            Builtin::Frac => "frac",
            Builtin::Erf => "erf",
            Builtin::Gamma => "gamma",
            Builtin::Arctan => "arctan",
            Builtin::Arcsin => "arcsin",
            Builtin::Arccos => "arccos",
            Builtin::Arcsinh => "arcsinh",
            Builtin::Arccosh => "arccosh",
            Builtin::Arctanh => "arctanh",
            Builtin::Pow => "pow",
            Builtin::Mod => "mod",
            Builtin::Max => "max",
            Builtin::Min => "min",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Pi => 0,
            Builtin::Pow | Builtin::Mod | Builtin::Max | Builtin::Min => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        let canonical = match name {
            "ln" => "log",
            "atan" => "arctan",
            "asin" => "arcsin",
            "acos" => "arccos",
            "asinh" => "arcsinh",
            "acosh" => "arccosh",
            "atanh" => "arctanh",
            other => other,
        };
        Builtin::ALL.iter().copied().find(|b| b.name() == canonical)
    }
}

/// Expression node. Children of `Sum` and `Product` are unordered until
/// canonicalized; `Quotient` only appears in non-canonical input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Rational),
    Var(Symbol),
    Func(Symbol, Vec<Expr>),
    Builtin(Builtin, Vec<Expr>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, i64),
    Quotient(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Rational::from(n))
    }

    pub fn constant(q: Rational) -> Expr {
        Expr::Const(q)
    }

    pub fn zero() -> Expr {
        Expr::Const(Rational::ZERO)
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::ONE)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn func(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Func(Arc::from(name), args)
    }

    pub fn builtin(b: Builtin, args: Vec<Expr>) -> Expr {
        Expr::Builtin(b, args)
    }

    pub fn pow(self, k: i64) -> Expr {
        Expr::Power(Box::new(self), k)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(q) if q.is_one())
    }

    pub fn as_const(&self) -> Option<Rational> {
        match self {
            Expr::Const(q) => Some(*q),
            _ => None,
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Expr::Sum(_) => 0,
            Expr::Product(_) => 1,
            Expr::Power(..) => 2,
            Expr::Quotient(..) => 3,
            Expr::Func(..) => 4,
            Expr::Builtin(..) => 5,
            Expr::Var(_) => 6,
            Expr::Const(_) => 7,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Vec::new(),
            Expr::Func(_, args) | Expr::Builtin(_, args) => args.iter().collect(),
            Expr::Sum(cs) | Expr::Product(cs) => cs.iter().collect(),
            Expr::Power(b, _) => vec![b.as_ref()],
            Expr::Quotient(n, d) => vec![n.as_ref(), d.as_ref()],
        }
    }

    /// Free variables in sorted order.
    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Names of uninterpreted function symbols.
    pub fn func_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Func(s, _) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn contains_func(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Func(s, _) = e {
                if s.as_ref() == name {
                    found = true;
                }
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn walk<F: FnMut(&Expr)>(&self, visit: &mut F) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    /// Bottom-up rewrite. The result is not canonicalized.
    pub fn map<F: FnMut(Expr) -> Expr>(&self, f: &mut F) -> Expr {
        let rebuilt = match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Func(s, args) => Expr::Func(s.clone(), args.iter().map(|a| a.map(f)).collect()),
            Expr::Builtin(b, args) => Expr::Builtin(*b, args.iter().map(|a| a.map(f)).collect()),
            Expr::Sum(cs) => Expr::Sum(cs.iter().map(|c| c.map(f)).collect()),
            Expr::Product(cs) => Expr::Product(cs.iter().map(|c| c.map(f)).collect()),
            Expr::Power(b, k) => Expr::Power(Box::new(b.map(f)), *k),
            Expr::Quotient(n, d) => Expr::Quotient(Box::new(n.map(f)), Box::new(d.map(f))),
        };
        f(rebuilt)
    }

    /// Replace free variables according to `bindings`.
    pub fn substitute_vars(&self, bindings: &[(Symbol, Expr)]) -> Expr {
        self.map(&mut |e| match &e {
            Expr::Var(s) => bindings
                .iter()
                .find(|(name, _)| name == s)
                .map(|(_, v)| v.clone())
                .unwrap_or(e),
            _ => e,
        })
    }

    /// Replace every application of function symbol `name` by the closed
    /// form body with its parameters bound to the call arguments.
    pub fn substitute_func(&self, name: &str, closed: &ClosedForm) -> Result<Expr, ExprError> {
        let mut failure = None;
        let out = self.map(&mut |e| match &e {
            Expr::Func(s, args) if s.as_ref() == name => {
                if args.len() != closed.params.len() {
                    failure = Some(ExprError::Arity {
                        name: name.to_string(),
                        expected: closed.params.len(),
                        got: args.len(),
                    });
                    return e;
                }
                let bindings: Vec<(Symbol, Expr)> = closed
                    .params
                    .iter()
                    .cloned()
                    .zip(args.iter().cloned())
                    .collect();
                closed.body.substitute_vars(&bindings)
            }
            _ => e,
        });
        match failure {
            Some(err) => Err(err),
            None => Ok(out),
        }
    }
}

impl Ord for Expr {
    /// Fixed total order: node kind rank, then symbol name, then children
    /// recursively.
    fn cmp(&self, other: &Self) -> Ordering {
        let rank = self.kind_rank().cmp(&other.kind_rank());
        if rank != Ordering::Equal {
            return rank;
        }
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.cmp(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Func(a, xs), Expr::Func(b, ys)) => a.cmp(b).then_with(|| xs.cmp(ys)),
            (Expr::Builtin(a, xs), Expr::Builtin(b, ys)) => a.cmp(b).then_with(|| xs.cmp(ys)),
            (Expr::Sum(xs), Expr::Sum(ys)) | (Expr::Product(xs), Expr::Product(ys)) => xs.cmp(ys),
            (Expr::Power(a, j), Expr::Power(b, k)) => a.cmp(b).then_with(|| j.cmp(k)),
            (Expr::Quotient(a, b), Expr::Quotient(c, d)) => a.cmp(c).then_with(|| b.cmp(d)),
            _ => unreachable!("kind ranks are equal"),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format::write_expr(f, self)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, -rhs])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Quotient(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Product(vec![Expr::Const(Rational::MINUS_ONE), self])
    }
}
