use std::fmt::{self, Write};

use super::{split_coefficient, Builtin, Expr, Rational};

// Output always re-parses to the canonical form of the printed expression.

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    let mut s = String::new();
    render(&mut s, e).map_err(|_| fmt::Error)?;
    f.write_str(&s)
}

fn render(out: &mut String, e: &Expr) -> fmt::Result {
    match e {
        Expr::Const(q) => write!(out, "{q}"),
        Expr::Var(s) => out.write_str(s),
        Expr::Func(name, args) => {
            out.write_str(name)?;
            render_args(out, args)
        }
        Expr::Builtin(Builtin::Pi, _) => out.write_str("pi"),
        Expr::Builtin(b, args) => {
            out.write_str(b.name())?;
            render_args(out, args)
        }
        Expr::Sum(terms) => render_sum(out, terms),
        Expr::Product(_) | Expr::Power(..) => {
            let (q, mono) = split_coefficient(e);
            render_term(out, q, &mono)
        }
        Expr::Quotient(n, d) => {
            render_grouped(out, n, false)?;
            out.write_char('/')?;
            render_grouped(out, d, true)
        }
    }
}

fn render_args(out: &mut String, args: &[Expr]) -> fmt::Result {
    out.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        render(out, a)?;
    }
    out.write_char(')')
}

fn render_sum(out: &mut String, terms: &[Expr]) -> fmt::Result {
    // lead with the first positive term so `x - r` does not print as `-r + x`
    let lead = terms
        .iter()
        .position(|t| !split_coefficient(t).0.is_negative())
        .unwrap_or(0);
    let order = std::iter::once(lead).chain((0..terms.len()).filter(|&i| i != lead));
    for (n, i) in order.enumerate() {
        let (q, mono) = split_coefficient(&terms[i]);
        if n == 0 {
            render_term(out, q, &mono)?;
        } else if q.is_negative() {
            out.write_str(" - ")?;
            render_term(out, q.neg().unwrap_or(q), &mono)?;
        } else {
            out.write_str(" + ")?;
            render_term(out, q, &mono)?;
        }
    }
    Ok(())
}

/// Render `q * mono` with negative powers moved into a denominator.
fn render_term(out: &mut String, q: Rational, mono: &Expr) -> fmt::Result {
    if mono.is_one() {
        return write!(out, "{q}");
    }
    let factors: Vec<Expr> = match mono {
        Expr::Product(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for fac in factors {
        match fac {
            Expr::Power(b, k) if k < 0 => den.push(if k == -1 { *b } else { Expr::Power(b, -k) }),
            other => num.push(other),
        }
    }
    let negative = q.is_negative();
    let p = q.numer().unsigned_abs();
    let d = q.denom();
    if negative {
        out.write_char('-')?;
    }
    let mut wrote = false;
    if p != 1 || num.is_empty() {
        write!(out, "{p}")?;
        wrote = true;
    }
    for fac in &num {
        if wrote {
            out.write_char('*')?;
        }
        render_factor(out, fac)?;
        wrote = true;
    }
    if d != 1 || !den.is_empty() {
        out.write_char('/')?;
        let count = den.len() + usize::from(d != 1);
        if count > 1 {
            out.write_char('(')?;
        }
        let mut first = true;
        if d != 1 {
            write!(out, "{d}")?;
            first = false;
        }
        for fac in &den {
            if !first {
                out.write_char('*')?;
            }
            render_factor(out, fac)?;
            first = false;
        }
        if count > 1 {
            out.write_char(')')?;
        }
    }
    Ok(())
}

fn render_factor(out: &mut String, e: &Expr) -> fmt::Result {
    match e {
        Expr::Power(b, k) => {
            render_power_base(out, b)?;
            write!(out, "^{k}")
        }
        Expr::Sum(_) | Expr::Product(_) | Expr::Quotient(..) => {
            out.write_char('(')?;
            render(out, e)?;
            out.write_char(')')
        }
        Expr::Const(q) if q.is_negative() || !q.is_integer() => {
            out.write_char('(')?;
            render(out, e)?;
            out.write_char(')')
        }
        _ => render(out, e),
    }
}

fn render_power_base(out: &mut String, b: &Expr) -> fmt::Result {
    match b {
        Expr::Var(_) | Expr::Func(..) | Expr::Builtin(..) => render(out, b),
        Expr::Const(q) if !q.is_negative() && q.is_integer() => render(out, b),
        _ => {
            out.write_char('(')?;
            render(out, b)?;
            out.write_char(')')
        }
    }
}

fn render_grouped(out: &mut String, e: &Expr, strict: bool) -> fmt::Result {
    let atomic = matches!(e, Expr::Var(_) | Expr::Func(..) | Expr::Builtin(..))
        || matches!(e, Expr::Const(q) if q.is_integer() && !q.is_negative());
    if atomic || (!strict && matches!(e, Expr::Power(..))) {
        render(out, e)
    } else {
        out.write_char('(')?;
        render(out, e)?;
        out.write_char(')')
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{canonicalize, parse};

    fn show(s: &str) -> String {
        canonicalize(&parse(s).unwrap()).unwrap().to_string()
    }

    #[test]
    fn prints_readable_forms() {
        assert_eq!(show("x - r"), "x - r");
        assert_eq!(show("f(x+r) - f(x) - f(r)"), "f(r + x) - f(r) - f(x)");
        assert_eq!(show("-x/2"), "-x/2");
        assert_eq!(show("3*x/(2*y^2)"), "3*x/(2*y^2)");
        assert_eq!(show("1/(1+exp(-x))"), "1/(exp(-x) + 1)");
        assert_eq!(show("x^-2"), "1/x^2");
        assert_eq!(show("x*pi"), "pi*x");
    }
}
