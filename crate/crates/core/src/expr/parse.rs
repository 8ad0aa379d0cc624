//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! relation := "Eq" "(" expr "," expr ")" | expr [ "=" expr ]
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := ("-" | "+") unary | power
//! power    := primary [ "^" unary ]
//! primary  := number | ident | ident "(" [expr ("," expr)*] ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus and is right associative. Integer
//! exponents produce `Power` nodes, anything else the `pow` builtin.

use super::{canonicalize, Builtin, Expr, ExprError, Rational};

/// An equation `lhs = rhs`; bare expressions parse with `rhs = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Relation {
    /// Canonical `lhs - rhs`.
    pub fn residual(&self) -> Result<Expr, ExprError> {
        canonicalize(&(self.lhs.clone() - self.rhs.clone()))
    }

    pub fn rhs_is_zero(&self) -> bool {
        self.rhs.is_zero()
    }
}

/// Parse a single expression into its canonical form.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected `{c}`")));
    }
    canonicalize(&e)
}

/// Parse `Eq(lhs, rhs)`, `lhs = rhs` or a bare expression.
pub fn parse_relation(text: &str) -> Result<Relation, ExprError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let save = p.pos;
    if p.eat_ident() == Some("Eq".to_string()) {
        p.skip_ws();
        if p.eat('(') {
            let lhs = p.expr()?;
            p.expect(',')?;
            let rhs = p.expr()?;
            p.expect(')')?;
            p.skip_ws();
            if let Some(c) = p.peek() {
                return Err(p.error(format!("unexpected `{c}` after Eq(...)")));
            }
            return Ok(Relation {
                lhs: canonicalize(&lhs)?,
                rhs: canonicalize(&rhs)?,
            });
        }
    }
    p.pos = save;
    let lhs = p.expr()?;
    p.skip_ws();
    let rhs = if p.eat('=') {
        p.expr()?
    } else {
        Expr::zero()
    };
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected `{c}`")));
    }
    Ok(Relation {
        lhs: canonicalize(&lhs)?,
        rhs: canonicalize(&rhs)?,
    })
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, msg: String) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map(|f| format!("`{f}`"))
                .unwrap_or_else(|| "end of input".into());
            Err(self.error(format!("expected `{c}`, found {found}")))
        }
    }

    fn eat_ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_alphabetic() || *b == b'_' => {}
            _ => return None,
        }
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Some(self.src[start..self.pos].to_string())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        // -a*b negates the whole term
        if self.eat('-') {
            return Ok(-self.term()?);
        }
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.eat('/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = canonicalize(&self.unary()?)?;
        match exponent {
            Expr::Const(q) if q.is_integer() => {
                let k = i64::try_from(q.numer()).map_err(|_| ExprError::Syntax {
                    pos: at,
                    msg: "exponent out of range".into(),
                })?;
                Ok(base.pow(k))
            }
            other => Ok(Expr::Builtin(Builtin::Pow, vec![base, other])),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let lit = &self.src[start..self.pos];
        lit.parse::<Rational>()
            .map(Expr::Const)
            .map_err(|e| ExprError::Syntax {
                pos: start,
                msg: e.to_string(),
            })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let name = self.eat_ident().unwrap_or_default();
                self.skip_ws();
                if self.peek() == Some('(') {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(',') {
                                continue;
                            }
                            self.expect(')')?;
                            break;
                        }
                    }
                    if name == "Eq" {
                        return Err(ExprError::Syntax {
                            pos: start,
                            msg: "Eq(...) is only allowed at the top level".into(),
                        });
                    }
                    match Builtin::from_name(&name) {
                        Some(b) if b.arity() != args.len() => Err(ExprError::Arity {
                            name,
                            expected: b.arity(),
                            got: args.len(),
                        }),
                        Some(b) => Ok(Expr::Builtin(b, args)),
                        None => Ok(Expr::Func(name.into(), args)),
                    }
                } else if name == "pi" {
                    Ok(Expr::Builtin(Builtin::Pi, Vec::new()))
                } else {
                    Ok(Expr::Var(name.into()))
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{split_coefficient, term_degree};

    #[test]
    fn round_trips_rsr_expression() {
        let e = parse("f(x+r) - f(x)*f(r)").unwrap();
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn eq_wrapper_has_zero_rhs() {
        let rel = parse_relation("Eq(f(x) + f(y) - f(x+y), 0)").unwrap();
        assert!(rel.rhs_is_zero());
        assert_eq!(rel.lhs, parse("f(x) + f(y) - f(x+y)").unwrap());
    }

    #[test]
    fn degree_three_monomial_is_recognized() {
        let e = parse("2*f(x)*f(x+r)*f(r) - f(x)*f(x+r)").unwrap();
        let Expr::Sum(ts) = e else { panic!("expected a sum") };
        let max = ts
            .iter()
            .map(|t| term_degree(&split_coefficient(t).1))
            .max()
            .unwrap();
        assert_eq!(max, 3);
    }

    #[test]
    fn caret_binds_tighter_than_unary_minus() {
        assert_eq!(parse("-x^2").unwrap(), parse("-(x^2)").unwrap());
        assert_eq!(parse("2^-1").unwrap(), parse("1/2").unwrap());
        assert_eq!(parse("2^3^2").unwrap(), parse("512").unwrap());
    }

    #[test]
    fn non_integer_exponent_becomes_pow() {
        let e = parse("x^(1/2)").unwrap();
        assert!(matches!(e, Expr::Builtin(Builtin::Pow, _)));
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse(" f ( x + r )*2 ").unwrap(), parse("2*f(x+r)").unwrap());
    }

    #[test]
    fn reports_position() {
        match parse("f(x + )") {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("sin(x, y)"), Err(ExprError::Arity { .. })));
        assert!(matches!(parse("x + 1 )"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn relation_with_equals_sign() {
        let rel = parse_relation("f(x) = f(x+r) - f(r)").unwrap();
        assert_eq!(
            rel.residual().unwrap(),
            parse("f(x) - f(x+r) + f(r)").unwrap()
        );
    }
}
