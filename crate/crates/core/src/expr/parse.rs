//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := '-' factor | base ('^' rational)?
//! base     := number | ident | ident '(' expr ')' | '(' expr ')'
//! rational := integer | '-' integer | '(' sint '/' sint ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-p^2` is `-(p^2)`); exponents are
//! rational literals, not expressions.
//!
//! Whitespace is insignificant. Identifiers start with a letter and may
//! contain letters, digits and underscores; trailing primes name derivative
//! symbols of declared abstract functions (`a'`, `a''`), so everything the
//! printer emits parses back. Two purely literal shapes fold at parse time so
//! that exact rational constants round-trip: `-<number>` becomes a negative
//! constant and `<number>/<number>` becomes a single rational.

use num::{pow::Pow, BigInt, BigRational, Zero};

use super::{Builtin, Context, Expr, ExprNode, Var};

/// Parse failure, with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
    Unexpected {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("unclosed parenthesis opened at byte {offset}")]
    UnclosedParen { offset: usize },
    #[error("division by zero in constant at byte {offset}")]
    ZeroDenominator { offset: usize },
    #[error("abstract function `{name}` applies to the variable x only (byte {offset})")]
    BadFunctionArg { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Unexpected { offset, .. }
            | ParseError::UnknownSymbol { offset, .. }
            | ParseError::UnclosedParen { offset }
            | ParseError::ZeroDenominator { offset }
            | ParseError::BadFunctionArg { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(_) => "number".into(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut value = BigRational::from_integer(
                    src[start..i].parse::<BigInt>().expect("digit run"),
                );
                // Optional decimal part, read as an exact rational.
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    let fstart = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let digits = &src[fstart..i];
                    let num = digits.parse::<BigInt>().expect("digit run");
                    let den = BigInt::from(10u32).pow(digits.len());
                    value += BigRational::new(num, den);
                }
                toks.push((Tok::Number(value), start));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                // Trailing primes mark derivative symbols.
                while i < bytes.len() && bytes[i] == b'\'' {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Unexpected {
                    offset: i,
                    expected: vec!["number", "identifier", "operator"],
                    found: format!("`{}`", &src[i..i + 1]),
                })
            }
        }
    }
    toks.push((Tok::Eof, src.len()));
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a Context,
}

/// Parse `src` against the declared symbols in `ctx`.
pub fn parse(src: &str, ctx: &Context) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, ctx };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        t => Err(ParseError::Unexpected {
            offset: p.offset(),
            expected: vec!["`+`", "`-`", "`*`", "`/`", "end of input"],
            found: t.describe(),
        }),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = ExprNode::Add(acc, rhs).into();
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = ExprNode::Sub(acc, rhs).into();
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = ExprNode::Mul(acc, rhs).into();
                }
                Tok::Slash => {
                    let at = self.offset();
                    self.bump();
                    let rhs = self.factor()?;
                    acc = fold_div(acc, rhs, at)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        // Unary minus lives here so that `-p^2` reads as `-(p^2)`, the usual
        // mathematical convention; a negative base needs explicit parens.
        if matches!(self.peek(), Tok::Minus) {
            self.bump();
            let inner = self.factor()?;
            return Ok(fold_neg(inner));
        }
        let base = self.base()?;
        if matches!(self.peek(), Tok::Caret) {
            self.bump();
            let exp = self.rational_exponent()?;
            return Ok(ExprNode::Pow(base, exp).into());
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Number(r) => Ok(Expr::number(r)),
            Tok::LParen => {
                // Running off the end of the input while inside the group is
                // reported as the unclosed paren itself, pointing at the `(`.
                let inner = self.expr().map_err(|e| match e {
                    ParseError::Unexpected { found, .. } if found == Tok::Eof.describe() => {
                        ParseError::UnclosedParen { offset: at }
                    }
                    other => other,
                })?;
                match self.bump() {
                    Tok::RParen => Ok(inner),
                    Tok::Eof => Err(ParseError::UnclosedParen { offset: at }),
                    t => Err(ParseError::Unexpected {
                        offset: self.toks[self.pos - 1].1,
                        expected: vec!["`)`"],
                        found: t.describe(),
                    }),
                }
            }
            Tok::Ident(name) => self.ident(name, at),
            t => Err(ParseError::Unexpected {
                offset: at,
                expected: vec!["number", "identifier", "`(`", "`-`"],
                found: t.describe(),
            }),
        }
    }

    fn ident(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        if let Some(v) = Var::from_name(&name) {
            return Ok(Expr::jet(v));
        }
        if name == "sqrt" {
            let arg = self.call_argument(&name, at)?;
            return Ok(arg.sqrt());
        }
        if let Some(b) = Builtin::from_name(&name) {
            let arg = self.call_argument(&name, at)?;
            return Ok(Expr::apply(b, arg));
        }
        let primes = name.chars().rev().take_while(|&c| c == '\'').count();
        let stem = &name[..name.len() - primes];
        if self.ctx.has_func(stem) {
            // Abstract functions must be applied, and only to x.
            let arg_at = self.offset();
            let arg = self.call_argument(&name, at)?;
            if arg != Expr::x() {
                return Err(ParseError::BadFunctionArg {
                    name: name.clone(),
                    offset: arg_at,
                });
            }
            return Ok(Expr::func(stem, primes as u32));
        }
        if primes == 0 && self.ctx.has_param(&name) {
            return Ok(Expr::param(name));
        }
        Err(ParseError::UnknownSymbol { name, offset: at })
    }

    fn call_argument(&mut self, name: &str, at: usize) -> Result<Expr, ParseError> {
        match self.bump() {
            Tok::LParen => {}
            t => {
                return Err(ParseError::Unexpected {
                    offset: self.toks[self.pos - 1].1,
                    expected: vec!["`(`"],
                    found: if matches!(t, Tok::Eof) {
                        format!("end of input after `{name}`")
                    } else {
                        t.describe()
                    },
                })
            }
        }
        let open = self.toks[self.pos - 1].1;
        let _ = at;
        let arg = self.expr()?;
        match self.bump() {
            Tok::RParen => Ok(arg),
            Tok::Eof => Err(ParseError::UnclosedParen { offset: open }),
            t => Err(ParseError::Unexpected {
                offset: self.toks[self.pos - 1].1,
                expected: vec!["`)`"],
                found: t.describe(),
            }),
        }
    }

    /// `rational := integer | '(' integer '/' integer ')'`, where integers may
    /// carry a leading minus.
    fn rational_exponent(&mut self) -> Result<BigRational, ParseError> {
        match self.bump() {
            Tok::Number(r) => self.expect_integer(r),
            Tok::Minus => match self.bump() {
                Tok::Number(r) => Ok(-self.expect_integer(r)?),
                t => Err(ParseError::Unexpected {
                    offset: self.toks[self.pos - 1].1,
                    expected: vec!["integer"],
                    found: t.describe(),
                }),
            },
            Tok::LParen => {
                let open = self.toks[self.pos - 1].1;
                let num = self.signed_integer()?;
                match self.bump() {
                    Tok::Slash => {}
                    t => {
                        return Err(ParseError::Unexpected {
                            offset: self.toks[self.pos - 1].1,
                            expected: vec!["`/`"],
                            found: t.describe(),
                        })
                    }
                }
                let den = self.signed_integer()?;
                if den.is_zero() {
                    return Err(ParseError::ZeroDenominator { offset: open });
                }
                match self.bump() {
                    Tok::RParen => Ok(BigRational::new(num, den)),
                    Tok::Eof => Err(ParseError::UnclosedParen { offset: open }),
                    t => Err(ParseError::Unexpected {
                        offset: self.toks[self.pos - 1].1,
                        expected: vec!["`)`"],
                        found: t.describe(),
                    }),
                }
            }
            t => Err(ParseError::Unexpected {
                offset: self.toks[self.pos - 1].1,
                expected: vec!["integer", "`(`"],
                found: t.describe(),
            }),
        }
    }

    fn signed_integer(&mut self) -> Result<BigInt, ParseError> {
        let neg = if matches!(self.peek(), Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Number(r) => {
                let n = self.expect_integer(r)?.to_integer();
                Ok(if neg { -n } else { n })
            }
            t => Err(ParseError::Unexpected {
                offset: self.toks[self.pos - 1].1,
                expected: vec!["integer"],
                found: t.describe(),
            }),
        }
    }

    fn expect_integer(&self, r: BigRational) -> Result<BigRational, ParseError> {
        if r.is_integer() {
            Ok(r)
        } else {
            Err(ParseError::Unexpected {
                offset: self.toks[self.pos - 1].1,
                expected: vec!["integer"],
                found: "decimal number".into(),
            })
        }
    }
}

/// `-<number>` folds into the constant so negative rationals survive a
/// print/parse round trip.
fn fold_neg(e: Expr) -> Expr {
    match e.node() {
        ExprNode::Number(r) => Expr::number(-r.clone()),
        _ => ExprNode::Neg(e).into(),
    }
}

/// `<number>/<number>` folds into a single constant in lowest terms.
fn fold_div(a: Expr, b: Expr, at: usize) -> Result<Expr, ParseError> {
    if let (ExprNode::Number(x), ExprNode::Number(y)) = (a.node(), b.node()) {
        if y.is_zero() {
            return Err(ParseError::ZeroDenominator { offset: at });
        }
        return Ok(Expr::number(x / y));
    }
    Ok(ExprNode::Div(a, b).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::big_ratio;

    fn ctx() -> Context {
        Context::new().with_func("a").with_param("k")
    }

    #[test]
    fn division_keeps_grammar_shape() {
        // term-level `/` is left-associative, so the top node divides the
        // product 3*q^2 by the product 2*p.
        let e = parse("3*q^2/(2*p)", &ctx()).unwrap();
        let num = Expr::int(3) * Expr::q().powi(2);
        let den = Expr::int(2) * Expr::p();
        assert_eq!(e, num / den);
    }

    #[test]
    fn sqrt_is_a_half_power() {
        let e = parse("sqrt(1+p^2)", &ctx()).unwrap();
        assert_eq!(e, (Expr::int(1) + Expr::p().powi(2)).sqrt());
    }

    #[test]
    fn unclosed_paren_reports_opening_offset() {
        let err = parse("2*(", &ctx()).unwrap_err();
        assert_eq!(err, ParseError::UnclosedParen { offset: 2 });
        assert_eq!(err.offset(), 2);
    }

    #[test]
    fn unknown_symbols_are_rejected() {
        let err = parse("2*b", &ctx()).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownSymbol { name: "b".into(), offset: 2 }
        );
    }

    #[test]
    fn declared_symbols_resolve() {
        let e = parse("k*a(x) + a''(x)", &ctx()).unwrap();
        assert_eq!(
            e,
            Expr::param("k") * Expr::func("a", 0) + Expr::func("a", 2)
        );
    }

    #[test]
    fn abstract_functions_take_x_only() {
        let err = parse("a(u)", &ctx()).unwrap_err();
        assert!(matches!(err, ParseError::BadFunctionArg { .. }));
    }

    #[test]
    fn rational_exponents() {
        assert_eq!(
            parse("p^(1/2)", &ctx()).unwrap(),
            Expr::p().pow_rational(big_ratio(1, 2))
        );
        assert_eq!(
            parse("(1+p^2)^(-3/2)", &ctx()).unwrap(),
            (Expr::int(1) + Expr::p().powi(2)).pow_rational(big_ratio(-3, 2))
        );
        assert_eq!(parse("q^-3", &ctx()).unwrap(), Expr::q().powi(-3));
        // A parenthesized bare integer is not a rational exponent.
        assert!(parse("p^(2)", &ctx()).is_err());
    }

    #[test]
    fn literal_folds() {
        assert_eq!(parse("-5", &ctx()).unwrap(), Expr::int(-5));
        assert_eq!(parse("5/3", &ctx()).unwrap(), Expr::ratio(5, 3));
        assert_eq!(parse("0.1", &ctx()).unwrap(), Expr::ratio(1, 10));
        assert!(matches!(
            parse("1/0", &ctx()),
            Err(ParseError::ZeroDenominator { .. })
        ));
        // Folding stays literal-only: q/3 keeps its division node.
        let e = parse("q/3", &ctx()).unwrap();
        assert_eq!(e, Expr::q() / Expr::int(3));
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        let err = parse("x )", &ctx()).unwrap_err();
        assert!(matches!(err, ParseError::Unexpected { offset: 2, .. }));
    }

    #[test]
    fn mixed_chain_is_left_associative() {
        let e = parse("-3*p*q/(p+sqrt(1+p^2))*(1+p^2)^(-3/2)", &ctx()).unwrap();
        let s = (Expr::int(1) + Expr::p().powi(2)).sqrt();
        let expected = Expr::int(-3) * Expr::p() * Expr::q() / (Expr::p() + s)
            * (Expr::int(1) + Expr::p().powi(2)).pow_rational(big_ratio(-3, 2));
        assert_eq!(e, expected);
    }
}
