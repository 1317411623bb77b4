//! Expression printing.
//!
//! The printer's contract is exact: feeding its output back through the
//! parser reproduces the tree, node for node, for any tree in canonical form
//! (and for raw trees, up to the parser's two literal folds). Parenthesization
//! is driven by a small precedence lattice; the only delicate cases are
//! negative/rational constants and unary minus, whose grammar slots are
//! narrower than they look.

use std::fmt;

use num::{BigRational, Signed};

use super::{Expr, ExprNode};

/// How tightly a printed form binds, i.e. in which grammar slots it may
/// appear bare.
///
/// 1 = sum, 2 = product, 3 = signed factor, 4 = atom.
fn level(e: &Expr) -> u8 {
    match e.node() {
        // Nonnegative integer literals parse as a base. Negative integers
        // print with a leading minus, which the grammar reads at factor
        // level (so `-1^2` would re-parse as `-(1^2)`). Other rationals
        // print as `n/d`, which re-associates like a product.
        ExprNode::Number(r) => {
            if r.is_integer() {
                if r.is_negative() {
                    3
                } else {
                    4
                }
            } else {
                2
            }
        }
        ExprNode::Jet(_) | ExprNode::Param(_) | ExprNode::Func { .. } | ExprNode::Apply(..) => 4,
        ExprNode::Pow(..) => 3,
        // `-e` is a factor by grammar; it must not sit bare where an atom is
        // required (e.g. as a power base, where `-x^2` would re-parse as
        // `-(x^2)`).
        ExprNode::Neg(_) => 3,
        ExprNode::Mul(..) | ExprNode::Div(..) => 2,
        ExprNode::Add(..) | ExprNode::Sub(..) => 1,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        write!(f, "(")?;
        write_expr(f, e)?;
        return write!(f, ")");
    }
    write_expr(f, e)
}

fn write_exponent(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "^{}", r.numer())
    } else if r.is_negative() {
        write!(f, "^(-{}/{})", r.numer().magnitude(), r.denom())
    } else {
        write!(f, "^({}/{})", r.numer(), r.denom())
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        ExprNode::Number(r) => {
            if r.is_integer() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        ExprNode::Jet(v) => write!(f, "{}", v.name()),
        ExprNode::Param(name) => write!(f, "{name}"),
        ExprNode::Func { name, order } => {
            write!(f, "{name}")?;
            for _ in 0..*order {
                write!(f, "'")?;
            }
            write!(f, "(x)")
        }
        ExprNode::Apply(b, arg) => {
            write!(f, "{}(", b.name())?;
            write_expr(f, arg)?;
            write!(f, ")")
        }
        ExprNode::Neg(inner) => {
            write!(f, "-")?;
            write_at(f, inner, 4)
        }
        ExprNode::Add(a, b) => {
            write_at(f, a, 1)?;
            write!(f, " + ")?;
            write_at(f, b, 2)
        }
        ExprNode::Sub(a, b) => {
            write_at(f, a, 1)?;
            write!(f, " - ")?;
            write_at(f, b, 2)
        }
        ExprNode::Mul(a, b) => {
            write_at(f, a, 2)?;
            write!(f, "*")?;
            write_at(f, b, 3)
        }
        ExprNode::Div(a, b) => {
            write_at(f, a, 2)?;
            write!(f, "/")?;
            write_at(f, b, 3)
        }
        ExprNode::Pow(base, exp) => {
            write_at(f, base, 4)?;
            write_exponent(f, exp)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Context, Expr, Var};

    fn roundtrip(e: &Expr) {
        let ctx = Context::new().with_func("a").with_param("k");
        let printed = e.to_string();
        let back = parse(&printed, &ctx)
            .unwrap_or_else(|err| panic!("`{printed}` failed to re-parse: {err}"));
        assert_eq!(&back, e, "print/parse changed `{printed}`");
    }

    #[test]
    fn structural_round_trips() {
        let x = Expr::x();
        let p = Expr::p();
        let q = Expr::q();
        let cases = vec![
            Expr::int(3) * q.clone().powi(2) / (Expr::int(2) * p.clone()),
            (Expr::int(1) + p.clone().powi(2)).powr(-3, 2),
            Expr::int(-5),
            Expr::ratio(5, 3),
            Expr::ratio(-5, 3) * x.clone(),
            x.clone() * Expr::ratio(5, 3),
            -(p.clone() * q.clone()),
            Expr::p().powi(2) * -Expr::q(),
            Expr::u() - (x.clone() - p.clone()),
            x.clone() / (p.clone() / q.clone()),
            (-p.clone()).powi(2),
            Expr::func("a", 2) * Expr::param("k"),
            (p.clone() + q.clone()).sqrt().exp(),
            Expr::int(2).powr(1, 2),
            Expr::q().powi(-3),
        ];
        for e in &cases {
            roundtrip(e);
        }
    }

    #[test]
    fn prints_divisions_readably() {
        let e = Expr::int(3) * Expr::q().powi(2) / (Expr::int(2) * Expr::p());
        assert_eq!(e.to_string(), "3*q^2/(2*p)");
        assert_eq!(Var::P.to_string(), "p");
    }
}
