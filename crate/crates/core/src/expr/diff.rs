//! Exact partial differentiation with respect to a jet variable.
//!
//! The result is built structurally and left unsimplified; callers that want
//! compact output run [`simplify`](super::simplify) afterwards. For an
//! abstract function symbol, d/dx introduces the next derivative symbol
//! (`a -> a'`), which keeps families like `f = -a(x)*u` fully symbolic.

use num::{BigRational, One};

use super::{Builtin, Expr, ExprNode, Var};

pub fn diff(e: &Expr, v: Var) -> Expr {
    match e.node() {
        ExprNode::Number(_) | ExprNode::Param(_) => Expr::zero(),
        ExprNode::Jet(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        ExprNode::Func { name, order } => {
            if v == Var::X {
                Expr::func(name.clone(), order + 1)
            } else {
                Expr::zero()
            }
        }
        ExprNode::Neg(a) => -diff(a, v),
        ExprNode::Add(a, b) => diff(a, v) + diff(b, v),
        ExprNode::Sub(a, b) => diff(a, v) - diff(b, v),
        ExprNode::Mul(a, b) => diff(a, v) * b.clone() + a.clone() * diff(b, v),
        ExprNode::Div(a, b) => {
            (diff(a, v) * b.clone() - a.clone() * diff(b, v)) / b.clone().powi(2)
        }
        ExprNode::Pow(base, r) => {
            // d(e^r) = r * e^(r-1) * e'
            Expr::number(r.clone())
                * base.clone().pow_rational(r - BigRational::one())
                * diff(base, v)
        }
        ExprNode::Apply(b, arg) => {
            let d = diff(arg, v);
            match b {
                Builtin::Exp => arg.clone().exp() * d,
                Builtin::Ln => d / arg.clone(),
                Builtin::Sin => arg.clone().cos() * d,
                Builtin::Cos => -(arg.clone().sin()) * d,
            }
        }
    }
}
