//! Numeric evaluation at a jet-space point.
//!
//! Evaluation carries a running *magnitude estimate* alongside the value: an
//! absolute-value walk of the same arithmetic. The estimate is what the zero
//! test calibrates its tolerance against, so that an expression whose value
//! is 1e-12 after summing 1e+4-sized terms is recognized as a cancellation
//! rather than reported as a genuine nonzero.

use std::collections::BTreeMap;

use num::ToPrimitive;

use super::{diff, Builtin, Expr, ExprNode, Var};

/// A point of the second-order jet space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetPoint {
    pub x: f64,
    pub u: f64,
    pub p: f64,
    pub q: f64,
}

impl JetPoint {
    pub fn new(x: f64, u: f64, p: f64, q: f64) -> JetPoint {
        JetPoint { x, u, p, q }
    }

    pub fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::U => self.u,
            Var::P => self.p,
            Var::Q => self.q,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite() && self.p.is_finite() && self.q.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("non-finite intermediate result")]
    NonFinite,
}

/// Values for parameters and abstract functions.
///
/// A function symbol can be bound either to a closed form in `x` (derivative
/// symbols are then produced by symbolic differentiation of the closed form)
/// or, for sampling, directly to per-(name, order) values.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    values: BTreeMap<String, f64>,
    funcs: BTreeMap<String, Expr>,
    func_values: BTreeMap<(String, u32), f64>,
}

impl Bindings {
    pub fn none() -> Bindings {
        Bindings::default()
    }

    pub fn with_value(mut self, name: &str, v: f64) -> Bindings {
        self.values.insert(name.to_string(), v);
        self
    }

    /// Bind an abstract function to a closed form in `x`.
    pub fn with_func(mut self, name: &str, g: Expr) -> Bindings {
        self.funcs.insert(name.to_string(), g);
        self
    }

    pub(crate) fn set_func_value(&mut self, name: &str, order: u32, v: f64) {
        self.func_values.insert((name.to_string(), order), v);
    }

    pub(crate) fn set_value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    fn param(&self, name: &str) -> Result<f64, EvalError> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::UnboundSymbol(name.to_string()))
    }

    fn func(&self, name: &str, order: u32, x: f64) -> Result<(f64, f64), EvalError> {
        if let Some(v) = self.func_values.get(&(name.to_string(), order)) {
            return Ok((*v, v.abs()));
        }
        let Some(g) = self.funcs.get(name) else {
            let mut label = name.to_string();
            for _ in 0..order {
                label.push('\'');
            }
            return Err(EvalError::UnboundSymbol(label));
        };
        if g.contains_jet(Var::U) || g.contains_jet(Var::P) || g.contains_jet(Var::Q) {
            return Err(EvalError::DomainViolation(format!(
                "function binding for `{name}` must depend on x only"
            )));
        }
        let mut d = g.clone();
        for _ in 0..order {
            d = diff(&d, Var::X);
        }
        walk(&d, &JetPoint::new(x, 0.0, 0.0, 0.0), self)
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn rational_pow(base: f64, exp: &num::BigRational) -> Result<f64, EvalError> {
    if exp.is_integer() {
        let n = exp
            .to_integer()
            .to_i32()
            .ok_or_else(|| EvalError::DomainViolation("exponent too large".into()))?;
        if base == 0.0 && n < 0 {
            return Err(EvalError::DomainViolation("zero base with negative exponent".into()));
        }
        return finite(base.powi(n));
    }
    let e = exp
        .to_f64()
        .ok_or_else(|| EvalError::DomainViolation("exponent too large".into()))?;
    if base < 0.0 {
        return Err(EvalError::DomainViolation(
            "negative base with fractional exponent".into(),
        ));
    }
    if base == 0.0 && e < 0.0 {
        return Err(EvalError::DomainViolation("zero base with negative exponent".into()));
    }
    finite(base.powf(e))
}

/// Core recursion: returns `(value, magnitude)`.
fn walk(e: &Expr, pt: &JetPoint, b: &Bindings) -> Result<(f64, f64), EvalError> {
    match e.node() {
        ExprNode::Number(r) => {
            let v = r.to_f64().ok_or(EvalError::NonFinite)?;
            Ok((v, v.abs()))
        }
        ExprNode::Jet(v) => {
            let val = pt.get(*v);
            Ok((val, val.abs()))
        }
        ExprNode::Param(name) => {
            let v = b.param(name)?;
            Ok((v, v.abs()))
        }
        ExprNode::Func { name, order } => b.func(name, *order, pt.x),
        ExprNode::Neg(a) => {
            let (v, m) = walk(a, pt, b)?;
            Ok((-v, m))
        }
        ExprNode::Add(a, c) => {
            let (va, ma) = walk(a, pt, b)?;
            let (vc, mc) = walk(c, pt, b)?;
            Ok((finite(va + vc)?, ma + mc))
        }
        ExprNode::Sub(a, c) => {
            let (va, ma) = walk(a, pt, b)?;
            let (vc, mc) = walk(c, pt, b)?;
            Ok((finite(va - vc)?, ma + mc))
        }
        ExprNode::Mul(a, c) => {
            let (va, ma) = walk(a, pt, b)?;
            let (vc, mc) = walk(c, pt, b)?;
            Ok((finite(va * vc)?, ma * mc))
        }
        ExprNode::Div(a, c) => {
            let (va, ma) = walk(a, pt, b)?;
            let (vc, _) = walk(c, pt, b)?;
            if vc == 0.0 {
                return Err(EvalError::DomainViolation("division by zero".into()));
            }
            Ok((finite(va / vc)?, ma / vc.abs()))
        }
        ExprNode::Pow(base, r) => {
            let (vb, mb) = walk(base, pt, b)?;
            let v = rational_pow(vb, r)?;
            let rf = r.to_f64().unwrap_or(f64::MAX);
            let m = if mb == 0.0 { 0.0 } else { mb.powf(rf).min(1e300) };
            Ok((v, m))
        }
        ExprNode::Apply(f, arg) => {
            let (va, _) = walk(arg, pt, b)?;
            match f {
                Builtin::Exp => {
                    let v = finite(va.exp())?;
                    Ok((v, va.abs().min(700.0).exp()))
                }
                Builtin::Ln => {
                    if va <= 0.0 {
                        return Err(EvalError::DomainViolation(
                            "logarithm of a non-positive value".into(),
                        ));
                    }
                    let v = finite(va.ln())?;
                    Ok((v, v.abs().max(1.0)))
                }
                Builtin::Sin => Ok((va.sin(), 1.0)),
                Builtin::Cos => Ok((va.cos(), 1.0)),
            }
        }
    }
}

/// Evaluate `e` at `pt` under `bindings`.
pub fn eval(e: &Expr, pt: &JetPoint, bindings: &Bindings) -> Result<f64, EvalError> {
    walk(e, pt, bindings).map(|(v, _)| v)
}

/// Evaluate and also report the magnitude estimate used for tolerance
/// calibration.
pub fn eval_with_magnitude(
    e: &Expr,
    pt: &JetPoint,
    bindings: &Bindings,
) -> Result<(f64, f64), EvalError> {
    walk(e, pt, bindings)
}
