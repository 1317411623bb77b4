//! Immutable symbolic expressions over the second-order jet coordinates.
//!
//! An [`Expr`] is a tree over the four jet variables `x`, `u`, `p = u'`,
//! `q = u''`, exact rational constants, declared scalar parameters, and
//! abstract univariate functions of `x` such as `a(x)` together with the
//! derivative symbols (`a'`, `a''`, ...) that differentiation introduces.
//! Trees are reference-counted and never mutated in place, so they are cheap
//! to clone and safe to share across threads.
//!
//! `sqrt(e)` is sugar for `e^(1/2)`: there is no square-root node, only
//! [`ExprNode::Pow`] with an exact rational exponent.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Zero};

mod diff;
mod eval;
mod parse;
mod poly;
mod print;
mod simplify;
mod zero;

pub use diff::diff;
pub use eval::{eval, eval_with_magnitude, Bindings, EvalError, JetPoint};
pub use parse::{parse, ParseError};
pub use simplify::simplify;
pub use zero::{
    is_zero, SampleDomain, Witness, ZeroVerdict, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL,
};

/// One of the four jet coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    U,
    P,
    Q,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::U, Var::P, Var::Q];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
            Var::P => "p",
            Var::Q => "q",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(Var::X),
            "u" => Some(Var::U),
            "p" => Some(Var::P),
            "q" => Some(Var::Q),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in transcendental functions. `sqrt` is absent by design: it parses
/// straight to a rational power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        match s {
            "exp" => Some(Builtin::Exp),
            "ln" => Some(Builtin::Ln),
            "sin" => Some(Builtin::Sin),
            "cos" => Some(Builtin::Cos),
            _ => None,
        }
    }
}

/// Expression node. Exponents are exact rationals, never sub-expressions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExprNode {
    /// Exact rational constant, kept in lowest terms with positive denominator
    /// (an invariant `BigRational` maintains for us).
    Number(BigRational),
    /// One of `x`, `u`, `p`, `q`.
    Jet(Var),
    /// A declared scalar parameter.
    Param(String),
    /// An abstract univariate function of `x`. `order` counts primes:
    /// `order = 2` is `a''(x)`.
    Func { name: String, order: u32 },
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, BigRational),
    Apply(Builtin, Expr),
}

/// Immutable shared expression tree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<ExprNode>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl From<ExprNode> for Expr {
    fn from(node: ExprNode) -> Self {
        Expr(Arc::new(node))
    }
}

pub(crate) fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    pub fn node(&self) -> &ExprNode {
        &self.0
    }

    pub fn number(r: BigRational) -> Expr {
        ExprNode::Number(r).into()
    }

    pub fn int(n: i64) -> Expr {
        Expr::number(big(n))
    }

    /// Exact rational constant `n/d`. Panics if `d == 0`.
    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::number(big_ratio(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn jet(v: Var) -> Expr {
        ExprNode::Jet(v).into()
    }

    pub fn x() -> Expr {
        Expr::jet(Var::X)
    }

    pub fn u() -> Expr {
        Expr::jet(Var::U)
    }

    pub fn p() -> Expr {
        Expr::jet(Var::P)
    }

    pub fn q() -> Expr {
        Expr::jet(Var::Q)
    }

    pub fn param(name: impl Into<String>) -> Expr {
        ExprNode::Param(name.into()).into()
    }

    pub fn func(name: impl Into<String>, order: u32) -> Expr {
        ExprNode::Func { name: name.into(), order }.into()
    }

    pub fn pow_rational(self, e: BigRational) -> Expr {
        ExprNode::Pow(self, e).into()
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow_rational(big(n))
    }

    pub fn powr(self, n: i64, d: i64) -> Expr {
        self.pow_rational(big_ratio(n, d))
    }

    /// `sqrt(e)`, i.e. `e^(1/2)`.
    pub fn sqrt(self) -> Expr {
        self.powr(1, 2)
    }

    pub fn apply(f: Builtin, arg: Expr) -> Expr {
        ExprNode::Apply(f, arg).into()
    }

    pub fn exp(self) -> Expr {
        Expr::apply(Builtin::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::apply(Builtin::Ln, self)
    }

    pub fn sin(self) -> Expr {
        Expr::apply(Builtin::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::apply(Builtin::Cos, self)
    }

    pub fn is_number(&self) -> bool {
        matches!(self.node(), ExprNode::Number(_))
    }

    pub fn as_number(&self) -> Option<&BigRational> {
        match self.node() {
            ExprNode::Number(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), ExprNode::Number(r) if r.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self.node(), ExprNode::Number(r) if r.is_one())
    }

    /// Does the tree mention the jet variable `v` anywhere?
    pub fn contains_jet(&self, v: Var) -> bool {
        match self.node() {
            ExprNode::Number(_) | ExprNode::Param(_) | ExprNode::Func { .. } => false,
            ExprNode::Jet(w) => *w == v,
            ExprNode::Neg(e) | ExprNode::Pow(e, _) | ExprNode::Apply(_, e) => e.contains_jet(v),
            ExprNode::Add(a, b)
            | ExprNode::Sub(a, b)
            | ExprNode::Mul(a, b)
            | ExprNode::Div(a, b) => a.contains_jet(v) || b.contains_jet(v),
        }
    }

    /// Names of all parameters appearing in the tree.
    pub fn free_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |n| {
            if let ExprNode::Param(name) = n {
                out.insert(name.clone());
            }
        });
        out
    }

    /// `(name, order)` pairs of all abstract-function symbols in the tree.
    pub fn free_funcs(&self) -> BTreeSet<(String, u32)> {
        let mut out = BTreeSet::new();
        self.walk(&mut |n| {
            if let ExprNode::Func { name, order } = n {
                out.insert((name.clone(), *order));
            }
        });
        out
    }

    pub(crate) fn walk(&self, f: &mut impl FnMut(&ExprNode)) {
        f(self.node());
        match self.node() {
            ExprNode::Number(_)
            | ExprNode::Jet(_)
            | ExprNode::Param(_)
            | ExprNode::Func { .. } => {}
            ExprNode::Neg(e) | ExprNode::Pow(e, _) | ExprNode::Apply(_, e) => e.walk(f),
            ExprNode::Add(a, b)
            | ExprNode::Sub(a, b)
            | ExprNode::Mul(a, b)
            | ExprNode::Div(a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    /// Replace every occurrence of the jet variable `v` by `r`.
    pub fn subst_jet(&self, v: Var, r: &Expr) -> Expr {
        self.rebuild(&mut |node| match node {
            ExprNode::Jet(w) if *w == v => Some(r.clone()),
            _ => None,
        })
    }

    /// Replace every occurrence of the parameter `name` by `r`.
    pub fn subst_param(&self, name: &str, r: &Expr) -> Expr {
        self.rebuild(&mut |node| match node {
            ExprNode::Param(n) if n == name => Some(r.clone()),
            _ => None,
        })
    }

    /// Bind the abstract function `name` to a closed form `g(x)`: occurrences
    /// of the k-th derivative symbol become the k-th symbolic derivative of
    /// `g`. Used to specialize a family like `f = -a(x)*u` to a concrete
    /// member.
    pub fn bind_func(&self, name: &str, g: &Expr) -> Expr {
        let mut derivs: Vec<Expr> = vec![g.clone()];
        let max_order = self
            .free_funcs()
            .into_iter()
            .filter(|(n, _)| n == name)
            .map(|(_, k)| k)
            .max()
            .unwrap_or(0);
        for _ in 0..max_order {
            let next = diff(derivs.last().unwrap(), Var::X);
            derivs.push(next);
        }
        self.rebuild(&mut |node| match node {
            ExprNode::Func { name: n, order } if n == name => {
                Some(derivs[*order as usize].clone())
            }
            _ => None,
        })
    }

    /// Bottom-up rebuild: `hit` may replace a node wholesale; otherwise the
    /// node is reassembled from rebuilt children (sharing untouched subtrees).
    fn rebuild(&self, hit: &mut impl FnMut(&ExprNode) -> Option<Expr>) -> Expr {
        if let Some(r) = hit(self.node()) {
            return r;
        }
        match self.node() {
            ExprNode::Number(_)
            | ExprNode::Jet(_)
            | ExprNode::Param(_)
            | ExprNode::Func { .. } => self.clone(),
            ExprNode::Neg(e) => ExprNode::Neg(e.rebuild(hit)).into(),
            ExprNode::Pow(e, r) => ExprNode::Pow(e.rebuild(hit), r.clone()).into(),
            ExprNode::Apply(f, e) => ExprNode::Apply(*f, e.rebuild(hit)).into(),
            ExprNode::Add(a, b) => ExprNode::Add(a.rebuild(hit), b.rebuild(hit)).into(),
            ExprNode::Sub(a, b) => ExprNode::Sub(a.rebuild(hit), b.rebuild(hit)).into(),
            ExprNode::Mul(a, b) => ExprNode::Mul(a.rebuild(hit), b.rebuild(hit)).into(),
            ExprNode::Div(a, b) => ExprNode::Div(a.rebuild(hit), b.rebuild(hit)).into(),
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        ExprNode::Add(self, rhs).into()
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        ExprNode::Sub(self, rhs).into()
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        ExprNode::Mul(self, rhs).into()
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        ExprNode::Div(self, rhs).into()
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        ExprNode::Neg(self).into()
    }
}

/// Names that always mean something else and therefore cannot be declared.
pub const RESERVED: [&str; 9] = ["x", "u", "p", "q", "sqrt", "exp", "ln", "sin", "cos"];

/// Declared symbols available to the parser: scalar parameters and abstract
/// univariate functions of `x`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context {
    params: BTreeSet<String>,
    funcs: BTreeSet<String>,
}

/// Error raised when declaring a symbol that can never be valid.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("`{0}` is reserved and cannot be declared")]
    Reserved(String),
    #[error("`{0}` is not a valid symbol name")]
    BadName(String),
    #[error("`{0}` is already declared with a different role")]
    Conflict(String),
}

fn valid_symbol_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    fn check_name(&self, name: &str) -> Result<(), ContextError> {
        if !valid_symbol_name(name) {
            return Err(ContextError::BadName(name.to_string()));
        }
        if RESERVED.contains(&name) {
            return Err(ContextError::Reserved(name.to_string()));
        }
        Ok(())
    }

    pub fn declare_param(&mut self, name: &str) -> Result<(), ContextError> {
        self.check_name(name)?;
        if self.funcs.contains(name) {
            return Err(ContextError::Conflict(name.to_string()));
        }
        self.params.insert(name.to_string());
        Ok(())
    }

    pub fn declare_func(&mut self, name: &str) -> Result<(), ContextError> {
        self.check_name(name)?;
        if self.params.contains(name) {
            return Err(ContextError::Conflict(name.to_string()));
        }
        self.funcs.insert(name.to_string());
        Ok(())
    }

    pub fn with_param(mut self, name: &str) -> Self {
        self.declare_param(name).expect("invalid parameter name");
        self
    }

    pub fn with_func(mut self, name: &str) -> Self {
        self.declare_func(name).expect("invalid function name");
        self
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.contains(name)
    }

    pub fn has_func(&self, name: &str) -> bool {
        self.funcs.contains(name)
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|s| s.as_str())
    }

    pub fn funcs(&self) -> impl Iterator<Item = &str> {
        self.funcs.iter().map(|s| s.as_str())
    }

    /// Does `e` only use symbols declared here (plus the jet variables)?
    pub fn covers(&self, e: &Expr) -> bool {
        e.free_params().iter().all(|p| self.has_param(p))
            && e.free_funcs().iter().all(|(f, _)| self.has_func(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_and_queries() {
        let e = Expr::int(3) * Expr::q().powi(2) / (Expr::int(2) * Expr::p());
        assert!(e.contains_jet(Var::Q));
        assert!(e.contains_jet(Var::P));
        assert!(!e.contains_jet(Var::U));
        assert_eq!(e.free_params().len(), 0);
    }

    #[test]
    fn substitution_replaces_jets() {
        let e = Expr::p() * Expr::q();
        let s = e.subst_jet(Var::Q, &Expr::int(7));
        assert_eq!(s, Expr::p() * Expr::int(7));
    }

    #[test]
    fn bind_func_takes_symbolic_derivatives() {
        // a(x) bound to x^2: a -> x^2, a' -> 2x (after simplification), a'' -> 2.
        let e = Expr::func("a", 1);
        let bound = e.bind_func("a", &Expr::x().powi(2));
        let s = simplify(&bound);
        assert_eq!(s, simplify(&(Expr::int(2) * Expr::x())));
    }

    #[test]
    fn context_rejects_reserved_names() {
        let mut ctx = Context::new();
        assert!(matches!(ctx.declare_param("q"), Err(ContextError::Reserved(_))));
        assert!(matches!(ctx.declare_func("sqrt"), Err(ContextError::Reserved(_))));
        assert!(ctx.declare_func("a").is_ok());
        assert!(matches!(ctx.declare_param("a"), Err(ContextError::Conflict(_))));
    }

    #[test]
    fn numbers_stay_in_lowest_terms() {
        let e = Expr::ratio(6, 4);
        assert_eq!(e.as_number().unwrap(), &big_ratio(3, 2));
    }
}
