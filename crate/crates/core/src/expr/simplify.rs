//! Bounded, confluent simplification.
//!
//! The rewrite set: exact constant folding, like-term collection in sums,
//! factor collection into a single fraction in products, `e^0 -> 1` /
//! `e^1 -> e`, distribution of integer powers over products, expansion of
//! integer powers of sums up to exponent 8, and distribution of products over
//! sum factors raised to small positive integer powers. Distribution is what
//! lets radical cancellations like `sqrt(p) * (a - b/sqrt(p))` resolve to a
//! rational form instead of hiding behind a parenthesis. Denominators are
//! never expanded and every expansion respects a hard term-count cap, so a
//! pass can canonicalize but not explode. Semantic questions (is this thing
//! zero?) are deliberately left to the zero test: simplification only has to
//! be sound and deterministic, not complete.
//!
//! Each pass is bottom-up; `simplify` iterates passes to a fixed point with a
//! small cap. Canonical order of terms/factors is the structural `Ord` on
//! expressions, which keeps every rebuild deterministic.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, ToPrimitive, Zero};

use super::{Builtin, Expr, ExprNode};

/// Power-of-a-sum expansion is attempted only for exponents in `2..=8` and
/// only while the expanded term count stays below this bound.
const MAX_EXPANDED_TERMS: usize = 2000;

pub fn simplify(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..8 {
        let next = pass(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
    cur
}

fn pass(e: &Expr) -> Expr {
    match e.node() {
        ExprNode::Number(_)
        | ExprNode::Jet(_)
        | ExprNode::Param(_)
        | ExprNode::Func { .. } => e.clone(),
        ExprNode::Apply(f, a) => fold_apply(*f, pass(a)),
        ExprNode::Pow(b, r) => fold_pow(pass(b), r.clone()),
        ExprNode::Neg(a) => {
            let inner = pass(a);
            collect_sum(&(ExprNode::Neg(inner).into()))
        }
        ExprNode::Add(a, b) => {
            let node: Expr = ExprNode::Add(pass(a), pass(b)).into();
            collect_sum(&node)
        }
        ExprNode::Sub(a, b) => {
            let node: Expr = ExprNode::Sub(pass(a), pass(b)).into();
            collect_sum(&node)
        }
        ExprNode::Mul(a, b) => {
            let node: Expr = ExprNode::Mul(pass(a), pass(b)).into();
            collect_product_node(&node)
        }
        ExprNode::Div(a, b) => {
            let node: Expr = ExprNode::Div(pass(a), pass(b)).into();
            collect_product_node(&node)
        }
    }
}

fn fold_apply(f: Builtin, a: Expr) -> Expr {
    match (f, a.node()) {
        (Builtin::Exp, ExprNode::Number(r)) if r.is_zero() => Expr::one(),
        (Builtin::Ln, ExprNode::Number(r)) if r.is_one() => Expr::zero(),
        (Builtin::Sin, ExprNode::Number(r)) if r.is_zero() => Expr::zero(),
        (Builtin::Cos, ExprNode::Number(r)) if r.is_zero() => Expr::one(),
        _ => Expr::apply(f, a),
    }
}

fn rat_pow(c: &BigRational, n: i64) -> Option<BigRational> {
    let m = n.unsigned_abs() as usize;
    let p = num::pow::pow(c.clone(), m);
    if n >= 0 {
        Some(p)
    } else if p.is_zero() {
        None
    } else {
        Some(p.recip())
    }
}

fn fold_pow(base: Expr, r: BigRational) -> Expr {
    if r.is_zero() {
        return Expr::one();
    }
    if r.is_one() {
        return base;
    }
    let int_exp = if r.is_integer() { r.to_integer().to_i64() } else { None };
    match base.node() {
        ExprNode::Number(c) => {
            if let Some(n) = int_exp {
                if let Some(v) = rat_pow(c, n) {
                    return Expr::number(v);
                }
                // 0^negative: leave visible, evaluation reports the domain
                // violation.
                return base.clone().pow_rational(r);
            }
            if c.is_zero() && r.is_positive() {
                return Expr::zero();
            }
            if c.is_one() {
                return Expr::one();
            }
            base.clone().pow_rational(r)
        }
        // (e^s)^n = e^(s*n) holds for any integer n.
        ExprNode::Pow(b2, r2) if int_exp.is_some() => fold_pow(b2.clone(), r2 * &r),
        ExprNode::Mul(a, b) if int_exp.is_some() => {
            let lhs = fold_pow(a.clone(), r.clone());
            let rhs = fold_pow(b.clone(), r);
            collect_product_node(&ExprNode::Mul(lhs, rhs).into())
        }
        ExprNode::Div(a, b) => match int_exp {
            Some(n) if n > 0 => {
                let lhs = fold_pow(a.clone(), r.clone());
                let rhs = fold_pow(b.clone(), r);
                collect_product_node(&ExprNode::Div(lhs, rhs).into())
            }
            Some(n) if n < 0 => {
                let m = BigRational::from_integer((-n).into());
                let lhs = fold_pow(b.clone(), m.clone());
                let rhs = fold_pow(a.clone(), m);
                collect_product_node(&ExprNode::Div(lhs, rhs).into())
            }
            _ => base.clone().pow_rational(r),
        },
        ExprNode::Neg(a) if int_exp.is_some() => {
            let n = int_exp.unwrap();
            let inner = fold_pow(a.clone(), r);
            if n % 2 == 0 {
                inner
            } else {
                collect_sum(&(ExprNode::Neg(inner).into()))
            }
        }
        ExprNode::Add(..) | ExprNode::Sub(..) => match int_exp {
            Some(n) if (2..=8).contains(&n) => expand_sum_power(&base, n as u32),
            Some(n) if (-8..=-2).contains(&n) => {
                let expanded = expand_sum_power(&base, (-n) as u32);
                ExprNode::Div(Expr::one(), expanded).into()
            }
            _ => base.pow_rational(r),
        },
        _ => base.pow_rational(r),
    }
}

/// A product decomposed as `coeff * prod(base^exp)`. The map never contains
/// `Number` bases with integer exponents (those fold into the coefficient) or
/// zero exponents.
type Factors = BTreeMap<Expr, BigRational>;

/// `None` means the collection hit a literal zero denominator; the caller
/// keeps the original tree so the defect stays visible.
fn flatten_product(
    e: &Expr,
    mult: &BigRational,
    coeff: &mut BigRational,
    out: &mut Factors,
) -> Option<()> {
    match e.node() {
        ExprNode::Mul(a, b) => {
            flatten_product(a, mult, coeff, out)?;
            flatten_product(b, mult, coeff, out)
        }
        ExprNode::Div(a, b) => {
            flatten_product(a, mult, coeff, out)?;
            let neg = -mult.clone();
            flatten_product(b, &neg, coeff, out)
        }
        ExprNode::Neg(a) => {
            *coeff = -coeff.clone();
            flatten_product(a, mult, coeff, out)
        }
        ExprNode::Number(c) => {
            // mult is +-1 here: numbers under a fractional power stay inside
            // their Pow node and never reach this arm.
            if mult.is_one() {
                *coeff *= c;
                Some(())
            } else {
                if c.is_zero() {
                    return None;
                }
                *coeff /= c;
                Some(())
            }
        }
        ExprNode::Pow(b, r) => {
            add_factor(out, b.clone(), r * mult);
            Some(())
        }
        _ => {
            add_factor(out, e.clone(), mult.clone());
            Some(())
        }
    }
}

fn add_factor(out: &mut Factors, base: Expr, exp: BigRational) {
    let entry = out.entry(base).or_insert_with(BigRational::zero);
    *entry += exp;
    if entry.is_zero() {
        let key = out
            .iter()
            .find(|(_, v)| v.is_zero())
            .map(|(k, _)| k.clone())
            .expect("zero entry present");
        out.remove(&key);
    }
}

fn collect_product_parts(e: &Expr) -> Option<(BigRational, Factors)> {
    let mut coeff = BigRational::one();
    let mut out = Factors::new();
    flatten_product(e, &BigRational::one(), &mut coeff, &mut out)?;
    Some((coeff, out))
}

fn collect_product_node(e: &Expr) -> Expr {
    match collect_product_parts(e) {
        Some((coeff, factors)) => match distribute(&coeff, &factors) {
            Some(terms) => rebuild_sum(&terms),
            None => rebuild_product(&coeff, &factors),
        },
        None => e.clone(),
    }
}

/// Multiply a product out over its sum factors that carry small positive
/// integer exponents. Returns `None` when there is nothing to distribute or
/// the expansion would outgrow [`MAX_EXPANDED_TERMS`] (the factored form is
/// then kept). Sum factors under negative or fractional exponents stay
/// intact: denominators are never expanded.
fn distribute(coeff: &BigRational, factors: &Factors) -> Option<Terms> {
    let mut kept = Factors::new();
    let mut sums: Vec<(Terms, u32)> = Vec::new();
    for (base, exp) in factors {
        let expandable = matches!(base.node(), ExprNode::Add(..) | ExprNode::Sub(..))
            && exp.is_integer()
            && exp.is_positive()
            && exp.to_integer().to_i64().is_some_and(|n| n <= 8);
        if expandable {
            let mut tmap = Terms::new();
            flatten_sum(base, &BigRational::one(), &mut tmap);
            tmap.retain(|_, c| !c.is_zero());
            sums.push((tmap, exp.to_integer().to_i64().unwrap() as u32));
        } else {
            kept.insert(base.clone(), exp.clone());
        }
    }
    if sums.is_empty() {
        return None;
    }
    let mut acc = Terms::new();
    acc.insert(kept, coeff.clone());
    for (tmap, n) in &sums {
        for _ in 0..*n {
            acc = mul_term_maps(&acc, tmap)?;
        }
    }
    Some(acc)
}

fn mul_term_maps(a: &Terms, b: &Terms) -> Option<Terms> {
    let mut out = Terms::new();
    for (f1, c1) in a {
        for (f2, c2) in b {
            let mut merged = f1.clone();
            for (base, exp) in f2 {
                add_factor(&mut merged, base.clone(), exp.clone());
            }
            add_term(&mut out, merged, c1 * c2);
            if out.len() > MAX_EXPANDED_TERMS {
                return None;
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    Some(out)
}

fn powered(base: &Expr, exp: &BigRational) -> Expr {
    if exp.is_one() {
        base.clone()
    } else {
        base.clone().pow_rational(exp.clone())
    }
}

fn chain(mut items: impl Iterator<Item = Expr>) -> Option<Expr> {
    let first = items.next()?;
    Some(items.fold(first, |acc, e| ExprNode::Mul(acc, e).into()))
}

/// Canonical product form: optional `Neg` around `num` or `num/den`, each
/// side a left-associated chain led by its constant when that constant
/// carries information.
fn rebuild_product(coeff: &BigRational, factors: &Factors) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    if factors.is_empty() {
        return Expr::number(coeff.clone());
    }
    let negate = coeff.is_negative();
    let cn = coeff.numer().magnitude().clone();
    let cd = coeff.denom().magnitude().clone();

    let num_factors = factors
        .iter()
        .filter(|(_, exp)| exp.is_positive())
        .map(|(b, exp)| powered(b, exp));
    let den_factors = factors
        .iter()
        .filter(|(_, exp)| exp.is_negative())
        .map(|(b, exp)| powered(b, &-exp.clone()));

    let cn_rat = BigRational::from_integer(cn.into());
    let cd_rat = BigRational::from_integer(cd.into());

    let num_const = if cn_rat.is_one() { None } else { Some(Expr::number(cn_rat)) };
    let num = chain(num_const.into_iter().chain(num_factors)).unwrap_or_else(Expr::one);

    let den_const = if cd_rat.is_one() { None } else { Some(Expr::number(cd_rat)) };
    let den = chain(den_const.into_iter().chain(den_factors));

    let body = match den {
        Some(d) => ExprNode::Div(num, d).into(),
        None => num,
    };
    if negate {
        ExprNode::Neg(body).into()
    } else {
        body
    }
}

/// A sum decomposed as `sum(coeff * term)`, keyed by the term's factor map so
/// grouping agrees exactly with what `rebuild_product` will emit.
type Terms = BTreeMap<Factors, BigRational>;

fn flatten_sum(e: &Expr, sign: &BigRational, out: &mut Terms) {
    match e.node() {
        ExprNode::Add(a, b) => {
            flatten_sum(a, sign, out);
            flatten_sum(b, sign, out);
        }
        ExprNode::Sub(a, b) => {
            flatten_sum(a, sign, out);
            let neg = -sign.clone();
            flatten_sum(b, &neg, out);
        }
        ExprNode::Neg(a) => {
            let neg = -sign.clone();
            flatten_sum(a, &neg, out);
        }
        _ => match collect_product_parts(e) {
            Some((coeff, factors)) => match distribute(&coeff, &factors) {
                Some(terms) => {
                    for (tf, tc) in terms {
                        add_term(out, tf, tc * sign);
                    }
                }
                None => add_term(out, factors, coeff * sign),
            },
            None => {
                let mut factors = Factors::new();
                factors.insert(e.clone(), BigRational::one());
                add_term(out, factors, sign.clone());
            }
        },
    }
}

fn add_term(out: &mut Terms, factors: Factors, coeff: BigRational) {
    let entry = out.entry(factors).or_insert_with(BigRational::zero);
    *entry += coeff;
}

fn rebuild_sum(terms: &Terms) -> Expr {
    let mut acc: Option<Expr> = None;
    for (factors, coeff) in terms {
        if coeff.is_zero() {
            continue;
        }
        match acc {
            None => acc = Some(rebuild_product(coeff, factors)),
            Some(prev) => {
                acc = Some(if coeff.is_negative() {
                    let pos = -coeff.clone();
                    ExprNode::Sub(prev, rebuild_product(&pos, factors)).into()
                } else {
                    ExprNode::Add(prev, rebuild_product(coeff, factors)).into()
                });
            }
        }
    }
    acc.unwrap_or_else(Expr::zero)
}

fn collect_sum(e: &Expr) -> Expr {
    let mut terms = Terms::new();
    flatten_sum(e, &BigRational::one(), &mut terms);
    rebuild_sum(&terms)
}

/// `(t_1 + ... + t_k)^n` by repeated term-by-term multiplication, collecting
/// as it goes. Falls back to the unexpanded power if the result would grow
/// past [`MAX_EXPANDED_TERMS`].
fn expand_sum_power(base: &Expr, n: u32) -> Expr {
    let mut base_terms = Terms::new();
    flatten_sum(base, &BigRational::one(), &mut base_terms);
    base_terms.retain(|_, c| !c.is_zero());

    let mut acc = Terms::new();
    acc.insert(Factors::new(), BigRational::one());
    for _ in 0..n {
        match mul_term_maps(&acc, &base_terms) {
            Some(next) => acc = next,
            None => return base.clone().pow_rational(BigRational::from_integer(n.into())),
        }
    }
    rebuild_sum(&acc)
}
