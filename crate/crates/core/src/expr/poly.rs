//! Exact decision procedure for the rational fragment.
//!
//! An expression built from jet coordinates, named constants, exact numbers,
//! `+ - * /` and integer powers is a rational function over the rationals.
//! Such an expression is identically zero iff the numerator polynomial of its
//! normalized fraction is the zero polynomial, which is decidable by exact
//! arithmetic. Anything outside that fragment (abstract functions,
//! transcendentals, fractional powers) is rejected with
//! [`ExactError::Unsupported`] and handled by the sampling tier instead.
//!
//! Polynomials are kept in distributed form, a map from exponent vectors to
//! rational coefficients. No gcd reduction is attempted; growth is bounded by
//! hard caps that bail out with [`ExactError::TooBig`].

use std::collections::{BTreeMap, HashMap};

use num::{BigRational, One, Signed, ToPrimitive, Zero};

use super::{Expr, ExprNode, Var};

/// Hard cap on the number of monomials a polynomial may reach.
const MAX_TERMS: usize = 20_000;
/// Hard cap on the absolute value of an integer exponent on a subexpression.
const MAX_POWER: i64 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ExactError {
    /// The expression leaves the rational fragment.
    Unsupported,
    /// A denominator is exactly the zero polynomial.
    ZeroDenominator,
    /// A size guard tripped; the answer exists but is not worth computing.
    TooBig,
}

/// Variable order for exponent vectors: the four jet coordinates, then the
/// expression's named constants in sorted order.
#[derive(Debug, Clone)]
pub(crate) struct Generators {
    params: Vec<String>,
}

impl Generators {
    pub(crate) fn for_expr(e: &Expr) -> Generators {
        Generators {
            params: e.free_params().into_iter().collect(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        4 + self.params.len()
    }

    fn index_of_param(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name).map(|i| 4 + i)
    }

    pub(crate) fn params(&self) -> &[String] {
        &self.params
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct MPoly {
    terms: BTreeMap<Vec<u16>, BigRational>,
    nvars: usize,
}

impl MPoly {
    fn zero(nvars: usize) -> MPoly {
        MPoly { terms: BTreeMap::new(), nvars }
    }

    fn constant(nvars: usize, c: BigRational) -> MPoly {
        let mut p = MPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    fn one(nvars: usize) -> MPoly {
        MPoly::constant(nvars, BigRational::one())
    }

    fn var(nvars: usize, i: usize) -> MPoly {
        let mut exps = vec![0u16; nvars];
        exps[i] = 1;
        let mut p = MPoly::zero(nvars);
        p.terms.insert(exps, BigRational::one());
        p
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .all(|(e, c)| e.iter().all(|&d| d == 0) && c.is_one())
    }

    fn add_term(&mut self, exps: Vec<u16>, coeff: BigRational) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(slot) => {
                if !coeff.is_zero() {
                    slot.insert(coeff);
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    fn add(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
            nvars: self.nvars,
        }
    }

    fn mul(&self, other: &MPoly) -> Result<MPoly, ExactError> {
        if self.is_one() {
            return Ok(other.clone());
        }
        if other.is_one() {
            return Ok(self.clone());
        }
        let mut out = MPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut exps = Vec::with_capacity(self.nvars);
                for (a, b) in e1.iter().zip(e2.iter()) {
                    exps.push(a.checked_add(*b).ok_or(ExactError::TooBig)?);
                }
                out.add_term(exps, c1 * c2);
                if out.terms.len() > MAX_TERMS {
                    return Err(ExactError::TooBig);
                }
            }
        }
        Ok(out)
    }

    fn pow(&self, n: u32) -> Result<MPoly, ExactError> {
        let mut acc = MPoly::one(self.nvars);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    fn scale(&self, c: &BigRational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
            nvars: self.nvars,
        }
    }

    /// The coefficient if this is a constant polynomial.
    fn constant_value(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(e, _)| e.iter().all(|&d| d == 0))
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub(crate) fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut total = BigRational::zero();
        for (exps, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (e, v) in exps.iter().zip(point.iter()) {
                term *= num::pow::pow(v.clone(), *e as usize);
            }
            total += term;
        }
        total
    }
}

/// A rational function whose denominator is kept in factored form, as a
/// product of `base^exp` with pairwise distinct nonconstant bases. Without
/// polynomial gcd, expanding denominators makes every sum cross-multiply and
/// degrees escalate with the number of summands; with factors, a sum only
/// needs the per-base least common multiple, so denominators stay as small as
/// the worst single summand. Constant factors fold into the numerator.
#[derive(Clone)]
struct Fraction {
    num: MPoly,
    den: Vec<(MPoly, u32)>,
}

impl Fraction {
    fn from_poly(p: MPoly) -> Fraction {
        Fraction { num: p, den: Vec::new() }
    }

    fn nvars(&self) -> usize {
        self.num.nvars
    }

    /// Multiply `base^exp` into the denominator. `base` must not be the zero
    /// polynomial.
    fn push_factor(&mut self, base: &MPoly, exp: u32) -> Result<(), ExactError> {
        if exp == 0 {
            return Ok(());
        }
        if let Some(c) = base.constant_value() {
            let scale = num::pow::pow(c, exp as usize);
            self.num = self.num.scale(&scale.recip());
            return Ok(());
        }
        if let Some(slot) = self.den.iter_mut().find(|(b, _)| b == base) {
            slot.1 = slot.1.checked_add(exp).ok_or(ExactError::TooBig)?;
        } else {
            self.den.push((base.clone(), exp));
        }
        Ok(())
    }

    fn den_expanded(&self) -> Result<MPoly, ExactError> {
        let mut out = MPoly::one(self.nvars());
        for (base, exp) in &self.den {
            out = out.mul(&base.pow(*exp)?)?;
        }
        Ok(out)
    }

    fn add(&self, other: &Fraction) -> Result<Fraction, ExactError> {
        let mut lcm = self.den.clone();
        for (base, exp) in &other.den {
            if let Some(slot) = lcm.iter_mut().find(|(b, _)| b == base) {
                slot.1 = slot.1.max(*exp);
            } else {
                lcm.push((base.clone(), *exp));
            }
        }
        let cofactor = |own: &[(MPoly, u32)]| -> Result<MPoly, ExactError> {
            let mut c = MPoly::one(self.nvars());
            for (base, exp) in &lcm {
                let have = own
                    .iter()
                    .find(|(b, _)| b == base)
                    .map(|(_, e)| *e)
                    .unwrap_or(0);
                if *exp > have {
                    c = c.mul(&base.pow(exp - have)?)?;
                }
            }
            Ok(c)
        };
        let num = self
            .num
            .mul(&cofactor(&self.den)?)?
            .add(&other.num.mul(&cofactor(&other.den)?)?);
        Ok(Fraction { num, den: lcm })
    }

    fn neg(&self) -> Fraction {
        Fraction { num: self.num.neg(), den: self.den.clone() }
    }

    fn mul(&self, other: &Fraction) -> Result<Fraction, ExactError> {
        let mut out = Fraction {
            num: self.num.mul(&other.num)?,
            den: self.den.clone(),
        };
        for (base, exp) in &other.den {
            out.push_factor(base, *exp)?;
        }
        Ok(out)
    }

    fn div(&self, other: &Fraction) -> Result<Fraction, ExactError> {
        if other.num.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        let mut out = Fraction {
            num: self.num.clone(),
            den: self.den.clone(),
        };
        for (base, exp) in &other.den {
            out.num = out.num.mul(&base.pow(*exp)?)?;
        }
        out.push_factor(&other.num, 1)?;
        Ok(out)
    }

    fn pow(&self, n: i64) -> Result<Fraction, ExactError> {
        if n.unsigned_abs() as i64 > MAX_POWER {
            return Err(ExactError::TooBig);
        }
        let m = n.unsigned_abs() as u32;
        if n >= 0 {
            let mut out = Fraction {
                num: self.num.pow(m)?,
                den: Vec::new(),
            };
            for (base, exp) in &self.den {
                out.push_factor(base, exp.checked_mul(m).ok_or(ExactError::TooBig)?)?;
            }
            Ok(out)
        } else {
            if self.num.is_zero() {
                return Err(ExactError::ZeroDenominator);
            }
            // The reciprocal keeps the old numerator as an unexpanded base,
            // so `t^-k` denominators from different subtrees stay mergeable.
            let mut out = Fraction {
                num: MPoly::one(self.nvars()),
                den: Vec::new(),
            };
            for (base, exp) in &self.den {
                out.num = out
                    .num
                    .mul(&base.pow(exp.checked_mul(m).ok_or(ExactError::TooBig)?)?)?;
            }
            out.push_factor(&self.num, m)?;
            Ok(out)
        }
    }
}

fn build(e: &Expr, gens: &Generators) -> Result<Fraction, ExactError> {
    // Expressions share subtrees through their reference-counted nodes, and
    // derived quantities (total derivatives, invariants) share heavily. Keyed
    // on node identity, each distinct subtree is normalized exactly once; a
    // plain tree walk re-normalizes shared nodes exponentially often.
    let mut memo: HashMap<*const ExprNode, Fraction> = HashMap::new();
    build_memo(e, gens, &mut memo)
}

fn build_memo(
    e: &Expr,
    gens: &Generators,
    memo: &mut HashMap<*const ExprNode, Fraction>,
) -> Result<Fraction, ExactError> {
    let key = e.node() as *const ExprNode;
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let n = gens.len();
    let out = match e.node() {
        ExprNode::Number(c) => Fraction::from_poly(MPoly::constant(n, c.clone())),
        ExprNode::Jet(v) => {
            let i = match v {
                Var::X => 0,
                Var::U => 1,
                Var::P => 2,
                Var::Q => 3,
            };
            Fraction::from_poly(MPoly::var(n, i))
        }
        ExprNode::Param(name) => {
            let i = gens.index_of_param(name).ok_or(ExactError::Unsupported)?;
            Fraction::from_poly(MPoly::var(n, i))
        }
        ExprNode::Func { .. } | ExprNode::Apply(..) => return Err(ExactError::Unsupported),
        ExprNode::Neg(a) => build_memo(a, gens, memo)?.neg(),
        ExprNode::Add(a, b) => build_memo(a, gens, memo)?.add(&build_memo(b, gens, memo)?)?,
        ExprNode::Sub(a, b) => {
            build_memo(a, gens, memo)?.add(&build_memo(b, gens, memo)?.neg())?
        }
        ExprNode::Mul(a, b) => build_memo(a, gens, memo)?.mul(&build_memo(b, gens, memo)?)?,
        ExprNode::Div(a, b) => build_memo(a, gens, memo)?.div(&build_memo(b, gens, memo)?)?,
        ExprNode::Pow(b, r) => {
            if !r.is_integer() {
                return Err(ExactError::Unsupported);
            }
            let nexp = r.to_integer().to_i64().ok_or(ExactError::TooBig)?;
            build_memo(b, gens, memo)?.pow(nexp)?
        }
    };
    memo.insert(key, out.clone());
    Ok(out)
}

/// Normalize `e` into a single fraction `num/den` of polynomials over the
/// generators. `e` is identically zero on the open set where `den != 0` iff
/// `num` is the zero polynomial.
pub(crate) fn rational_fraction(
    e: &Expr,
    gens: &Generators,
) -> Result<(MPoly, MPoly), ExactError> {
    let f = build(e, gens)?;
    let den = f.den_expanded()?;
    Ok((f.num, den))
}

/// Deterministic search for a rational point where `num != 0` and `den != 0`.
/// Coordinates are drawn from a fixed list of small rationals; tuples are
/// enumerated in mixed radix with a hard cap on the number of candidates.
pub(crate) fn exact_witness(
    num: &MPoly,
    den: &MPoly,
    nvars: usize,
) -> Option<(Vec<BigRational>, BigRational)> {
    let candidates: Vec<BigRational> = [
        (1i64, 1i64),
        (2, 1),
        (1, 2),
        (3, 1),
        (1, 3),
        (3, 2),
        (5, 1),
        (2, 3),
        (7, 1),
        (5, 2),
    ]
    .iter()
    .map(|&(a, b)| BigRational::new(a.into(), b.into()))
    .collect();

    const MAX_TUPLES: usize = 4096;
    let base = candidates.len();
    for k in 0..MAX_TUPLES {
        let mut idx = k;
        let mut point = Vec::with_capacity(nvars);
        for _ in 0..nvars {
            point.push(candidates[idx % base].clone());
            idx /= base;
        }
        let dv = den.eval(&point);
        if dv.is_zero() {
            continue;
        }
        let nv = num.eval(&point);
        if !nv.is_zero() {
            return Some((point.clone(), nv / dv));
        }
    }
    None
}

/// Lossy conversion for reporting a witness value; saturates to a huge finite
/// float when the exact rational overflows `f64`.
pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::MIN
        } else {
            f64::MAX
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Context};

    fn fraction(src: &str) -> Result<(MPoly, MPoly), ExactError> {
        let ctx = Context::new().with_param("k").with_func("a");
        let e = parse(src, &ctx).unwrap();
        let gens = Generators::for_expr(&e);
        rational_fraction(&e, &gens)
    }

    #[test]
    fn difference_of_squares_cancels() {
        let (num, _) = fraction("(x+u)*(x-u) - x^2 + u^2").unwrap();
        assert!(num.is_zero());
    }

    #[test]
    fn fraction_identity_cancels() {
        let (num, _) = fraction("1/(1+p) + 1/(1-p) - 2/(1-p^2)").unwrap();
        assert!(num.is_zero());
    }

    #[test]
    fn nonzero_survives() {
        let (num, _) = fraction("x^2 - u^2 + 1").unwrap();
        assert!(!num.is_zero());
    }

    #[test]
    fn params_are_generators() {
        let (num, _) = fraction("k*x - x*k").unwrap();
        assert!(num.is_zero());
        let (num, _) = fraction("k*x - x").unwrap();
        assert!(!num.is_zero());
    }

    #[test]
    fn functions_are_rejected() {
        assert_eq!(fraction("a(x) - a(x)").unwrap_err(), ExactError::Unsupported);
        assert_eq!(fraction("exp(x)").unwrap_err(), ExactError::Unsupported);
    }

    #[test]
    fn fractional_powers_are_rejected() {
        assert_eq!(fraction("sqrt(p) - sqrt(p)").unwrap_err(), ExactError::Unsupported);
    }

    #[test]
    fn zero_polynomial_denominator_is_an_error() {
        assert_eq!(fraction("x/(u - u)").unwrap_err(), ExactError::ZeroDenominator);
    }

    #[test]
    fn witness_search_finds_a_point() {
        let (num, den) = fraction("(x-1)*(u-1)").unwrap();
        let (point, value) = exact_witness(&num, &den, 4).unwrap();
        assert_eq!(num.eval(&point), value.clone() * den.eval(&point));
        assert!(!value.is_zero());
    }

    #[test]
    fn big_powers_bail_out() {
        assert_eq!(fraction("(x+u)^17").unwrap_err(), ExactError::TooBig);
    }
}
