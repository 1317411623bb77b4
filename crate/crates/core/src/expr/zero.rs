//! Deciding whether an expression vanishes identically.
//!
//! Two tiers. Expressions inside the rational fragment (jet coordinates,
//! named constants, exact numbers, field operations, integer powers) get an
//! exact answer by normalizing to a single polynomial fraction. Everything
//! else — abstract functions of `x`, transcendentals, fractional powers — is
//! tested numerically: the expression is evaluated at pseudo-random points of
//! a configurable box and judged against a tolerance that scales with the
//! magnitude of the intermediate arithmetic, so cancellation-heavy
//! expressions are not misread as nonzero noise.
//!
//! The numeric tier is deterministic for a fixed [`SampleDomain`]: the
//! generator is seeded, and draws consume coordinates in a fixed documented
//! order (x, u, p, q, then named constants sorted by name, then abstract
//! function symbols sorted by name and derivative order).
//!
//! A [`ZeroVerdict::NonZero`] always carries a concrete witness point and the
//! value observed there; a witness must clear the tolerance by a wide margin
//! ([`WITNESS_MARGIN`]) so that a single roundoff spike cannot refute an
//! identity. When neither a clean zero nor a clean witness emerges the
//! verdict is `Indeterminate`, never a guess.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::{exact_witness, rational_fraction, rational_to_f64, ExactError, Generators};
use super::{eval_with_magnitude, Bindings, Expr, JetPoint, Var};

/// Successful evaluations required before the numeric tier accepts "zero".
pub const DEFAULT_SAMPLES: usize = 48;
/// Relative tolerance: a value counts as zero when `|v| <= tol * scale`,
/// where `scale` grows with the magnitude of the intermediate arithmetic.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Seed for the sample generator; fixed so runs are reproducible.
pub const DEFAULT_SEED: u64 = 424_242;
/// Total evaluation attempts allowed, counting draws rejected for domain
/// errors (poles, negative radicands, overflow).
const DEFAULT_RETRIES: usize = 480;
/// A witness must satisfy `|v| >= WITNESS_MARGIN * tol * scale`.
const WITNESS_MARGIN: f64 = 1e3;

/// Sampling box and budget for the numeric tier.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDomain {
    jet: BTreeMap<Var, (f64, f64)>,
    symbols: (f64, f64),
    samples: usize,
    tol: f64,
    retries: usize,
    seed: u64,
}

impl Default for SampleDomain {
    /// `x, u` range over `[-1, 1]`; `p, q` over `[0.5, 2]` so that slopes and
    /// curvatures stay away from the coordinate singularities that the worked
    /// equations put at `p = 0` or `q = 0`. Named constants and abstract
    /// function values also draw from `[0.5, 2]`.
    fn default() -> SampleDomain {
        let mut jet = BTreeMap::new();
        jet.insert(Var::X, (-1.0, 1.0));
        jet.insert(Var::U, (-1.0, 1.0));
        jet.insert(Var::P, (0.5, 2.0));
        jet.insert(Var::Q, (0.5, 2.0));
        SampleDomain {
            jet,
            symbols: (0.5, 2.0),
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            retries: DEFAULT_RETRIES,
            seed: DEFAULT_SEED,
        }
    }
}

impl SampleDomain {
    pub fn interval(&self, v: Var) -> (f64, f64) {
        self.jet[&v]
    }

    /// Panics if `lo > hi` or either bound is not finite.
    pub fn set_interval(&mut self, v: Var, lo: f64, hi: f64) {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "bad interval {lo}..{hi}");
        self.jet.insert(v, (lo, hi));
    }

    pub fn with_interval(mut self, v: Var, lo: f64, hi: f64) -> SampleDomain {
        self.set_interval(v, lo, hi);
        self
    }

    pub fn with_symbol_interval(mut self, lo: f64, hi: f64) -> SampleDomain {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "bad interval {lo}..{hi}");
        self.symbols = (lo, hi);
        self
    }

    pub fn with_samples(mut self, samples: usize) -> SampleDomain {
        assert!(samples > 0, "need at least one sample");
        self.samples = samples;
        self.retries = samples.saturating_mul(10);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> SampleDomain {
        assert!(tol.is_finite() && tol > 0.0, "bad tolerance {tol}");
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> SampleDomain {
        self.seed = seed;
        self
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A point at which an expression was observed to be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: JetPoint,
    /// Values assigned to named constants and abstract function symbols,
    /// e.g. `("k", 1.25)` or `("a''", 0.75)`.
    pub symbols: Vec<(String, f64)>,
    pub value: f64,
}

fn func_label(name: &str, order: u32) -> String {
    let mut s = String::from(name);
    for _ in 0..order {
        s.push('\'');
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroVerdict {
    /// Vanishes identically. `exact` records whether the answer came from
    /// polynomial arithmetic (proof) or from sampling (evidence at `samples`
    /// points).
    IdenticallyZero { samples: usize, exact: bool },
    /// Does not vanish; `witness` shows where.
    NonZero { witness: Witness, samples: usize },
    /// Neither verdict could be reached: evaluations kept failing, or values
    /// hovered between the zero tolerance and the witness margin.
    Indeterminate { samples: usize, failures: usize },
}

impl ZeroVerdict {
    pub fn is_identically_zero(&self) -> bool {
        matches!(self, ZeroVerdict::IdenticallyZero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn samples(&self) -> usize {
        match self {
            ZeroVerdict::IdenticallyZero { samples, .. }
            | ZeroVerdict::NonZero { samples, .. }
            | ZeroVerdict::Indeterminate { samples, .. } => *samples,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::NonZero { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

pub fn is_zero(e: &Expr, domain: &SampleDomain) -> ZeroVerdict {
    let e = super::simplify(e);
    if e.is_zero_const() {
        return ZeroVerdict::IdenticallyZero { samples: 0, exact: true };
    }

    let gens = Generators::for_expr(&e);
    match rational_fraction(&e, &gens) {
        Ok((num, den)) => {
            if num.is_zero() {
                return ZeroVerdict::IdenticallyZero { samples: 0, exact: true };
            }
            // Provably nonzero; sampling supplies the witness. If the box is
            // unlucky, fall back to a deterministic exact search.
            match sample(&e, domain) {
                v @ ZeroVerdict::NonZero { .. } => v,
                other => match exact_witness(&num, &den, gens.len()) {
                    Some((point, value)) => {
                        let coords: Vec<f64> = point.iter().map(rational_to_f64).collect();
                        let symbols = gens
                            .params()
                            .iter()
                            .zip(coords[4..].iter())
                            .map(|(n, v)| (n.clone(), *v))
                            .collect();
                        ZeroVerdict::NonZero {
                            witness: Witness {
                                point: JetPoint::new(coords[0], coords[1], coords[2], coords[3]),
                                symbols,
                                value: rational_to_f64(&value),
                            },
                            samples: other.samples(),
                        }
                    }
                    None => other,
                },
            }
        }
        Err(ExactError::Unsupported) | Err(ExactError::TooBig) | Err(ExactError::ZeroDenominator) => {
            sample(&e, domain)
        }
    }
}

fn sample(e: &Expr, domain: &SampleDomain) -> ZeroVerdict {
    let params: Vec<String> = e.free_params().into_iter().collect();
    let funcs: Vec<(String, u32)> = e.free_funcs().into_iter().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(domain.seed);
    let mut successes = 0usize;
    let mut failures = 0usize;
    let mut saw_ambiguous = false;

    for _ in 0..domain.retries {
        if successes >= domain.samples {
            break;
        }
        let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| -> f64 {
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        };
        let pt = JetPoint::new(
            draw(&mut rng, domain.jet[&Var::X]),
            draw(&mut rng, domain.jet[&Var::U]),
            draw(&mut rng, domain.jet[&Var::P]),
            draw(&mut rng, domain.jet[&Var::Q]),
        );
        let mut bindings = Bindings::none();
        let mut symbols = Vec::with_capacity(params.len() + funcs.len());
        for name in &params {
            let v = draw(&mut rng, domain.symbols);
            bindings.set_value(name, v);
            symbols.push((name.clone(), v));
        }
        for (name, order) in &funcs {
            let v = draw(&mut rng, domain.symbols);
            bindings.set_func_value(name, *order, v);
            symbols.push((func_label(name, *order), v));
        }

        match eval_with_magnitude(e, &pt, &bindings) {
            Err(_) => failures += 1,
            Ok((value, magnitude)) => {
                successes += 1;
                let scale = domain.tol * magnitude.max(1.0);
                if value.abs() >= WITNESS_MARGIN * scale {
                    return ZeroVerdict::NonZero {
                        witness: Witness { point: pt, symbols, value },
                        samples: successes,
                    };
                }
                if value.abs() > scale {
                    saw_ambiguous = true;
                }
            }
        }
    }

    if successes >= domain.samples && !saw_ambiguous {
        ZeroVerdict::IdenticallyZero { samples: successes, exact: false }
    } else {
        ZeroVerdict::Indeterminate { samples: successes, failures }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Context};

    fn ctx() -> Context {
        Context::new().with_func("a").with_param("k")
    }

    fn verdict(src: &str) -> ZeroVerdict {
        is_zero(&parse(src, &ctx()).unwrap(), &SampleDomain::default())
    }

    #[test]
    fn rational_identity_is_exact() {
        match verdict("(x+u)^2 - x^2 - 2*x*u - u^2") {
            ZeroVerdict::IdenticallyZero { exact, .. } => assert!(exact),
            v => panic!("expected exact zero, got {v:?}"),
        }
    }

    #[test]
    fn radical_identity_needs_sampling() {
        match verdict("sqrt(p)*sqrt(p) - p") {
            // The simplifier may fold this before sampling ever runs; either
            // route must land on IdenticallyZero.
            ZeroVerdict::IdenticallyZero { .. } => {}
            v => panic!("expected zero, got {v:?}"),
        }
        match verdict("sqrt(1+p^2)^2 - 1 - p^2") {
            ZeroVerdict::IdenticallyZero { .. } => {}
            v => panic!("expected zero, got {v:?}"),
        }
    }

    #[test]
    fn nonzero_carries_witness() {
        let v = verdict("q^2 - p");
        let w = v.witness().expect("witness").clone();
        let residual = w.point.q * w.point.q - w.point.p;
        assert!((residual - w.value).abs() <= 1e-9 * (1.0 + w.value.abs()));
        assert!(w.value.abs() > 0.0);
    }

    #[test]
    fn function_identities_sample() {
        match verdict("a'(x) + k - k - a'(x)") {
            ZeroVerdict::IdenticallyZero { exact, samples } => {
                // Cancellation happens structurally here, so either tier may
                // answer; a sampled answer must have used the full budget.
                if !exact {
                    assert_eq!(samples, DEFAULT_SAMPLES);
                }
            }
            v => panic!("expected zero, got {v:?}"),
        }
        assert!(verdict("a(x)*a(x) - a(x)^2").is_identically_zero());
        assert!(verdict("a(x) - a'(x)").is_nonzero());
    }

    #[test]
    fn transcendental_identity_samples_true() {
        assert!(verdict("sin(x)^2 + cos(x)^2 - 1").is_identically_zero());
        assert!(verdict("exp(x)*exp(-x) - 1").is_identically_zero());
        assert!(verdict("ln(exp(x)) - x").is_identically_zero());
        assert!(verdict("sin(x) - x").is_nonzero());
    }

    #[test]
    fn everywhere_singular_is_indeterminate() {
        match verdict("x/(u-u)") {
            ZeroVerdict::Indeterminate { samples, failures } => {
                assert_eq!(samples, 0);
                assert!(failures > 0);
            }
            v => panic!("expected indeterminate, got {v:?}"),
        }
    }

    #[test]
    fn determinism_for_fixed_seed() {
        let e = parse("sin(x)*q - p", &ctx()).unwrap();
        let dom = SampleDomain::default();
        assert_eq!(is_zero(&e, &dom), is_zero(&e, &dom));
        // A different seed may pick a different witness but the same verdict.
        let other = is_zero(&e, &SampleDomain::default().with_seed(7));
        assert!(other.is_nonzero());
    }

    #[test]
    fn tiny_coefficients_get_exact_grid_witness() {
        // Far below the sampling tolerance, but provably nonzero: the exact
        // tier must still produce a witness instead of an indeterminate.
        let e = parse("x/100000000000 - u/300000000000000", &ctx()).unwrap();
        let v = is_zero(&e, &SampleDomain::default());
        assert!(v.is_nonzero(), "got {v:?}");
    }

    #[test]
    fn domain_intervals_are_respected() {
        let dom = SampleDomain::default()
            .with_interval(Var::P, 3.0, 4.0)
            .with_samples(16);
        let v = is_zero(&parse("p - 8", &ctx()).unwrap(), &dom);
        let w = v.witness().expect("p - 8 is nonzero on [3,4]");
        assert!((3.0..=4.0).contains(&w.point.p));
    }
}
