//! Jet-space calculus for a fixed equation `u''' = f(x, u, p, q)`.
//!
//! On the second-order jet coordinates `(x, u, p, q)` — position, value,
//! slope, curvature — the equation induces the total derivative operator
//!
//! ```text
//! D_x = ∂x + p ∂u + q ∂p + f ∂q
//! ```
//!
//! which differentiates along solution curves. From `f` and `D_x` the module
//! builds the structure functions `s1..s4`, the two relative invariants whose
//! identical vanishing characterizes equations with the maximal
//! ten-dimensional contact symmetry algebra (equivalently: equations
//! reducible to `ū''' = 0` by a contact transformation), and the classifier
//! that applies that criterion.
//!
//! The decisive invariant pair is the Wünschmann expression together with the
//! fourth `q`-partial `f_qqqq`. The third `q`-partial `f_qqq` is computed and
//! reported as well — it vanishes whenever `f_qqqq` does not follow from it,
//! and surfaces the weaker third-order test some treatments quote — but it
//! does not drive the verdict.

use thiserror::Error;

use crate::expr::{
    diff, is_zero, simplify, Context, Expr, SampleDomain, Var, Witness, ZeroVerdict,
};

/// A scalar third-order ODE in solved form `u''' = f(x, u, p, q)`.
///
/// `f` may mention the four jet coordinates plus whatever named constants and
/// abstract functions of `x` the accompanying [`Context`] declares; anything
/// else is rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ode3 {
    f: Expr,
    ctx: Context,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OdeError {
    #[error("right-hand side mentions undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
}

impl Ode3 {
    pub fn new(f: Expr, ctx: Context) -> Result<Ode3, OdeError> {
        for p in f.free_params() {
            if !ctx.has_param(&p) {
                return Err(OdeError::UndeclaredSymbol(p));
            }
        }
        for (name, _) in f.free_funcs() {
            if !ctx.has_func(&name) {
                return Err(OdeError::UndeclaredSymbol(name));
            }
        }
        Ok(Ode3 { f, ctx })
    }

    /// Convenience for a closed right-hand side with no extra symbols.
    pub fn from_rhs(f: Expr) -> Result<Ode3, OdeError> {
        Ode3::new(f, Context::new())
    }

    pub fn rhs(&self) -> &Expr {
        &self.f
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }
}

/// `D_x g = g_x + p g_u + q g_p + f g_q`, simplified.
pub fn total_derivative(ode: &Ode3, g: &Expr) -> Expr {
    let raw = diff(g, Var::X)
        + Expr::p() * diff(g, Var::U)
        + Expr::q() * diff(g, Var::P)
        + ode.f.clone() * diff(g, Var::Q);
    simplify(&raw)
}

/// The four structure functions of the equation's coframe, each simplified.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctions {
    /// `s1 = f_q`
    pub s1: Expr,
    /// `s2 = 2 f_q^2 + 9 f_p - 3 D_x f_q`
    pub s2: Expr,
    /// `s3 = (2/3) s1_u - (1/18) s2_p - (1/54) s1 s2_q + (1/36) s2 s1_q`
    pub s3: Expr,
    /// `s4 = (1/3) s1_p - (1/18) s2_q + (1/18) s1 s1_q`
    pub s4: Expr,
}

pub fn structure_functions(ode: &Ode3) -> StructureFunctions {
    let f = ode.rhs();
    let s1 = simplify(&diff(f, Var::Q));
    let s2 = simplify(
        &(Expr::int(2) * s1.clone().powi(2) + Expr::int(9) * diff(f, Var::P)
            - Expr::int(3) * total_derivative(ode, &s1)),
    );
    let s3 = simplify(
        &(Expr::ratio(2, 3) * diff(&s1, Var::U) - Expr::ratio(1, 18) * diff(&s2, Var::P)
            - Expr::ratio(1, 54) * s1.clone() * diff(&s2, Var::Q)
            + Expr::ratio(1, 36) * s2.clone() * diff(&s1, Var::Q)),
    );
    let s4 = simplify(
        &(Expr::ratio(1, 3) * diff(&s1, Var::P) - Expr::ratio(1, 18) * diff(&s2, Var::Q)
            + Expr::ratio(1, 18) * s1.clone() * diff(&s1, Var::Q)),
    );
    StructureFunctions { s1, s2, s3, s4 }
}

/// The Wünschmann relative invariant,
/// `4 f_q^3 + 18 f_q (f_p - D_x f_q) + 9 D_x^2 f_q - 27 D_x f_p + 54 f_u`,
/// returned without top-level simplification.
pub fn wunschmann(ode: &Ode3) -> Expr {
    let f = ode.rhs();
    let fq = diff(f, Var::Q);
    let fp = diff(f, Var::P);
    let fu = diff(f, Var::U);
    let d_fq = total_derivative(ode, &fq);
    Expr::int(4) * fq.clone().powi(3)
        + Expr::int(18) * fq * (fp.clone() - d_fq.clone())
        + Expr::int(9) * total_derivative(ode, &d_fq)
        - Expr::int(27) * total_derivative(ode, &fp)
        + Expr::int(54) * fu
}

/// The same invariant assembled from the structure functions:
/// `(1/54) (2 s1 s2 - 3 D_x s2 + 54 f_u)`. Equal to `wunschmann / 54` as an
/// algebraic identity; computing it through a different route gives the test
/// suite an independent cross-check.
pub fn wunschmann_from_structure(ode: &Ode3) -> Expr {
    let s = structure_functions(ode);
    let fu = diff(ode.rhs(), Var::U);
    Expr::ratio(1, 54)
        * (Expr::int(2) * s.s1 * s.s2.clone() - Expr::int(3) * total_derivative(ode, &s.s2)
            + Expr::int(54) * fu)
}

/// One relative invariant with its zero verdict. The untouched expression is
/// kept next to the simplified one so that a surprising verdict can be traced
/// without re-deriving anything.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub raw: Expr,
    pub simplified: Expr,
    pub verdict: ZeroVerdict,
}

impl Invariant {
    fn evaluate(raw: Expr, dom: &SampleDomain) -> Invariant {
        let simplified = simplify(&raw);
        let verdict = is_zero(&raw, dom);
        Invariant { raw, simplified, verdict }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// Both decisive invariants vanish identically: the equation admits the
    /// ten-dimensional contact symmetry algebra and is contact-equivalent to
    /// `ū''' = 0`.
    MaximalContact,
    /// A decisive invariant is nonzero at `witness`; `invariant` names which
    /// one (`"wunschmann"` or `"f_qqqq"`).
    NotMaximal { invariant: String, witness: Witness },
    /// At least one decisive verdict came back indeterminate and none came
    /// back nonzero.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub wunschmann: Invariant,
    pub f_qqq: Invariant,
    pub f_qqqq: Invariant,
    pub classification: Classification,
}

/// Compute the relative invariants of the equation, decide each one's
/// vanishing over `dom`, and classify per the maximal-symmetry criterion:
/// `MaximalContact` iff the Wünschmann invariant and `f_qqqq` both vanish
/// identically.
pub fn invariants(ode: &Ode3, dom: &SampleDomain) -> InvariantReport {
    let f = ode.rhs();
    let fqqq = diff(&diff(&diff(f, Var::Q), Var::Q), Var::Q);
    let fqqqq = diff(&fqqq, Var::Q);

    let wunschmann = Invariant::evaluate(self::wunschmann(ode), dom);
    let f_qqq = Invariant::evaluate(fqqq, dom);
    let f_qqqq = Invariant::evaluate(fqqqq, dom);

    let classification = match (&wunschmann.verdict, &f_qqqq.verdict) {
        (ZeroVerdict::NonZero { witness, .. }, _) => Classification::NotMaximal {
            invariant: "wunschmann".to_string(),
            witness: witness.clone(),
        },
        (_, ZeroVerdict::NonZero { witness, .. }) => Classification::NotMaximal {
            invariant: "f_qqqq".to_string(),
            witness: witness.clone(),
        },
        (ZeroVerdict::IdenticallyZero { .. }, ZeroVerdict::IdenticallyZero { .. }) => {
            Classification::MaximalContact
        }
        _ => Classification::Indeterminate,
    };

    InvariantReport { wunschmann, f_qqq, f_qqqq, classification }
}

/// Convenience wrapper over [`invariants`] when only the verdict is wanted.
pub fn classify(ode: &Ode3, dom: &SampleDomain) -> Classification {
    invariants(ode, dom).classification
}
