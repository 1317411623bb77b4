//! Contact transformations of the first-order jet space and the check that a
//! candidate transformation linearizes a given equation.
//!
//! A transformation `(x, u, p) -> (x̄, ū, p̄) = (φ, ψ, g)` is a *contact
//! transformation* when the contact structure `du - p dx` is preserved, which
//! reduces to two residuals vanishing identically:
//!
//! ```text
//! R1 = ψ_p - g φ_p
//! R2 = (ψ_x + p ψ_u) - g (φ_x + p φ_u)
//! ```
//!
//! Prolonging to second order along solutions of `u''' = f` realizes the
//! transformed curvature as `q̄ = D_x g / D_x φ`. The transformation maps
//! solutions of the equation to solutions of `ū''' = 0` exactly when the
//! pullback residual `D_x q̄` vanishes identically — that single check, plus
//! the contact conditions and two nondegeneracy gates (`D_x φ` and `φ_p` must
//! not vanish identically), is the whole verification. No inversion of the
//! transformation is ever attempted: checking the forward direction is the
//! same relation read the other way and avoids solving algebraic systems.

use thiserror::Error;

use crate::expr::{
    diff, is_zero, simplify, Expr, SampleDomain, Var, Witness, ZeroVerdict,
};
use crate::jets::{total_derivative, Ode3};

/// A candidate transformation `(x̄, ū, p̄) = (φ, ψ, g)` of the first-order
/// jet space. Components must not mention the curvature `q`; they may mention
/// named constants or abstract functions if the expressions carry them.
///
/// Construction only checks `q`-freeness (after simplification, so a cancelled
/// `q` does not disqualify); whether the contact conditions hold is a
/// semantic question answered by [`is_contact`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTransform {
    phi: Expr,
    psi: Expr,
    g: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("component `{0}` depends on the curvature coordinate q")]
    DependsOnQ(&'static str),
}

impl ContactTransform {
    pub fn new(phi: Expr, psi: Expr, g: Expr) -> Result<ContactTransform, TransformError> {
        let phi = simplify(&phi);
        let psi = simplify(&psi);
        let g = simplify(&g);
        for (name, e) in [("phi", &phi), ("psi", &psi), ("g", &g)] {
            if e.contains_jet(Var::Q) {
                return Err(TransformError::DependsOnQ(name));
            }
        }
        Ok(ContactTransform { phi, psi, g })
    }

    /// The identity `(x, u, p)`.
    pub fn identity() -> ContactTransform {
        ContactTransform { phi: Expr::x(), psi: Expr::u(), g: Expr::p() }
    }

    /// Lift a point transformation `(x, u) -> (φ, ψ)` to the jet space by
    /// solving the contact conditions for the slope component:
    /// `g = (ψ_x + p ψ_u) / (φ_x + p φ_u)`.
    pub fn point_lift(phi: Expr, psi: Expr) -> Result<ContactTransform, TransformError> {
        for (name, e) in [("phi", &phi), ("psi", &psi)] {
            if simplify(e).contains_jet(Var::P) {
                return Err(TransformError::DependsOnQ(name));
            }
        }
        let g = (diff(&psi, Var::X) + Expr::p() * diff(&psi, Var::U))
            / (diff(&phi, Var::X) + Expr::p() * diff(&phi, Var::U));
        ContactTransform::new(phi, psi, g)
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    pub fn psi(&self) -> &Expr {
        &self.psi
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }
}

/// Verdicts for the two contact residuals `(R1, R2)`; the transformation is
/// contact iff both are identically zero.
pub fn is_contact(t: &ContactTransform, dom: &SampleDomain) -> (ZeroVerdict, ZeroVerdict) {
    let (r1, r2) = contact_residuals(t);
    (is_zero(&r1, dom), is_zero(&r2, dom))
}

fn contact_residuals(t: &ContactTransform) -> (Expr, Expr) {
    let r1 = diff(&t.psi, Var::P) - t.g.clone() * diff(&t.phi, Var::P);
    let r2 = (diff(&t.psi, Var::X) + Expr::p() * diff(&t.psi, Var::U))
        - t.g.clone() * (diff(&t.phi, Var::X) + Expr::p() * diff(&t.phi, Var::U));
    (r1, r2)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProlongError {
    #[error("D_x phi vanishes identically; the transformation does not prolong")]
    DegenerateTransform,
}

/// The prolonged curvature `q̄ = D_x g / D_x φ`, simplified.
///
/// Degeneracy (`D_x φ` identically zero) is gated with the default sampling
/// domain; [`verify_linearizing`] re-establishes nondegeneracy on the
/// caller's own domain before trusting the result.
pub fn prolong(t: &ContactTransform, ode: &Ode3) -> Result<Expr, ProlongError> {
    let d_phi = total_derivative(ode, &t.phi);
    if is_zero(&d_phi, &SampleDomain::default()).is_identically_zero() {
        return Err(ProlongError::DegenerateTransform);
    }
    let d_g = total_derivative(ode, &t.g);
    Ok(simplify(&(d_g / d_phi)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Contact conditions hold, both nondegeneracy gates witness nonzero, and
    /// the pullback residual vanishes identically.
    Verified,
    /// Some check failed; `reason` names the first failing one in the order
    /// R1, R2, D_xφ, pullback residual, φ_p. The φ_p gate comes last: a
    /// point transformation (φ_p ≡ 0) can map solutions to solutions, and a
    /// nonzero residual is the more informative refutation; it still blocks
    /// `Verified` because the construction under test assumes φ_p ≠ 0.
    Refuted { reason: String, witness: Option<Witness> },
    /// No check failed outright but at least one came back without a usable
    /// answer.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationVerdict {
    /// Verdicts for the contact residuals `(R1, R2)`; both must be
    /// identically zero.
    pub contact_ok: (ZeroVerdict, ZeroVerdict),
    /// Verdict on `D_x φ`; must be nonzero for the prolongation to exist.
    pub nondegenerate_dphi: ZeroVerdict,
    /// Verdict on `φ_p`; must be nonzero (the standing assumption of the
    /// construction).
    pub nondegenerate_phi_p: ZeroVerdict,
    /// `q̄ = D_x g / D_x φ`, when `D_x φ` is not identically zero.
    pub prolonged: Option<Expr>,
    /// `D_x q̄`, simplified, when the prolongation exists.
    pub pullback_residual: Option<Expr>,
    /// Verdict on the pullback residual; must be identically zero.
    pub residual_verdict: Option<ZeroVerdict>,
    pub verdict: Verdict,
}

/// Check that `t` maps solutions of `ode` to solutions of `ū''' = 0`.
pub fn verify_linearizing(
    ode: &Ode3,
    t: &ContactTransform,
    dom: &SampleDomain,
) -> LinearizationVerdict {
    let contact_ok = is_contact(t, dom);
    let nondegenerate_dphi = is_zero(&total_derivative(ode, &t.phi), dom);
    let nondegenerate_phi_p = is_zero(&diff(&t.phi, Var::P), dom);

    let prolonged = if nondegenerate_dphi.is_identically_zero() {
        None
    } else {
        // Division by a possibly-indeterminate D_x φ is still symbolically
        // well-formed; the verdict logic below withholds "Verified" unless
        // the gate is a clean NonZero.
        prolong(t, ode).ok()
    };
    let pullback_residual = prolonged
        .as_ref()
        .map(|qbar| simplify(&total_derivative(ode, qbar)));
    let residual_verdict = pullback_residual.as_ref().map(|r| is_zero(r, dom));

    let verdict = decide(
        &contact_ok,
        &nondegenerate_dphi,
        &nondegenerate_phi_p,
        residual_verdict.as_ref(),
    );

    LinearizationVerdict {
        contact_ok,
        nondegenerate_dphi,
        nondegenerate_phi_p,
        prolonged,
        pullback_residual,
        residual_verdict,
        verdict,
    }
}

fn decide(
    contact_ok: &(ZeroVerdict, ZeroVerdict),
    dphi: &ZeroVerdict,
    phi_p: &ZeroVerdict,
    residual: Option<&ZeroVerdict>,
) -> Verdict {
    if let ZeroVerdict::NonZero { witness, .. } = &contact_ok.0 {
        return Verdict::Refuted {
            reason: "contact residual R1 = psi_p - g*phi_p is nonzero".to_string(),
            witness: Some(witness.clone()),
        };
    }
    if let ZeroVerdict::NonZero { witness, .. } = &contact_ok.1 {
        return Verdict::Refuted {
            reason: "contact residual R2 = (psi_x + p*psi_u) - g*(phi_x + p*phi_u) is nonzero"
                .to_string(),
            witness: Some(witness.clone()),
        };
    }
    if dphi.is_identically_zero() {
        return Verdict::Refuted {
            reason: "D_x phi vanishes identically; the transformation is degenerate".to_string(),
            witness: None,
        };
    }
    if let Some(ZeroVerdict::NonZero { witness, .. }) = residual {
        return Verdict::Refuted {
            reason: "pullback residual D_x q-bar is nonzero; the image does not satisfy \
                     u-bar''' = 0"
                .to_string(),
            witness: Some(witness.clone()),
        };
    }
    if phi_p.is_identically_zero() {
        return Verdict::Refuted {
            reason: "phi_p vanishes identically; genuine contact transformations require \
                     phi_p != 0"
                .to_string(),
            witness: None,
        };
    }

    let all_pass = contact_ok.0.is_identically_zero()
        && contact_ok.1.is_identically_zero()
        && dphi.is_nonzero()
        && phi_p.is_nonzero()
        && matches!(residual, Some(v) if v.is_identically_zero());
    if all_pass {
        Verdict::Verified
    } else {
        Verdict::Indeterminate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, parse, Bindings, Context, JetPoint};

    fn e(src: &str) -> Expr {
        parse(src, &Context::new()).unwrap()
    }

    fn ode(src: &str) -> Ode3 {
        Ode3::from_rhs(e(src)).unwrap()
    }

    fn transform(phi: &str, psi: &str, g: &str) -> ContactTransform {
        ContactTransform::new(e(phi), e(psi), e(g)).unwrap()
    }

    /// φ = 2√p, ψ = u - p x, p̄ = -x√p; linearizes u''' = 3q²/(2p).
    fn halved_parabola_transform() -> ContactTransform {
        transform("2*sqrt(p)", "u - p*x", "-x*sqrt(p)")
    }

    /// Linearizes u''' = 3pq²/(1+p²).
    fn arclength_transform() -> ContactTransform {
        transform(
            "p + sqrt(1+p^2)",
            "(u - p*x)*(p + sqrt(1+p^2))",
            "u - x*(p + sqrt(1+p^2))",
        )
    }

    fn zero(ex: &Expr) -> bool {
        is_zero(ex, &SampleDomain::default()).is_identically_zero()
    }

    #[test]
    fn q_dependence_is_rejected_after_simplification() {
        assert_eq!(
            ContactTransform::new(Expr::q(), Expr::u(), Expr::p()),
            Err(TransformError::DependsOnQ("phi"))
        );
        // q - q cancels, so this is fine.
        let phi = Expr::x() + Expr::q() - Expr::q();
        assert!(ContactTransform::new(phi, Expr::u(), Expr::p()).is_ok());
    }

    #[test]
    fn identity_is_contact_and_prolongs_to_q() {
        let dom = SampleDomain::default();
        let id = ContactTransform::identity();
        let (r1, r2) = is_contact(&id, &dom);
        assert!(r1.is_identically_zero() && r2.is_identically_zero());
        for f in ["0", "q^2", "3*q^2/(2*p)", "u*p + x"] {
            assert_eq!(prolong(&id, &ode(f)).unwrap(), Expr::q());
        }
    }

    #[test]
    fn worked_transforms_are_contact() {
        let dom = SampleDomain::default();
        for t in [halved_parabola_transform(), arclength_transform()] {
            let (r1, r2) = is_contact(&t, &dom);
            assert!(r1.is_identically_zero(), "R1: {r1:?}");
            assert!(r2.is_identically_zero(), "R2: {r2:?}");
        }
    }

    #[test]
    fn broken_slope_component_fails_r2() {
        let (r1, r2) = is_contact(
            &transform("x", "u", "p + 1"),
            &SampleDomain::default(),
        );
        assert!(r1.is_identically_zero());
        // R2 = p - (p+1) = -1 everywhere.
        match r2 {
            ZeroVerdict::NonZero { witness, .. } => {
                assert!((witness.value + 1.0).abs() < 1e-12)
            }
            v => panic!("expected NonZero, got {v:?}"),
        }
    }

    #[test]
    fn prolongation_of_first_worked_transform_is_rational() {
        let qbar = prolong(&halved_parabola_transform(), &ode("3*q^2/(2*p)")).unwrap();
        assert!(zero(&(qbar.clone() - e("-p/q - x/2"))));
        // The radical cancels completely: the simplified form has no
        // fractional powers left, so the exact tier can decide the residual.
        assert!(!qbar.to_string().contains("^(1/2)"), "got {qbar}");
    }

    #[test]
    fn first_worked_pullback_residual_is_exactly_zero() {
        let ode3 = ode("3*q^2/(2*p)");
        let qbar = prolong(&halved_parabola_transform(), &ode3).unwrap();
        let residual = total_derivative(&ode3, &qbar);
        match is_zero(&residual, &SampleDomain::default()) {
            ZeroVerdict::IdenticallyZero { exact, .. } => assert!(exact, "wanted exact tier"),
            v => panic!("expected zero, got {v:?}"),
        }
    }

    #[test]
    fn second_worked_prolongation_matches_closed_form_value() {
        let qbar = prolong(&arclength_transform(), &ode("3*p*q^2/(1+p^2)")).unwrap();
        let at = JetPoint::new(0.0, 1.0, 1.0, 1.0);
        let got = eval(&qbar, &at, &Bindings::none()).unwrap();
        // -(1+p^2)(sqrt(1+p^2)-p)/q - x at (0,1,1,1) = -2(sqrt(2)-1).
        let want = -2.0 * (2.0_f64.sqrt() - 1.0);
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn worked_transforms_verify() {
        let dom = SampleDomain::default();
        let v1 = verify_linearizing(&ode("3*q^2/(2*p)"), &halved_parabola_transform(), &dom);
        assert_eq!(v1.verdict, Verdict::Verified, "{v1:?}");
        let v2 = verify_linearizing(&ode("3*p*q^2/(1+p^2)"), &arclength_transform(), &dom);
        assert_eq!(v2.verdict, Verdict::Verified, "{v2:?}");
    }

    #[test]
    fn identity_transform_is_refuted_on_nonlinear_equation() {
        let v = verify_linearizing(
            &ode("3*q^2/(2*p)"),
            &ContactTransform::identity(),
            &SampleDomain::default(),
        );
        match v.verdict {
            Verdict::Refuted { reason, witness } => {
                assert!(reason.contains("pullback residual"), "{reason}");
                assert!(witness.is_some());
            }
            other => panic!("expected Refuted, got {other:?}"),
        }
        // The residual is D_x q = f itself.
        assert!(zero(&(v.pullback_residual.unwrap() - e("3*q^2/(2*p)"))));
    }

    #[test]
    fn constant_phi_does_not_prolong() {
        let t = transform("1", "u", "p");
        assert_eq!(
            prolong(&t, &ode("q^2")),
            Err(ProlongError::DegenerateTransform)
        );
        let v = verify_linearizing(&ode("q^2"), &t, &SampleDomain::default());
        assert!(matches!(v.verdict, Verdict::Refuted { .. }));
        assert!(v.prolonged.is_none());
    }

    #[test]
    fn p_independent_phi_fails_the_phi_p_gate() {
        // φ = x is nondegenerate in D_x but has φ_p = 0; pair it with
        // components that keep the contact conditions intact (a point lift).
        let t = ContactTransform::point_lift(e("x"), e("u + x")).unwrap();
        let v = verify_linearizing(&ode("0"), &t, &SampleDomain::default());
        match v.verdict {
            Verdict::Refuted { reason, .. } => assert!(reason.contains("phi_p"), "{reason}"),
            other => panic!("expected Refuted, got {other:?}"),
        }
    }

    #[test]
    fn point_lifts_satisfy_the_contact_conditions() {
        let dom = SampleDomain::default();
        for (phi, psi) in [("x + u^2", "u"), ("x*u", "u - x"), ("exp(x)", "u*x + 1")] {
            let t = ContactTransform::point_lift(e(phi), e(psi)).unwrap();
            let (r1, r2) = is_contact(&t, &dom);
            assert!(
                r1.is_identically_zero() && r2.is_identically_zero(),
                "lift of ({phi}, {psi}): {r1:?}, {r2:?}"
            );
        }
    }

    #[test]
    fn scaling_preserves_every_verdict_and_divides_the_prolongation() {
        let dom = SampleDomain::default();
        let ode3 = ode("3*q^2/(2*p)");
        let t = halved_parabola_transform();
        let c = 3;
        let scaled = ContactTransform::new(
            Expr::int(c) * t.phi().clone(),
            Expr::int(c) * t.psi().clone(),
            t.g().clone(),
        )
        .unwrap();

        let v = verify_linearizing(&ode3, &t, &dom);
        let vs = verify_linearizing(&ode3, &scaled, &dom);
        assert_eq!(v.verdict, Verdict::Verified);
        assert_eq!(vs.verdict, Verdict::Verified);

        // q̄ scales by 1/c, so the verdicts coincide while the expressions
        // differ by exactly that factor.
        let qbar = v.prolonged.unwrap();
        let qbar_scaled = vs.prolonged.unwrap();
        assert!(zero(&(Expr::int(c) * qbar_scaled - qbar)));
    }
}
