//! Symbolic and numeric tools for third-order ordinary differential
//! equations `u''' = f(x, u, u', u'')` under contact transformations.
//!
//! The crate answers three questions about such an equation:
//!
//! 1. **Classification** — does it admit the maximal contact symmetry
//!    algebra, i.e. is it contact-equivalent to `u''' = 0`? Two relative
//!    invariants decide this; [`jets::classify`] computes them and reports
//!    the verdict with evidence.
//! 2. **Verification of a linearizing transformation** — given a candidate
//!    contact transformation, [`contact`] checks the contact conditions,
//!    nondegeneracy, and that the transformed equation really is `u''' = 0`.
//! 3. **Verification of auxiliary functions** — the classification has a
//!    constructive side: a system of auxiliary functions whose existence
//!    pins down the transformation. [`auxiliary`] checks a candidate set
//!    symbolically and integrates the associated flow numerically to watch
//!    the claimed first integrals for drift.
//!
//! Everything is built on [`expr`], a small exact-arithmetic expression
//! kernel with differentiation, evaluation, bounded simplification, and a
//! two-tier zero test that never bluffs: answers are exact proofs, sampled
//! evidence with stated budgets, or an explicit indeterminate.

pub mod expr;
pub mod jets;
pub mod contact;
pub mod auxiliary;
