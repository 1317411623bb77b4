//! Built-in example corpus: the two fully worked linearizable equations with
//! their auxiliary functions and transformations, the canonical equation, and
//! two linear equations that fail the maximal-symmetry test.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use contact3::auxiliary::{check_aux_system, check_transform_system, AuxiliaryFunctions};
use contact3::contact::{verify_linearizing, ContactTransform, Verdict};
use contact3::expr::{parse, Context, SampleDomain};
use contact3::jets::{classify, Classification, Ode3};

use crate::report::{
    classification_label, verdict_label, zero_check_entry, CheckReport, WitnessReport,
};

#[derive(Debug, Clone, Copy)]
pub struct CorpusCase {
    pub name: &'static str,
    pub f: &'static str,
    /// `(a1, a2, a3, a7, a8, chi44)` when the case carries a full solution.
    pub aux: Option<[&'static str; 6]>,
    /// `(phi, psi, g)` when the case carries a linearizing transformation.
    pub transform: Option<[&'static str; 3]>,
    /// `verified`, `maximal-contact`, or `not-maximal`.
    pub expected: &'static str,
}

/// The bundled cases, ordered by name. Solution-family names: the first
/// worked equation's solutions are the hyperbolas `u = c3 + c2/(x - c1)`,
/// the second's are circles.
pub fn cases() -> Vec<CorpusCase> {
    vec![
        CorpusCase {
            name: "canonical",
            f: "0",
            aux: None,
            transform: None,
            expected: "maximal-contact",
        },
        CorpusCase {
            name: "circles",
            f: "3*p*q^2/(1+p^2)",
            aux: Some([
                "p + sqrt(1+p^2)",
                "1",
                "sqrt(1+p^2)/q",
                "0",
                "(p + sqrt(1+p^2))/sqrt(1+p^2)",
                "-3*p*q/(p+sqrt(1+p^2))*(1+p^2)^(-3/2)",
            ]),
            transform: Some([
                "p + sqrt(1+p^2)",
                "(u - p*x)*(p + sqrt(1+p^2))",
                "u - x*(p + sqrt(1+p^2))",
            ]),
            expected: "verified",
        },
        CorpusCase {
            name: "hyperbolas",
            f: "3*q^2/(2*p)",
            aux: Some(["1", "0", "sqrt(p)/q", "0", "1/sqrt(p)", "0"]),
            transform: Some(["2*sqrt(p)", "u - p*x", "-x*sqrt(p)"]),
            expected: "verified",
        },
        CorpusCase {
            name: "linear-constant-coefficient",
            f: "-u",
            aux: None,
            transform: None,
            expected: "not-maximal",
        },
        CorpusCase {
            name: "linear-variable-coefficient",
            f: "-x*u",
            aux: None,
            transform: None,
            expected: "not-maximal",
        },
    ]
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub name: &'static str,
    pub expected: &'static str,
    pub actual: String,
    pub checks: Vec<CheckReport>,
    pub witnesses: Vec<WitnessReport>,
}

impl CaseResult {
    pub fn matched(&self) -> bool {
        self.actual == self.expected
    }
}

/// Run one corpus case: classification always; the auxiliary, transformation,
/// and linearization checks when the case bundles a solution.
pub fn run_case(case: &CorpusCase, dom: &SampleDomain) -> CaseResult {
    let ctx = Context::new();
    let ode = Ode3::from_rhs(parse(case.f, &ctx).expect("corpus expression parses"))
        .expect("corpus uses no parameters");
    let mut checks = Vec::new();
    let mut witnesses = Vec::new();

    let classification = classify(&ode, dom);
    let class_label = classification_label(&classification);
    checks.push(CheckReport::status(format!("{}.classification", case.name), class_label));
    if let Classification::NotMaximal { invariant, witness } = &classification {
        witnesses
            .push(WitnessReport::from_witness(&format!("{}.{invariant}", case.name), witness));
    }

    let mut saw_negative = false;
    let mut saw_indeterminate = false;

    if case.aux.is_none() && case.transform.is_none() {
        return CaseResult {
            name: case.name,
            expected: case.expected,
            actual: class_label.to_string(),
            checks,
            witnesses,
        };
    }

    match &classification {
        Classification::MaximalContact => {}
        Classification::NotMaximal { .. } => saw_negative = true,
        Classification::Indeterminate => saw_indeterminate = true,
    }

    let aux_parts = case.aux.expect("full cases carry aux").map(|s| {
        parse(s, &ctx).expect("corpus expression parses")
    });
    let [a1, a2, a3, a7, a8, chi] = aux_parts;
    let aux = AuxiliaryFunctions::new(a1, a2, a3, a7, a8, chi).expect("corpus aux is valid");
    let aux_res = check_aux_system(&ode, &aux, dom).expect("corpus aux is nondegenerate");
    for r in &aux_res.residuals {
        let (check, witness) =
            zero_check_entry(&format!("{}.aux.{}", case.name, r.name), &r.verdict);
        saw_negative |= r.verdict.is_nonzero();
        saw_indeterminate |= !r.verdict.is_identically_zero() && !r.verdict.is_nonzero();
        checks.push(check);
        witnesses.extend(witness);
    }

    let [phi, psi, g] = case
        .transform
        .expect("full cases carry a transform")
        .map(|s| parse(s, &ctx).expect("corpus expression parses"));
    let t = ContactTransform::new(phi, psi, g).expect("corpus transform is valid");
    let t_res = check_transform_system(&ode, &aux, &t, dom).expect("corpus aux is nondegenerate");
    for r in &t_res.residuals {
        let (check, witness) =
            zero_check_entry(&format!("{}.transform.{}", case.name, r.name), &r.verdict);
        saw_negative |= r.verdict.is_nonzero();
        saw_indeterminate |= !r.verdict.is_identically_zero() && !r.verdict.is_nonzero();
        checks.push(check);
        witnesses.extend(witness);
    }

    let lin = verify_linearizing(&ode, &t, dom);
    let lin_label = verdict_label(&lin.verdict);
    let mut lin_check =
        CheckReport::status(format!("{}.linearization", case.name), lin_label);
    if let Verdict::Refuted { reason, witness } = &lin.verdict {
        lin_check = lin_check.with_detail(reason.clone());
        if let Some(w) = witness {
            witnesses
                .push(WitnessReport::from_witness(&format!("{}.linearization", case.name), w));
        }
    }
    checks.push(lin_check);
    match &lin.verdict {
        Verdict::Verified => {}
        Verdict::Refuted { .. } => saw_negative = true,
        Verdict::Indeterminate => saw_indeterminate = true,
    }

    let actual = if saw_negative {
        "refuted"
    } else if saw_indeterminate {
        "indeterminate"
    } else {
        "verified"
    };
    CaseResult {
        name: case.name,
        expected: case.expected,
        actual: actual.to_string(),
        checks,
        witnesses,
    }
}

/// Run every case across `jobs` worker threads; results come back in case
/// order regardless of scheduling.
pub fn run_all(dom: &SampleDomain, jobs: usize) -> Vec<CaseResult> {
    let cases = cases();
    let jobs = jobs.clamp(1, cases.len());
    if jobs == 1 {
        return cases.iter().map(|c| run_case(c, dom)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CaseResult>>> = Mutex::new(vec![None; cases.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cases.len() {
                    break;
                }
                let result = run_case(&cases[i], dom);
                slots.lock().expect("no poisoned workers")[i] = Some(result);
            });
        }
    });
    let results: Vec<CaseResult> = slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect();
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_cases_are_sorted_and_self_consistent() {
        let cases = cases();
        assert_eq!(cases.len(), 5);
        let names: Vec<_> = cases.iter().map(|c| c.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        for case in &cases {
            assert_eq!(case.aux.is_some(), case.transform.is_some());
            assert_eq!(case.aux.is_some(), case.expected == "verified");
        }
    }

    #[test]
    fn every_case_matches_its_expected_verdict() {
        let dom = SampleDomain::default();
        for case in cases() {
            let result = run_case(&case, &dom);
            assert!(
                result.matched(),
                "{}: expected {}, got {}",
                case.name,
                result.expected,
                result.actual
            );
        }
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let dom = SampleDomain::default();
        let serial = run_all(&dom, 1);
        let parallel = run_all(&dom, 4);
        assert_eq!(serial.len(), parallel.len());
        for (s, p) in serial.iter().zip(&parallel) {
            assert_eq!(s.name, p.name);
            assert_eq!(s.actual, p.actual);
            assert_eq!(s.checks, p.checks);
            assert_eq!(s.witnesses, p.witnesses);
        }
    }
}
