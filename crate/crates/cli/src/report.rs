//! Machine- and human-readable run reports.
//!
//! JSON schema (field order is fixed; optional fields are omitted when
//! absent):
//!
//! ```json
//! {
//!   "version": "0.1.0",
//!   "command": "classify",
//!   "inputs": { "f": "3*q^2/(2*p)" },
//!   "verdicts": [ { "name": "wunschmann", "verdict": "identically-zero",
//!                   "detail": "exact proof" } ],
//!   "classification": "maximal-contact",
//!   "witnesses": [ { "check": "wunschmann", "x": 0.1, "u": 0.2, "p": 1.0,
//!                    "q": 1.5, "symbols": [], "value": -13.5 } ],
//!   "drift": { "a1": 1.2e-9 },
//!   "seed": 424242,
//!   "timing_ms": 12
//! }
//! ```
//!
//! Re-running with the same inputs and seed reproduces every byte except
//! `timing_ms`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use contact3::expr::{Witness, ZeroVerdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WitnessReport {
    /// Name of the check that produced this witness.
    pub check: String,
    pub x: f64,
    pub u: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<(String, f64)>,
    pub value: f64,
}

impl WitnessReport {
    pub fn from_witness(check: &str, w: &Witness) -> WitnessReport {
        WitnessReport {
            check: check.to_string(),
            x: w.point.x,
            u: w.point.u,
            p: w.point.p,
            q: w.point.q,
            symbols: w.symbols.clone(),
            value: w.value,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    /// `identically-zero`, `nonzero`, `indeterminate`, or a command-specific
    /// status such as `verified`, `reported`, `completed`.
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Expected status, present only for corpus entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
}

impl CheckReport {
    pub fn status(name: impl Into<String>, verdict: impl Into<String>) -> CheckReport {
        CheckReport { name: name.into(), verdict: verdict.into(), detail: None, expected: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckReport {
        self.detail = Some(detail.into());
        self
    }

    pub fn with_expected(mut self, expected: impl Into<String>) -> CheckReport {
        self.expected = Some(expected.into());
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub verdicts: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
    pub witnesses: Vec<WitnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<BTreeMap<String, f64>>,
    pub seed: u64,
    pub timing_ms: u128,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Report {
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdicts: Vec::new(),
            classification: None,
            witnesses: Vec::new(),
            drift: None,
            seed,
            timing_ms: 0,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<String>) {
        self.inputs.insert(key.to_string(), value.into());
    }

    /// Record a zero-test: the check entry plus, for a nonzero verdict, its
    /// witness.
    pub fn zero_check(&mut self, name: &str, v: &ZeroVerdict) {
        let (check, witness) = zero_check_entry(name, v);
        self.verdicts.push(check);
        self.witnesses.extend(witness);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}  (v{})", self.command, self.version);
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input {k}: {v}");
        }
        for c in &self.verdicts {
            let _ = write!(s, "check {}: {}", c.name, c.verdict);
            if let Some(d) = &c.detail {
                let _ = write!(s, " — {d}");
            }
            if let Some(e) = &c.expected {
                let _ = write!(s, " [expected: {e}]");
            }
            s.push('\n');
        }
        if let Some(c) = &self.classification {
            let _ = writeln!(s, "result: {c}");
        }
        for w in &self.witnesses {
            let _ = writeln!(
                s,
                "witness [{}]: value {:e} at (x,u,p,q) = ({}, {}, {}, {}){}",
                w.check,
                w.value,
                w.x,
                w.u,
                w.p,
                w.q,
                if w.symbols.is_empty() {
                    String::new()
                } else {
                    format!(
                        ", {}",
                        w.symbols
                            .iter()
                            .map(|(n, v)| format!("{n} = {v}"))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                },
            );
        }
        if let Some(drift) = &self.drift {
            for (name, v) in drift {
                let _ = writeln!(s, "max drift {name}: {v:e}");
            }
        }
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "time: {} ms", self.timing_ms);
        s
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            self.to_json()
        } else {
            self.to_text()
        }
    }
}

/// Render one zero-test as a check entry plus, for a nonzero verdict, its
/// witness.
pub fn zero_check_entry(name: &str, v: &ZeroVerdict) -> (CheckReport, Option<WitnessReport>) {
    match v {
        ZeroVerdict::IdenticallyZero { exact: true, .. } => {
            (CheckReport::status(name, "identically-zero").with_detail("exact proof"), None)
        }
        ZeroVerdict::IdenticallyZero { samples, .. } => (
            CheckReport::status(name, "identically-zero")
                .with_detail(format!("sampled at {samples} points")),
            None,
        ),
        ZeroVerdict::NonZero { witness, samples } => (
            CheckReport::status(name, "nonzero")
                .with_detail(format!("witness value {:e} ({samples} samples)", witness.value)),
            Some(WitnessReport::from_witness(name, witness)),
        ),
        ZeroVerdict::Indeterminate { samples, failures } => (
            CheckReport::status(name, "indeterminate")
                .with_detail(format!("{samples} samples, {failures} failed evaluations")),
            None,
        ),
    }
}

pub fn classification_label(c: &contact3::jets::Classification) -> &'static str {
    use contact3::jets::Classification;
    match c {
        Classification::MaximalContact => "maximal-contact",
        Classification::NotMaximal { .. } => "not-maximal",
        Classification::Indeterminate => "indeterminate",
    }
}

pub fn verdict_label(v: &contact3::contact::Verdict) -> &'static str {
    use contact3::contact::Verdict;
    match v {
        Verdict::Verified => "verified",
        Verdict::Refuted { .. } => "refuted",
        Verdict::Indeterminate => "indeterminate",
    }
}

/// Process exit status: 0 = positive verdict, 1 = negative verdict,
/// 2 = indeterminate. Usage and parse errors exit 3 before a report exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Positive,
    Negative,
    Indeterminate,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Positive => 0,
            Outcome::Negative => 1,
            Outcome::Indeterminate => 2,
        }
    }

    pub fn from_zero_checks<'a>(mut verdicts: impl Iterator<Item = &'a ZeroVerdict>) -> Outcome {
        let mut indeterminate = false;
        for v in verdicts.by_ref() {
            match v {
                ZeroVerdict::NonZero { .. } => return Outcome::Negative,
                ZeroVerdict::Indeterminate { .. } => indeterminate = true,
                ZeroVerdict::IdenticallyZero { .. } => {}
            }
        }
        if indeterminate {
            Outcome::Indeterminate
        } else {
            Outcome::Positive
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trips() {
        let mut r = Report::new("classify", 7);
        r.input("f", "q^2");
        r.verdicts.push(CheckReport::status("wunschmann", "nonzero").with_detail("witness"));
        r.classification = Some("not-maximal".to_string());
        r.witnesses.push(WitnessReport {
            check: "wunschmann".into(),
            x: 0.0,
            u: 0.25,
            p: 1.0,
            q: 1.5,
            symbols: vec![],
            value: -13.5,
        });
        let json = r.to_json();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn optional_fields_are_omitted() {
        let r = Report::new("classify", 7);
        let json = r.to_json();
        assert!(!json.contains("classification"));
        assert!(!json.contains("drift"));
        assert!(json.contains("timing_ms"));
    }

    #[test]
    fn outcome_aggregation() {
        use contact3::expr::ZeroVerdict::*;
        let zero = IdenticallyZero { samples: 0, exact: true };
        let indet = Indeterminate { samples: 3, failures: 45 };
        assert_eq!(
            Outcome::from_zero_checks([zero.clone(), zero.clone()].iter()),
            Outcome::Positive
        );
        assert_eq!(
            Outcome::from_zero_checks([zero.clone(), indet.clone()].iter()),
            Outcome::Indeterminate
        );
        assert_eq!(Outcome::from_zero_checks([].iter()), Outcome::Positive);
        assert_eq!(Outcome::Positive.exit_code(), 0);
        assert_eq!(Outcome::Negative.exit_code(), 1);
        assert_eq!(Outcome::Indeterminate.exit_code(), 2);
    }
}
