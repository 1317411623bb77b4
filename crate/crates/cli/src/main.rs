//! Command-line front end: classify equations, verify transformations and
//! auxiliary-function systems, integrate the auxiliary flow, and run the
//! built-in example corpus.
//!
//! Exit codes: 0 = positive verdict (maximal symmetry / verified / all
//! residuals zero / flow completed / corpus matched), 1 = negative verdict,
//! 2 = indeterminate, 3 = usage, parse, or I/O error.

mod corpus;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use contact3::auxiliary::{
    check_aux_system, check_transform_system, flow_drift_report, integrate_flow, trajectory_csv,
    AuxiliaryFunctions, FlowError, FlowState,
};
use contact3::contact::{verify_linearizing, ContactTransform, Verdict};
use contact3::expr::{
    eval, parse, Bindings, Context, Expr, JetPoint, ParseError, SampleDomain, Var, DEFAULT_SEED,
};
use contact3::jets::{invariants, structure_functions, Ode3};
use report::{classification_label, verdict_label, CheckReport, Outcome, Report};

#[derive(Parser)]
#[command(
    name = "contact3",
    version,
    about = "Classify scalar third-order ODEs u''' = f(x,u,u',u'') by contact symmetry \
             and verify linearizing contact transformations",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether u''' = f admits the maximal (ten-dimensional) contact
    /// symmetry algebra
    Classify(ClassifyArgs),
    /// Like `classify`, with structure functions and invariant expressions
    /// included in the report
    Invariants(ClassifyArgs),
    /// Verify that a contact transformation maps solutions of u''' = f to
    /// solutions of the canonical equation
    VerifyTransform(VerifyTransformArgs),
    /// Check candidate auxiliary functions against their defining system
    /// (and, with --phi/--psi/--g, a transformation against its system)
    VerifyAux(VerifyAuxArgs),
    /// Integrate the auxiliary flow along a solution curve and report drift
    /// against the given closed forms
    Flow(FlowArgs),
    /// Run the built-in example corpus and compare against expected verdicts
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Override a sampling interval as VAR:LO:HI with VAR one of x,u,p,q
    /// (repeatable)
    #[arg(long, value_name = "VAR:LO:HI")]
    domain: Vec<String>,
    /// Seed for the sampling zero-tests
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Successful samples required per zero-test
    #[arg(long)]
    samples: Option<usize>,
    /// Relative tolerance for the sampling zero-tests
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here as well; the `flow` command writes the
    /// trajectory table (CSV) instead
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SymbolOpts {
    /// Declare a named constant usable in expressions (repeatable)
    #[arg(long = "const", value_name = "NAME")]
    constants: Vec<String>,
    /// Declare an abstract function of x usable in expressions (repeatable)
    #[arg(long = "func", value_name = "NAME")]
    funcs: Vec<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Right-hand side f(x,u,p,q) of u''' = f
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    #[command(flatten)]
    symbols: SymbolOpts,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct VerifyTransformArgs {
    /// Right-hand side f(x,u,p,q) of u''' = f
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// First component x̄ = φ(x,u,p)
    #[arg(long, allow_hyphen_values = true)]
    phi: String,
    /// Second component ū = ψ(x,u,p)
    #[arg(long, allow_hyphen_values = true)]
    psi: String,
    /// Third component p̄ = g(x,u,p)
    #[arg(long, allow_hyphen_values = true)]
    g: String,
    #[command(flatten)]
    symbols: SymbolOpts,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct VerifyAuxArgs {
    /// Right-hand side f(x,u,p,q) of u''' = f
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    #[arg(long, allow_hyphen_values = true)]
    a1: String,
    #[arg(long, allow_hyphen_values = true)]
    a2: String,
    #[arg(long, allow_hyphen_values = true)]
    a3: String,
    #[arg(long, allow_hyphen_values = true)]
    a7: String,
    #[arg(long, allow_hyphen_values = true)]
    a8: String,
    #[arg(long, allow_hyphen_values = true)]
    chi44: String,
    /// Transformation component φ (requires --psi and --g)
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Transformation component ψ
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    /// Transformation component g
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[command(flatten)]
    symbols: SymbolOpts,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct FlowArgs {
    /// Right-hand side f(x,u,p,q) of u''' = f
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// Closed-form auxiliary functions; initial values are their evaluations
    /// at the start point, and drift is measured against them
    #[arg(long, allow_hyphen_values = true)]
    a1: String,
    #[arg(long, allow_hyphen_values = true)]
    a2: String,
    #[arg(long, allow_hyphen_values = true)]
    a3: String,
    #[arg(long, allow_hyphen_values = true)]
    a7: String,
    #[arg(long, allow_hyphen_values = true)]
    a8: String,
    #[arg(long, allow_hyphen_values = true)]
    chi44: String,
    /// Initial jet point as X:U:P:Q
    #[arg(long, value_name = "X:U:P:Q", allow_hyphen_values = true)]
    start: String,
    /// Initial value of the primitive φ
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi0: f64,
    /// Fixed integration step
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Integration horizon (trajectory length in x)
    #[arg(long, default_value_t = 0.5)]
    horizon: f64,
    #[command(flatten)]
    symbols: SymbolOpts,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct CorpusArgs {
    /// Worker threads for independent cases
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    opts: RunOpts,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let started = Instant::now();
    let (mut report, outcome, opts, csv) = match run(cli.command) {
        Ok(run) => run,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    };
    report.timing_ms = started.elapsed().as_millis();

    let rendered = report.render(opts.format == Format::Json);
    print!("{rendered}");
    if let Some(path) = &opts.out {
        let artifact = csv.as_deref().unwrap_or(&rendered);
        if let Err(e) = std::fs::write(path, artifact) {
            eprintln!("error: cannot write {}: {e}", path.display());
            std::process::exit(3);
        }
    }
    std::process::exit(outcome.exit_code());
}

type RunOutput = (Report, Outcome, RunOpts, Option<String>);

fn run(command: Command) -> Result<RunOutput, String> {
    match command {
        Command::Classify(args) => run_classify(args, false),
        Command::Invariants(args) => run_classify(args, true),
        Command::VerifyTransform(args) => run_verify_transform(args),
        Command::VerifyAux(args) => run_verify_aux(args),
        Command::Flow(args) => run_flow(args),
        Command::Corpus(args) => run_corpus(args),
    }
}

/// Point the user at the exact byte that broke an expression.
fn diagnose(flag: &str, src: &str, err: &ParseError) -> String {
    let offset = err.offset().min(src.len());
    format!("--{flag}: {err}\n    {src}\n    {caret:>width$}", caret = "^", width = offset + 1)
}

fn parse_arg(flag: &str, src: &str, ctx: &Context) -> Result<Expr, String> {
    parse(src, ctx).map_err(|e| diagnose(flag, src, &e))
}

fn build_context(symbols: &SymbolOpts) -> Result<Context, String> {
    let mut ctx = Context::new();
    for name in &symbols.constants {
        ctx.declare_param(name).map_err(|e| format!("--const {name}: {e}"))?;
    }
    for name in &symbols.funcs {
        ctx.declare_func(name).map_err(|e| format!("--func {name}: {e}"))?;
    }
    Ok(ctx)
}

fn build_domain(opts: &RunOpts) -> Result<SampleDomain, String> {
    let mut dom = SampleDomain::default().with_seed(opts.seed);
    if let Some(samples) = opts.samples {
        if samples == 0 {
            return Err("--samples must be positive".to_string());
        }
        dom = dom.with_samples(samples);
    }
    if let Some(tol) = opts.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(format!("--tol must be positive and finite, got {tol}"));
        }
        dom = dom.with_tol(tol);
    }
    for spec in &opts.domain {
        let parts: Vec<&str> = spec.split(':').collect();
        let [var, lo, hi] = parts.as_slice() else {
            return Err(format!("--domain {spec}: expected VAR:LO:HI"));
        };
        let var = Var::from_name(var)
            .ok_or_else(|| format!("--domain {spec}: variable must be one of x, u, p, q"))?;
        let lo: f64 = lo.parse().map_err(|e| format!("--domain {spec}: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("--domain {spec}: {e}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("--domain {spec}: need finite LO <= HI"));
        }
        dom.set_interval(var, lo, hi);
    }
    Ok(dom)
}

fn echo_common_inputs(report: &mut Report, opts: &RunOpts) {
    if !opts.domain.is_empty() {
        report.input("domain", opts.domain.join(" "));
    }
    if let Some(samples) = opts.samples {
        report.input("samples", samples.to_string());
    }
    if let Some(tol) = opts.tol {
        report.input("tol", format!("{tol:e}"));
    }
}

fn build_ode(f_src: &str, ctx: &Context) -> Result<Ode3, String> {
    let f = parse_arg("f", f_src, ctx)?;
    Ode3::new(f, ctx.clone()).map_err(|e| format!("--f: {e}"))
}

fn run_classify(args: ClassifyArgs, detailed: bool) -> Result<RunOutput, String> {
    let ctx = build_context(&args.symbols)?;
    let dom = build_domain(&args.opts)?;
    let ode = build_ode(&args.f, &ctx)?;

    let mut report = Report::new(if detailed { "invariants" } else { "classify" }, dom.seed());
    report.input("f", &args.f);
    echo_common_inputs(&mut report, &args.opts);

    if detailed {
        let s = structure_functions(&ode);
        for (name, e) in [("s1", &s.s1), ("s2", &s.s2), ("s3", &s.s3), ("s4", &s.s4)] {
            report
                .verdicts
                .push(CheckReport::status(format!("structure.{name}"), "reported")
                    .with_detail(e.to_string()));
        }
    }

    let inv = invariants(&ode, &dom);
    if detailed {
        for (name, i) in
            [("wunschmann", &inv.wunschmann), ("f_qqq", &inv.f_qqq), ("f_qqqq", &inv.f_qqqq)]
        {
            report
                .verdicts
                .push(CheckReport::status(format!("{name}.expr"), "reported")
                    .with_detail(i.simplified.to_string()));
        }
    }
    report.zero_check("wunschmann", &inv.wunschmann.verdict);
    report.zero_check("f_qqq", &inv.f_qqq.verdict);
    report.zero_check("f_qqqq", &inv.f_qqqq.verdict);

    let label = classification_label(&inv.classification);
    report.classification = Some(label.to_string());
    let outcome = match label {
        "maximal-contact" => Outcome::Positive,
        "not-maximal" => Outcome::Negative,
        _ => Outcome::Indeterminate,
    };
    Ok((report, outcome, args.opts, None))
}

fn run_verify_transform(args: VerifyTransformArgs) -> Result<RunOutput, String> {
    let ctx = build_context(&args.symbols)?;
    let dom = build_domain(&args.opts)?;
    let ode = build_ode(&args.f, &ctx)?;
    let phi = parse_arg("phi", &args.phi, &ctx)?;
    let psi = parse_arg("psi", &args.psi, &ctx)?;
    let g = parse_arg("g", &args.g, &ctx)?;
    let t = ContactTransform::new(phi, psi, g).map_err(|e| e.to_string())?;

    let mut report = Report::new("verify-transform", dom.seed());
    report.input("f", &args.f);
    report.input("phi", &args.phi);
    report.input("psi", &args.psi);
    report.input("g", &args.g);
    echo_common_inputs(&mut report, &args.opts);

    let v = verify_linearizing(&ode, &t, &dom);
    report.zero_check("contact.r1", &v.contact_ok.0);
    report.zero_check("contact.r2", &v.contact_ok.1);
    report.zero_check("nondegeneracy.dphi", &v.nondegenerate_dphi);
    report.zero_check("nondegeneracy.phi_p", &v.nondegenerate_phi_p);
    if let Some(qbar) = &v.prolonged {
        report
            .verdicts
            .push(CheckReport::status("prolonged", "reported").with_detail(qbar.to_string()));
    }
    if let Some(rv) = &v.residual_verdict {
        report.zero_check("pullback-residual", rv);
    }

    let label = verdict_label(&v.verdict);
    if let Verdict::Refuted { reason, .. } = &v.verdict {
        report
            .verdicts
            .push(CheckReport::status("refutation", "refuted").with_detail(reason.clone()));
    }
    report.classification = Some(label.to_string());
    let outcome = match v.verdict {
        Verdict::Verified => Outcome::Positive,
        Verdict::Refuted { .. } => Outcome::Negative,
        Verdict::Indeterminate => Outcome::Indeterminate,
    };
    Ok((report, outcome, args.opts, None))
}

fn parse_aux(
    srcs: [&String; 6],
    ctx: &Context,
) -> Result<AuxiliaryFunctions, String> {
    let flags = ["a1", "a2", "a3", "a7", "a8", "chi44"];
    let mut parsed = Vec::with_capacity(6);
    for (flag, src) in flags.iter().zip(srcs) {
        parsed.push(parse_arg(flag, src, ctx)?);
    }
    let [a1, a2, a3, a7, a8, chi44]: [Expr; 6] = parsed.try_into().expect("six components");
    AuxiliaryFunctions::new(a1, a2, a3, a7, a8, chi44).map_err(|e| e.to_string())
}

fn run_verify_aux(args: VerifyAuxArgs) -> Result<RunOutput, String> {
    let ctx = build_context(&args.symbols)?;
    let dom = build_domain(&args.opts)?;
    let ode = build_ode(&args.f, &ctx)?;
    let aux = parse_aux([&args.a1, &args.a2, &args.a3, &args.a7, &args.a8, &args.chi44], &ctx)?;

    let transform = match (&args.phi, &args.psi, &args.g) {
        (None, None, None) => None,
        (Some(phi), Some(psi), Some(g)) => {
            let phi = parse_arg("phi", phi, &ctx)?;
            let psi = parse_arg("psi", psi, &ctx)?;
            let g = parse_arg("g", g, &ctx)?;
            Some(ContactTransform::new(phi, psi, g).map_err(|e| e.to_string())?)
        }
        _ => return Err("--phi, --psi, and --g must be given together".to_string()),
    };

    let mut report = Report::new("verify-aux", dom.seed());
    report.input("f", &args.f);
    for (name, src) in [
        ("a1", &args.a1),
        ("a2", &args.a2),
        ("a3", &args.a3),
        ("a7", &args.a7),
        ("a8", &args.a8),
        ("chi44", &args.chi44),
    ] {
        report.input(name, src);
    }
    echo_common_inputs(&mut report, &args.opts);

    let mut verdicts = Vec::new();
    let aux_res = check_aux_system(&ode, &aux, &dom).map_err(|e| e.to_string())?;
    for r in &aux_res.residuals {
        report.zero_check(&format!("aux.{}", r.name), &r.verdict);
        verdicts.push(r.verdict.clone());
    }
    if let Some(t) = &transform {
        report.input("phi", args.phi.as_deref().unwrap_or_default());
        report.input("psi", args.psi.as_deref().unwrap_or_default());
        report.input("g", args.g.as_deref().unwrap_or_default());
        let t_res = check_transform_system(&ode, &aux, t, &dom).map_err(|e| e.to_string())?;
        for r in &t_res.residuals {
            report.zero_check(&format!("transform.{}", r.name), &r.verdict);
            verdicts.push(r.verdict.clone());
        }
    }

    let outcome = Outcome::from_zero_checks(verdicts.iter());
    report.classification = Some(
        match outcome {
            Outcome::Positive => "solution",
            Outcome::Negative => "not-a-solution",
            Outcome::Indeterminate => "indeterminate",
        }
        .to_string(),
    );
    Ok((report, outcome, args.opts, None))
}

fn parse_start(spec: &str) -> Result<JetPoint, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [x, u, p, q] = parts.as_slice() else {
        return Err(format!("--start {spec}: expected X:U:P:Q"));
    };
    let mut vals = [0.0f64; 4];
    for (slot, part) in vals.iter_mut().zip([x, u, p, q]) {
        *slot = part.parse().map_err(|e| format!("--start {spec}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("--start {spec}: coordinates must be finite"));
        }
    }
    Ok(JetPoint::new(vals[0], vals[1], vals[2], vals[3]))
}

fn run_flow(args: FlowArgs) -> Result<RunOutput, String> {
    let ctx = build_context(&args.symbols)?;
    let dom = build_domain(&args.opts)?;
    let ode = build_ode(&args.f, &ctx)?;
    let aux = parse_aux([&args.a1, &args.a2, &args.a3, &args.a7, &args.a8, &args.chi44], &ctx)?;
    let start_point = parse_start(&args.start)?;
    if !(args.step.is_finite() && args.step > 0.0) {
        return Err(format!("--step must be positive and finite, got {}", args.step));
    }
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(format!("--horizon must be positive and finite, got {}", args.horizon));
    }
    let n_steps = (args.horizon / args.step).round().max(1.0) as usize;

    let none = Bindings::none();
    let mut init = [0.0f64; 6];
    for (slot, (name, e)) in init.iter_mut().zip(aux.components()) {
        *slot = eval(e, &start_point, &none)
            .map_err(|e| format!("--{name}: cannot evaluate at the start point: {e}"))?;
    }
    let start = FlowState::new(start_point, init, args.phi0);

    let mut report = Report::new("flow", dom.seed());
    report.input("f", &args.f);
    for (name, src) in [
        ("a1", &args.a1),
        ("a2", &args.a2),
        ("a3", &args.a3),
        ("a7", &args.a7),
        ("a8", &args.a8),
        ("chi44", &args.chi44),
    ] {
        report.input(name, src);
    }
    report.input("start", &args.start);
    report.input("step", format!("{:e}", args.step));
    report.input("horizon", format!("{:e}", args.horizon));
    report.input("phi0", format!("{:e}", args.phi0));
    echo_common_inputs(&mut report, &args.opts);

    match integrate_flow(&ode, &start, args.step, n_steps) {
        Ok(trajectory) => {
            report.verdicts.push(
                CheckReport::status("integration", "completed").with_detail(format!(
                    "{} states, step {:e}",
                    trajectory.len(),
                    args.step
                )),
            );
            let last = trajectory.last().expect("trajectory includes the start");
            report.verdicts.push(CheckReport::status("final-state", "reported").with_detail(
                format!(
                    "t = {:e}, (x,u,p,q) = ({:e}, {:e}, {:e}, {:e}), phi = {:e}",
                    last.t, last.point.x, last.point.u, last.point.p, last.point.q, last.phi
                ),
            ));
            let outcome = match flow_drift_report(&trajectory, &aux) {
                Ok(drift) => {
                    report.drift = Some(
                        drift.max_abs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                    );
                    Outcome::Positive
                }
                Err(e) => {
                    report.verdicts.push(
                        CheckReport::status("drift", "indeterminate")
                            .with_detail(format!("closed forms not evaluable: {e}")),
                    );
                    Outcome::Indeterminate
                }
            };
            report.classification = Some(
                match outcome {
                    Outcome::Positive => "completed",
                    _ => "completed-without-drift",
                }
                .to_string(),
            );
            let csv = args.opts.out.is_some().then(|| trajectory_csv(&trajectory));
            Ok((report, outcome, args.opts, csv))
        }
        Err(FlowError::BadStep) => Err("--step must be positive and finite".to_string()),
        Err(e) => {
            report
                .verdicts
                .push(CheckReport::status("integration", "aborted").with_detail(e.to_string()));
            report.classification = Some("aborted".to_string());
            Ok((report, Outcome::Negative, args.opts, None))
        }
    }
}

fn run_corpus(args: CorpusArgs) -> Result<RunOutput, String> {
    if args.jobs == 0 {
        return Err("--jobs must be positive".to_string());
    }
    let dom = build_domain(&args.opts)?;
    let results = corpus::run_all(&dom, args.jobs);

    let mut report = Report::new("corpus", dom.seed());
    report.input("cases", results.len().to_string());
    report.input("jobs", args.jobs.to_string());
    echo_common_inputs(&mut report, &args.opts);

    let mut all_matched = true;
    let mut any_indeterminate = false;
    for r in &results {
        report.verdicts.push(
            CheckReport::status(r.name, r.actual.clone()).with_expected(r.expected),
        );
        report.verdicts.extend(r.checks.iter().cloned());
        report.witnesses.extend(r.witnesses.iter().cloned());
        all_matched &= r.matched();
        any_indeterminate |= r.actual == "indeterminate";
    }
    report.classification =
        Some(if all_matched { "all-matched" } else { "mismatch" }.to_string());
    let outcome = if all_matched {
        Outcome::Positive
    } else if any_indeterminate {
        Outcome::Indeterminate
    } else {
        Outcome::Negative
    };
    Ok((report, outcome, args.opts, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_overrides_parse() {
        let opts = RunOpts {
            domain: vec!["p:0.25:3".into(), "x:-2:2".into()],
            seed: 7,
            samples: Some(16),
            tol: Some(1e-6),
            format: Format::Text,
            out: None,
        };
        let dom = build_domain(&opts).unwrap();
        assert_eq!(dom.interval(Var::P), (0.25, 3.0));
        assert_eq!(dom.interval(Var::X), (-2.0, 2.0));
        assert_eq!(dom.samples(), 16);
        assert_eq!(dom.seed(), 7);
    }

    #[test]
    fn bad_domain_specs_are_rejected() {
        for spec in ["p:1", "v:0:1", "p:2:1", "p:a:b", "p:0:inf"] {
            let opts = RunOpts {
                domain: vec![spec.into()],
                seed: 0,
                samples: None,
                tol: None,
                format: Format::Text,
                out: None,
            };
            assert!(build_domain(&opts).is_err(), "{spec} should be rejected");
        }
    }

    #[test]
    fn start_point_parses() {
        let pt = parse_start("0:1:1:1").unwrap();
        assert_eq!((pt.x, pt.u, pt.p, pt.q), (0.0, 1.0, 1.0, 1.0));
        assert!(parse_start("0:1:1").is_err());
        assert!(parse_start("0:1:1:nan").is_err());
    }

    #[test]
    fn parse_diagnostics_carry_a_caret() {
        let ctx = Context::new();
        let err = parse_arg("f", "3*q^^2", &ctx).unwrap_err();
        assert!(err.contains("--f"), "{err}");
        assert!(err.lines().last().unwrap().trim_end().ends_with('^'), "{err}");
    }
}
