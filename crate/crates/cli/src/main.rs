//! `tractorlab` command-line driver.

mod config;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tractorlab::models::{Catalog, ModelGeometry, ModelKind, MODEL_NAMES};
use tractorlab::report::VerificationReport;
use tractorlab::suites::{self, SuiteOptions, SUITE_NAMES};
use tractorlab::GeomError;

use config::{Resolved, Settings};

#[derive(Parser, Debug)]
#[command(name = "tractorlab", version, about = "Numerical projective tractor calculus checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named suite (or the model's default suites) on a model.
    Verify(Flags),
    /// Curved-orbit stratification on the flat model.
    Stratify(Flags),
    /// Holonomy membership sampling.
    Holonomy(Flags),
    /// Leaf-space descent and quotient checks.
    Descend(Flags),
    /// List models, parameters and suites.
    ListModels,
    /// Every applicable suite; the standard model matrix when no model is given.
    All(Flags),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    /// Signature as `P,Q`.
    #[arg(long)]
    signature: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<std::path::PathBuf>,
    /// Suite name, or a comma-separated list.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
    /// TOML file mirroring the flags.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

impl Flags {
    fn settings(&self) -> Settings {
        Settings {
            model: self.model.clone(),
            m: self.m,
            signature: self.signature.clone(),
            tol: self.tol,
            points: self.points,
            seed: self.seed,
            report: self.report.clone(),
            suite: self.suite.clone(),
            jobs: self.jobs,
            timing: self.timing.then_some(true),
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

const STANDARD_MATRIX: &[(&str, usize, usize, usize)] = &[
    ("round_sphere", 1, 2, 0),
    ("round_sphere", 1, 1, 1),
    ("cone", 1, 2, 0),
    ("flat_projective", 1, 1, 1),
    ("flat_projective", 2, 2, 1),
];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<bool, Failure> {
    let (flags, default_model) = match &cmd {
        Command::ListModels => {
            list_models();
            return Ok(true);
        }
        Command::Stratify(f) => (f, "flat_projective"),
        Command::Verify(f) | Command::Holonomy(f) | Command::Descend(f) | Command::All(f) => (f, "round_sphere"),
    };
    let cfg = config::resolve(flags.settings(), flags.config.as_deref(), std::env::var("TRACTORLAB_SEED").ok(), default_model)
        .map_err(Failure::Usage)?;
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let opts = SuiteOptions { points: cfg.points, seed: cfg.seed, tol: cfg.tol };
    let start = Instant::now();
    let mut report = match cmd {
        Command::All(_) if cfg.model_given => {
            let model = load(&cfg, cfg.m, cfg.p, cfg.q)?;
            run_model(&model, suites::default_suites(model.kind), &opts, None)?
        }
        Command::All(_) => {
            let mut report = VerificationReport::new();
            for &(name, m, p, q) in STANDARD_MATRIX {
                let model = load(&Resolved { model: name.into(), ..cfg.clone() }, m, p, q)?;
                let tag = format!("{name}[{m},{p},{q}]");
                let r = run_model(&model, suites::default_suites(model.kind), &opts, Some(&tag))?;
                report.models.extend(r.models);
                report.checks.extend(r.checks);
            }
            report
        }
        cmd => {
            let model = load(&cfg, cfg.m, cfg.p, cfg.q)?;
            let names: Vec<String> = match (&cmd, &cfg.suite) {
                (Command::Verify(_), Some(s)) => s.split(',').map(|x| x.trim().to_string()).collect(),
                (Command::Verify(_), None) => suites::verify_suites(model.kind).iter().map(|s| s.to_string()).collect(),
                (Command::Stratify(_), _) => vec!["stratify".into()],
                (Command::Holonomy(_), _) => vec!["holonomy".into()],
                (Command::Descend(_), _) if model.kind == ModelKind::FlatProjective => vec!["m0".into()],
                (Command::Descend(_), _) => vec!["descent".into(), "quotient".into()],
                _ => unreachable!("handled above"),
            };
            if let Some(bad) = names.iter().find(|n| !SUITE_NAMES.contains(&n.as_str())) {
                return Err(Failure::Usage(format!("unknown suite '{bad}'; valid: {}", SUITE_NAMES.join(", "))));
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            run_model(&model, &refs, &opts, None)?
        }
    };
    if cfg.timing {
        report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let line = format!("{status} {} residual={:.3e} tol={:.1e} n={}", c.check_name, c.max_residual, c.tolerance, c.n_points);
        if cfg.report.is_some() {
            let _ = writeln!(std::io::stdout(), "{line}");
        } else {
            let _ = writeln!(std::io::stderr(), "{line}");
        }
    }
    let json = report.to_json();
    match &cfg.report {
        Some(path) => std::fs::write(path, json).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let _ = std::io::stdout().write_all(json.as_bytes());
        }
    }
    Ok(report.passed())
}

fn load(cfg: &Resolved, m: usize, p: usize, q: usize) -> Result<ModelGeometry, Failure> {
    if !MODEL_NAMES.contains(&cfg.model.as_str()) {
        return Err(Failure::Usage(format!("unknown model '{}'; valid: {}", cfg.model, MODEL_NAMES.join(", "))));
    }
    Catalog.get(&cfg.model, m, p, q).map_err(|e| match e {
        GeomError::Capability { requested, max } => Failure::Usage(format!("unsupported m = {requested} (supported: 1..={max})")),
        GeomError::Shape(_) | GeomError::Precondition(_) | GeomError::Domain { .. } => Failure::Usage(e.to_string()),
        other => Failure::Run(other.to_string()),
    })
}

fn run_model(model: &ModelGeometry, names: &[&str], opts: &SuiteOptions, tag: Option<&str>) -> Result<VerificationReport, Failure> {
    let results: Vec<_> = names.par_iter().map(|s| suites::run_suite(s, model, opts)).collect();
    let mut report = VerificationReport::new();
    report.models.push(suites::descriptor(model, opts.seed));
    for (name, r) in names.iter().zip(results) {
        let checks = r.map_err(|e| match e {
            GeomError::Unsupported(msg) => Failure::Usage(msg),
            other => Failure::Run(format!("suite '{name}': {other}")),
        })?;
        report.checks.extend(checks.into_iter().map(|mut c| {
            if let Some(t) = tag {
                c.check_name = format!("{t}/{}", c.check_name);
            }
            c
        }));
    }
    Ok(report)
}

fn list_models() {
    for name in MODEL_NAMES {
        let kind = match name {
            "round_sphere" => ModelKind::RoundSphere,
            "flat_projective" => ModelKind::FlatProjective,
            "cone" => ModelKind::Cone,
            _ => ModelKind::Perturbed,
        };
        let _ = writeln!(std::io::stdout(), "{name}: m in {{1, 2}}, signature P,Q with P + Q = m + 1; suites: {}", suites::default_suites(kind).join(", "));
    }
}
