//! Command implementations behind the `veccoh` binary. Every command produces a
//! [`RunReport`], rendered as markdown or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use veccoh::cecomplex::{cohomology_dim, dump_matrices};
use veccoh::cocycles::{theta_constant, verify_cocycle, verify_iota_witness, CocycleTag, NamedCocycleFamily};
use veccoh::diffops::{ModuleSpec, Species};
use veccoh::slstructure::verify_embedding;
use veccoh::Error;

pub mod expected;

pub use expected::{expected_dim, Expectation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub computed: String,
    pub expected: Option<String>,
    pub citation: Option<String>,
    /// `None` when nothing is expected.
    #[serde(rename = "match")]
    pub matched: Option<bool>,
}

impl Check {
    pub fn new(name: impl Into<String>, computed: impl ToString, expected: Option<String>, citation: Option<&str>) -> Self {
        let computed = computed.to_string();
        let matched = expected.as_ref().map(|e| *e == computed);
        Check {
            name: name.into(),
            computed,
            expected,
            citation: citation.map(str::to_owned),
            matched,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub seed: Option<u64>,
    pub elapsed_ms: Option<u64>,
}

impl RunReport {
    fn new(command: &str, params: Value, seed: Option<u64>) -> Self {
        let params = match params {
            Value::Object(map) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        RunReport {
            command: command.to_owned(),
            params,
            checks: Vec::new(),
            seed,
            elapsed_ms: None,
        }
    }

    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.matched != Some(false))
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_match() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {}", self.command);
        let _ = writeln!(s);
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "params: {}", params.join(", "));
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed: {seed}");
        }
        if let Some(ms) = self.elapsed_ms {
            let _ = writeln!(s, "elapsed_ms: {ms}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "| check | computed | expected | citation | match |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                c.name,
                c.computed,
                c.expected.as_deref().unwrap_or("-"),
                c.citation.as_deref().unwrap_or("-"),
                match c.matched {
                    Some(true) => "yes",
                    Some(false) => "NO",
                    None => "-",
                }
            );
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::AxisOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::DegreeOverflow { .. }
            | Error::InvalidSpec(_)
            | Error::Arity { .. }
            | Error::IncompatibleFamily(_)
            | Error::Parse(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpeciesArg {
    Mv,
    Form,
}

impl From<SpeciesArg> for Species {
    fn from(s: SpeciesArg) -> Species {
        match s {
            SpeciesArg::Mv => Species::Multivector,
            SpeciesArg::Form => Species::Form,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "veccoh", version, about = "Exact sl(m+1) cohomology of differential operators on tensor fields")]
pub struct Cli {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "markdown")]
    pub json: bool,
    /// Emit a markdown table (the default).
    #[arg(long, global = true)]
    pub markdown: bool,
    /// Leave `elapsed_ms` empty so that output depends only on the inputs.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the quadratic realization of sl(m+1).
    Structure {
        #[arg(long)]
        m: usize,
    },
    /// Verify the cocycle identity for a named family.
    Cocycle(CocycleArgs),
    /// dim H^u of one module, against the expected table.
    Cohomology(CohomologyArgs),
    /// Connecting-homomorphism constant.
    Theta(ThetaArgs),
    /// H⁰ and H¹ for all (p, q, k) and both species.
    Report {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        max_k: u32,
    },
}

#[derive(Args, Debug, Clone)]
pub struct CocycleArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub max_deg: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct CohomologyArgs {
    #[arg(long, value_enum)]
    pub species: SpeciesArg,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub u: usize,
    /// Write the weight-zero differential matrices here.
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ThetaArgs {
    #[arg(long, value_enum)]
    pub species: SpeciesArg,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long, default_value_t = 0)]
    pub a: usize,
}

fn warn_large(m: usize) {
    if m > 3 {
        eprintln!("warning: m = {m} is beyond the tested range and may take very long");
    }
}

pub fn cmd_structure(m: usize) -> Result<RunReport, CliError> {
    if m < 2 {
        return Err(CliError::Usage(format!("m must be at least 2, got {m}")));
    }
    warn_large(m);
    let r = verify_embedding(m)?;
    let n = veccoh::slstructure::dim(m);
    let mut report = RunReport::new("structure", json!({ "m": m }), None);
    report.checks.push(Check::new("basis pairs", r.pairs_checked, Some((n * (n - 1) / 2).to_string()), None));
    let bracket = match r.bracket_failure {
        None => "pass".to_owned(),
        Some((a, b)) => format!("fails on ({}, {})", veccoh::slstructure::basis_label(m, a), veccoh::slstructure::basis_label(m, b)),
    };
    report.checks.push(Check::new(
        "embedding respects brackets",
        bracket,
        Some("pass".into()),
        Some("quadratic realization of sl(m+1)"),
    ));
    let jacobi = match r.jacobi_failure {
        None => "pass".to_owned(),
        Some((a, b, c)) => format!("fails on ({a}, {b}, {c})"),
    };
    report.checks.push(Check::new(
        format!("Jacobi on {} triples", r.triples_checked),
        jacobi,
        Some("pass".into()),
        None,
    ));
    Ok(report)
}

/// Fills in whichever of `p`, `q` was omitted from the family's degree shift.
fn family_spec(tag: CocycleTag, m: usize, p: Option<usize>, q: Option<usize>, k: u32) -> Result<ModuleSpec, CliError> {
    let (species, shift): (Species, i64) = match tag {
        CocycleTag::Div => return Ok(ModuleSpec::functions(m)),
        CocycleTag::IotaDc => (Species::Multivector, -1),
        CocycleTag::IdTimes => (Species::Multivector, 0),
        CocycleTag::C0 => (Species::Form, 0),
        CocycleTag::C01 | CocycleTag::C10 => (Species::Form, 1),
        CocycleTag::C2 => (Species::Form, 2),
    };
    let (p, q) = match (p, q) {
        (Some(p), Some(q)) => (p, q),
        (Some(p), None) => (p, usize::try_from(p as i64 + shift).map_err(|_| CliError::Usage("q would be negative".into()))?),
        (None, Some(q)) => (usize::try_from(q as i64 - shift).map_err(|_| CliError::Usage("p would be negative".into()))?, q),
        (None, None) => {
            let p = if shift < 0 { (-shift) as usize } else { 0 };
            (p, (p as i64 + shift) as usize)
        }
    };
    Ok(ModuleSpec::operator(m, species, p, q, k)?)
}

pub fn cmd_cocycle(args: &CocycleArgs) -> Result<RunReport, CliError> {
    warn_large(args.m);
    let tag: CocycleTag = args.family.parse()?;
    let spec = family_spec(tag, args.m, args.p, args.q, args.k)?;
    let fam = NamedCocycleFamily::new(tag, spec)?;
    let mut report = RunReport::new(
        "cocycle",
        json!({
            "family": tag.name(), "m": spec.m, "p": spec.p, "q": spec.q, "k": spec.k,
            "trials": args.trials, "max_deg": args.max_deg,
        }),
        Some(args.seed),
    );
    let r = verify_cocycle(&fam, args.trials, args.max_deg, args.seed)?;
    report.checks.push(Check::new(
        format!(
            "cocycle identity failures ({} basis pairs, {} random pairs)",
            r.basis_pairs, r.random_pairs
        ),
        r.failures,
        Some("0".into()),
        Some(citation_for(tag)),
    ));
    if tag == CocycleTag::IotaDc {
        let w = verify_iota_witness(spec.m, spec.q, 20, args.max_deg, args.seed)?;
        report.checks.push(Check::new(
            format!("witness failures over {} random fields", w.trials),
            w.failures,
            Some("0".into()),
            Some("L_X of T ↦ Σ ι_{dx^i} ∂_i T equals ι_{dtrDX}"),
        ));
        report.checks.push(Check::new(
            "coboundary over sl(m+1) at k = 1",
            w.sl_coboundary,
            Some("true".into()),
            Some("the class of ι_{dtrDX} dies at order 1"),
        ));
        let zero_order = ModuleSpec::operator(spec.m, Species::Multivector, spec.q + 1, spec.q, 0)?;
        report.checks.push(Check::new(
            format!("dim H¹ {zero_order}"),
            cohomology_dim(zero_order, 1)?,
            Some("1".into()),
            Some("ℝ if p = q + 1 and k = 0"),
        ));
    }
    Ok(report)
}

fn citation_for(tag: CocycleTag) -> &'static str {
    match tag {
        CocycleTag::Div => "divergence cocycle X ↦ tr(DX)",
        CocycleTag::C0 => "c_0(X) : ω ↦ tr(DX)ω",
        CocycleTag::C01 => "c_01(X) : ω ↦ tr(DX)dω",
        CocycleTag::C10 => "c_10(X) : ω ↦ dtr(DX) ∧ ω",
        CocycleTag::C2 => "c_2(X) : ω ↦ dtr(DX) ∧ dω",
        CocycleTag::IotaDc => "X ↦ ι(dc(X))",
        CocycleTag::IdTimes => "c ↦ c.id",
    }
}

pub fn cmd_cohomology(args: &CohomologyArgs) -> Result<RunReport, CliError> {
    warn_large(args.m);
    let spec = ModuleSpec::operator(args.m, args.species.into(), args.p, args.q, args.k)?;
    let mut report = RunReport::new(
        "cohomology",
        json!({
            "species": spec.species.short_name(), "m": spec.m, "p": spec.p, "q": spec.q, "k": spec.k, "u": args.u,
        }),
        None,
    );
    if let Some(dir) = &args.dump_matrices {
        dump_matrices(spec, args.u, dir)?;
        report.params.insert("dump_matrices".into(), json!(dir.display().to_string()));
    }
    report.checks.push(cohomology_check(spec, args.u)?);
    Ok(report)
}

fn cohomology_check(spec: ModuleSpec, u: usize) -> Result<Check, CliError> {
    let dim = cohomology_dim(spec, u)?;
    let exp = expected_dim(spec.species, spec.p, spec.q, spec.k, u);
    Ok(Check::new(
        format!("dim H^{u} {spec}"),
        dim,
        exp.map(|e| e.dim.to_string()),
        exp.map(|e| e.citation),
    ))
}

pub fn cmd_theta(args: &ThetaArgs) -> Result<RunReport, CliError> {
    warn_large(args.m);
    let species: Species = args.species.into();
    let mut report = RunReport::new(
        "theta",
        json!({ "species": species.short_name(), "m": args.m, "p": args.p, "q": args.q, "a": args.a }),
        None,
    );
    let r = theta_constant(args.m, args.p, args.q, args.a, species)?;
    let (expected, citation) = match species {
        Species::Multivector => {
            let sign = if args.a % 2 == 0 { 1 } else { -1 };
            (
                sign * (args.p as i64 - args.q as i64 + 1) * (args.m as i64 + 1),
                "θ(γ) = (−1)^{deg γ} (p − q + 1)(m + 1)γ",
            )
        }
        _ => (0, "the connecting homomorphism vanishes for forms"),
    };
    report.checks.push(Check::new("theta", r.value.to_string(), Some(expected.to_string()), Some(citation)));
    report.checks.push(Check::new(
        "theta at x = 0",
        r.at_origin.to_string(),
        Some(r.value.to_string()),
        None,
    ));
    for (i, mu) in r.per_term.iter().enumerate() {
        report.checks.push(Check::new(
            format!("(−1)^{i} L_(α_{i}*) I_1 at x = 0, in units of I_0"),
            mu.to_string(),
            Some((args.m + 1).to_string()),
            Some("(m + 1)I_0(α_0, …, α_b)"),
        ));
    }
    Ok(report)
}

/// Every cell `(species, p, q, k, u)` of the report, in output order.
pub fn report_cells(m: usize, max_k: u32) -> Vec<(Species, usize, usize, u32, usize)> {
    let mut cells = Vec::new();
    for species in [Species::Multivector, Species::Form] {
        for p in 0..=m {
            for q in 0..=m {
                for k in 0..=max_k {
                    for u in 0..=1 {
                        cells.push((species, p, q, k, u));
                    }
                }
            }
        }
    }
    cells
}

pub fn cmd_report(m: usize, max_k: u32) -> Result<RunReport, CliError> {
    if m < 2 {
        return Err(CliError::Usage(format!("m must be at least 2, got {m}")));
    }
    warn_large(m);
    let mut report = RunReport::new("report", json!({ "m": m, "max_k": max_k }), None);
    report.checks = report_cells(m, max_k)
        .into_par_iter()
        .map(|(species, p, q, k, u)| cohomology_check(ModuleSpec::operator(m, species, p, q, k)?, u))
        .collect::<Result<_, _>>()?;
    Ok(report)
}

/// Reads a thread cap from the value of `VECCOH_THREADS`.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("VECCOH_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

/// Caps the global thread pool from `VECCOH_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let value = std::env::var("VECCOH_THREADS").ok();
    if let Some(n) = thread_cap(value.as_deref())? {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parses arguments (the first one is the program name), runs the command and renders it.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    if let Err(e) = configure_threads() {
        return Outcome { stdout: String::new(), stderr: format!("{e}\n"), code: e.exit_code() };
    }
    let start = Instant::now();
    let result = match &cli.command {
        Command::Structure { m } => cmd_structure(*m),
        Command::Cocycle(a) => cmd_cocycle(a),
        Command::Cohomology(a) => cmd_cohomology(a),
        Command::Theta(a) => cmd_theta(a),
        Command::Report { m, max_k } => cmd_report(*m, *max_k),
    };
    match result {
        Ok(mut report) => {
            if !cli.no_timing {
                report.elapsed_ms = Some(start.elapsed().as_millis() as u64);
            }
            let stdout = if cli.json {
                report.to_json() + "\n"
            } else {
                report.to_markdown()
            };
            Outcome { stdout, stderr: String::new(), code: report.exit_code() }
        }
        Err(e) => Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: e.exit_code() },
    }
}
