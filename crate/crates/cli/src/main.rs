//! `xnmr`: replay explanation sessions, run property checks, serve the API.
//!
//! Exit codes: 0 success; 1 alerts under `--strict` or a `fails` verdict;
//! 2 usage; 65 invalid scenario or query; 66 missing scenario file; 74 I/O.

use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use xnmr_core::session::replay;
use xnmr_core::{
    transcript_jsonl, Alert, CheckReport, CheckRequest, EntailmentKind, Level, Point, Property, Scenario,
    ScenarioError, StepReport,
};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "xnmr", version, about = "Interactive explanations as non-monotonic reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay queries against a scenario and print what each step changed.
    Run(RunArgs),
    /// Run bounded property checks and print verdicts as JSON lines.
    Check(CheckArgs),
    /// Serve the JSON/HTTP API.
    Serve(ServeArgs),
    /// List bundled scenarios, or print one.
    Scenarios(ScenariosArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Bundled scenario name or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Override the scenario's entailment relation.
    #[arg(long, value_parser = parse_entailment)]
    entailment: Option<EntailmentKind>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Points to query, e.g. "5,0;20,5". Defaults to the scenario's queries.
    #[arg(long, value_parser = parse_points, allow_hyphen_values = true)]
    queries: Option<Points>,
    /// Exit 1 if any step raised an alert.
    #[arg(long)]
    strict: bool,
    /// Write the JSON-lines transcript here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Property to check; repeatable. Defaults to the scenario's own checks.
    #[arg(long = "property", value_parser = parse_property)]
    properties: Vec<Property>,
    /// Relation to check against.
    #[arg(long, value_parser = parse_level)]
    level: Option<Level>,
    /// Longest premise sequence.
    #[arg(long = "len", default_value_t = 2)]
    len: usize,
    /// Universe points (input-output checks) or target points (entailment checks).
    #[arg(long, value_parser = parse_points, allow_hyphen_values = true)]
    points: Option<Points>,
    /// Pair every universe point with every label.
    #[arg(long)]
    unrestricted: bool,
    /// Sample this many premise sequences instead of enumerating them all.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the verdicts here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
}

#[derive(Args)]
struct ScenariosArgs {
    /// Print this scenario's canonical file.
    #[arg(long)]
    show: Option<String>,
}

#[derive(Clone)]
struct Points(Vec<Point>);

fn parse_points(s: &str) -> Result<Points, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|v| v.trim().parse::<i64>().map_err(|e| format!("`{p}`: {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(Point)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Points)
}

fn parse_entailment(s: &str) -> Result<EntailmentKind, String> {
    s.parse()
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse()
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse()
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::NotFound(_) => EXIT_NO_INPUT,
            ScenarioError::Io { .. } => EXIT_IO,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn data_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let scenario = Scenario::resolve(&args.scenario)?;
    Ok(match args.entailment {
        Some(kind) => scenario.with_entailment(kind),
        None => scenario,
    })
}

fn summarize_alerts(alerts: &[Alert]) -> String {
    let mut inconsistent = Vec::new();
    let mut retracted = Vec::new();
    let mut other = Vec::new();
    for alert in alerts {
        match alert {
            Alert::Inconsistency { point, .. } => inconsistent.push(point.to_string()),
            Alert::Retraction { point, old_label, .. } => retracted.push(format!("{point}:{old_label}")),
            Alert::StabilityViolation { index } => other.push(format!("explanation {index} changed")),
            Alert::ReflexivityBreach { index } => other.push(format!("pair {index} no longer entailed")),
        }
    }
    let list = |items: &[String]| {
        let shown: Vec<&str> = items.iter().take(4).map(String::as_str).collect();
        let more = items.len().saturating_sub(shown.len());
        if more > 0 {
            format!("{} (+{more} more)", shown.join(" "))
        } else {
            shown.join(" ")
        }
    };
    let mut parts = Vec::new();
    if !inconsistent.is_empty() {
        parts.push(format!("inconsistent at {}", list(&inconsistent)));
    }
    if !retracted.is_empty() {
        parts.push(format!("retracted {}", list(&retracted)));
    }
    parts.extend(other);
    parts.join("; ")
}

fn table(reports: &[StepReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "step {}  x={}  y={}  +{} -{} ={}",
            r.step,
            Point::to_string(&r.x),
            r.y,
            r.delta.added.len(),
            r.delta.retracted.len(),
            r.delta.kept.len()
        );
        for (i, e) in r.explanations.iter().enumerate() {
            let _ = writeln!(out, "  E{i} = {{{}}}", e.join("; "));
        }
        if !r.alerts.is_empty() {
            let _ = writeln!(out, "  alerts: {}", summarize_alerts(&r.alerts));
        }
    }
    out
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let scenario = Arc::new(load(&args.scenario)?);
    let queries = match args.queries {
        Some(Points(points)) => points,
        None => scenario.queries().to_vec(),
    };
    let reports = replay(scenario, &queries).map_err(data_error)?;
    if let Some(path) = &args.out {
        write_file(path, &transcript_jsonl(&reports))?;
    }
    print!("{}", table(&reports));
    let alerted = reports.iter().any(|r| !r.alerts.is_empty());
    Ok(if args.strict && alerted { EXIT_FAILED } else { 0 })
}

fn describe(report: &CheckReport) -> String {
    format!(
        "{} [{}] {} up to length {}: {} ({} examined, {} violations)",
        report.verdict.property(),
        report.level,
        report.entailment,
        match &report.verdict {
            xnmr_core::AnyVerdict::Pairs(v) => v.bound,
            xnmr_core::AnyVerdict::Entailment(v) => v.bound,
            xnmr_core::AnyVerdict::Explanations(v) => v.bound,
        },
        if report.holds() { "holds" } else { "fails" },
        report.verdict.examined(),
        report.verdict.violations()
    )
}

fn check(args: CheckArgs) -> Result<u8, Failure> {
    let scenario = load(&args.scenario)?;
    let requests: Vec<CheckRequest> = if args.properties.is_empty() {
        scenario.checks().to_vec()
    } else {
        args.properties
            .iter()
            .map(|&property| CheckRequest {
                property,
                level: args.level,
                bound: args.len,
                points: args.points.clone().map(|p| p.0),
                unrestricted: args.unrestricted,
                samples: args.samples,
                seed: args.seed,
                expect: None,
            })
            .collect()
    };
    if requests.is_empty() {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("scenario `{}` declares no checks; pass --property", scenario.name()),
        });
    }
    let mut lines = String::new();
    let mut all_hold = true;
    for request in &requests {
        let report = scenario.run_check(request)?;
        eprintln!("{}", describe(&report));
        all_hold &= report.holds();
        lines.push_str(&serde_json::to_string(&report).expect("reports serialize"));
        lines.push('\n');
    }
    if let Some(path) = &args.out {
        write_file(path, &lines)?;
    }
    print!("{lines}");
    Ok(if all_hold { 0 } else { EXIT_FAILED })
}

fn serve(args: ServeArgs) -> Result<u8, Failure> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    let addr = SocketAddr::new(args.host, args.port);
    runtime.block_on(xnmr_service::serve(addr)).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot serve on {addr}: {e}"),
    })?;
    Ok(0)
}

fn scenarios(args: ScenariosArgs) -> Result<u8, Failure> {
    match args.show {
        Some(name) => println!("{}", Scenario::resolve(&name)?.to_json()),
        None => {
            for name in Scenario::bundled_names() {
                let scenario = Scenario::bundled(name).expect("listed")?;
                println!("{name:<16} {}", scenario.description().unwrap_or(""));
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Check(args) => check(args),
        Command::Serve(args) => serve(args),
        Command::Scenarios(args) => scenarios(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("xnmr: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
