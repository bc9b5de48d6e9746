//! `graphmass`: run verification suites and convergence studies from scenario files.
//!
//! Exit status: 0 when every asserted invariant holds, 1 on an invariant failure,
//! 2 on unreadable or invalid input, 3 when a computation fails to converge.
//! Failures print one JSON diagnostic line on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

mod report;
mod scenario;
mod suites;

use report::{Format, Report};
use scenario::{Build, ParseError, Scenario};

#[derive(Parser)]
#[command(name = "graphmass", version, about = "Mass and flat-distance checks for asymptotically flat graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the scenario dimension (3 to 7).
    #[arg(long, global = true)]
    dimension: Option<usize>,

    /// Override the curvature and quasi-local identity tolerances.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for tables and summaries.
    #[arg(long, global = true, env = "GRAPHMASS_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,

    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Curvature, mass, quasi-local identity, Minkowski and volume-inequality checks.
    Verify { scenario: PathBuf },
    /// ADM mass from the flux ladder.
    Mass { scenario: PathBuf },
    /// Level-set volumes and mean-curvature integrals.
    Levelsets { scenario: PathBuf },
    /// The comparison ODE; the scenario is optional when --dimension is given.
    Ode { scenario: Option<PathBuf> },
    /// Flat-distance decomposition in one ball against the theorem bound.
    Flatnorm { scenario: PathBuf },
    /// Flat distance along the scenario's mass ladder.
    Study { scenario: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Mass { .. } => "mass",
            Command::Levelsets { .. } => "levelsets",
            Command::Ode { .. } => "ode",
            Command::Flatnorm { .. } => "flatnorm",
            Command::Study { .. } => "study",
        }
    }

    fn scenario(&self) -> Option<&PathBuf> {
        match self {
            Command::Verify { scenario }
            | Command::Mass { scenario }
            | Command::Levelsets { scenario }
            | Command::Flatnorm { scenario }
            | Command::Study { scenario } => Some(scenario),
            Command::Ode { scenario } => scenario.as_ref(),
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<Scenario> {
    let mut s = match (cli.command.scenario(), cli.dimension) {
        (Some(p), _) => Scenario::load(p)?,
        (None, Some(n)) => Scenario::bare(n),
        (None, None) => return Err(ParseError("ode needs a scenario or --dimension".into()).into()),
    };
    if let Some(n) = cli.dimension {
        s.dimension = n;
    }
    if let Some(t) = cli.tol {
        s.tolerances.curvature = t;
        s.tolerances.identity = t;
    }
    s.validate()?;
    Ok(s)
}

fn execute(cli: &Cli) -> anyhow::Result<Report> {
    let s = load(cli)?;
    if let Command::Ode { .. } = cli.command {
        return suites::ode(&s);
    }
    let b = match scenario::build(&s)? {
        Build::Graph(b) => b,
        Build::Inadmissible(inv) => return Ok(Report { invariants: vec![inv], ..Default::default() }),
    };
    match cli.command {
        Command::Verify { .. } => suites::verify(&s, &b),
        Command::Mass { .. } => suites::mass(&s, &b),
        Command::Levelsets { .. } => suites::levelsets(&s, &b),
        Command::Flatnorm { .. } => suites::flatnorm(&s, &b),
        Command::Study { .. } => suites::study(&s, &b),
        Command::Ode { .. } => unreachable!("handled above"),
    }
}

/// Exit status and error class for a failed run.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if e.downcast_ref::<ParseError>().is_some() {
        return (2, "parse");
    }
    match e.downcast_ref::<graphmass::Error>() {
        Some(g) if g.is_convergence() => (3, "non-convergence"),
        _ => (1, "invariant"),
    }
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building the thread pool")?
            .install(|| execute(cli)),
        None => execute(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            let (code, class) = classify(&e);
            let diag = serde_json::json!({ "command": command, "status": code, "error": class, "message": format!("{e:#}") });
            eprintln!("{diag}");
            return ExitCode::from(code);
        }
    };
    for inv in &report.invariants {
        println!("{} {} {}", if inv.pass { "PASS" } else { "FAIL" }, inv.name, inv.detail);
    }
    match report.write(&cli.output_dir, command, cli.format) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "command": command, "status": 1, "error": "io", "message": format!("{e:#}") }));
            return ExitCode::from(1);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<_> = report.invariants.iter().filter(|i| !i.pass).map(|i| &i.name).collect();
        eprintln!("{}", serde_json::json!({ "command": command, "status": 1, "error": "invariant", "failed": failed }));
        ExitCode::from(1)
    }
}
