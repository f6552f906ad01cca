use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hbspline::fixture::{load_fixture, MeshDump};
use hbspline::quasiinterp::{Norm, NormConfig, QuadratureConfig};
use hbspline_harness::report::{write_csv, write_json, write_rows};
use hbspline_harness::study::{family, run_study, write_family, FamilyKind, StudyRequest, ORDER_WINDOW};
use hbspline_harness::suite::{run_suite, Status, SuiteConfig};
use hbspline_harness::{exit_code, init_threads, EXIT_INPUT, EXIT_INVARIANT, EXIT_OK};

/// Hierarchical B-spline checks and convergence studies.
///
/// Set HBS_THREADS to fix the number of worker threads.
#[derive(Parser)]
#[command(name = "hbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite on a fixture.
    Check {
        fixture: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = SuiteConfig::default().seed)]
        seed: u64,
        /// Skip the rational-arithmetic partition-of-unity check.
        #[arg(long)]
        no_exact: bool,
    },
    /// Convergence study over a directory of fixtures.
    Study {
        family: PathBuf,
        #[arg(long = "f")]
        function: String,
        #[arg(long, default_value = "2")]
        q: Norm,
        /// Comma-separated smoothness per direction, or one value for all.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Sample points per direction and cell for q = inf.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Write the active cells of a fixture as level-tagged boxes.
    DumpMesh {
        fixture: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a fixture family for studies.
    Family {
        #[arg(value_parser = ["uniform", "corner"])]
        kind: String,
        /// Degrees per direction, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(err: hbspline::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(&err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    match cli.command {
        Command::Check { fixture, report, seed, no_exact } => {
            let fx = match load_fixture(&fixture) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let cfg = SuiteConfig { seed, exact: !no_exact, ..SuiteConfig::default() };
            let rep = match run_suite(&fx, &cfg) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            for c in &rep.checks {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skip => "SKIP",
                };
                let worst = c.worst.map(|w| format!(" worst {w:.2e}")).unwrap_or_default();
                let detail = if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) };
                println!("{tag} {:<12} {:<40} n={}{worst}{detail}", c.module, c.name, c.checked);
            }
            let k = &rep.counts;
            println!(
                "{}: #B0={} #H={} #H~={} zero-weight={} active cells={} strictly admissible={} omega-nested={}",
                rep.fixture,
                k.b0,
                k.h,
                k.htilde,
                k.zero_weight,
                k.active_cells,
                rep.admissibility.strictly_admissible,
                rep.admissibility.omega_nested
            );
            if let Some(path) = report {
                if let Err(e) = write_json(&path, &rep) {
                    return fail(e);
                }
            }
            if rep.passed {
                println!("all invariants hold");
                ExitCode::from(EXIT_OK as u8)
            } else {
                println!("{} invariant(s) failed", rep.failures().count());
                ExitCode::from(EXIT_INVARIANT as u8)
            }
        }
        Command::Study { family, function, q, s, csv, json, samples } => {
            let req = StudyRequest {
                family,
                function,
                norm: q,
                s,
                norms: NormConfig { samples_per_dir: samples, ..NormConfig::default() },
                quadrature: QuadratureConfig::default(),
            };
            let rep = match run_study(&req) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let rows = rep.rows();
            let written = match &csv {
                Some(path) => write_csv(path, &rows),
                None => write_rows(std::io::stdout(), &rows)
                    .map_err(|e| hbspline::Error::Fixture { location: "stdout".into(), message: e.to_string() }),
            };
            if let Err(e) = written {
                return fail(e);
            }
            if let Some(path) = json {
                if let Err(e) = write_json(&path, &rep) {
                    return fail(e);
                }
            }
            let short = rep.shortfalls();
            if short.is_empty() {
                eprintln!("observed orders within {ORDER_WINDOW} of {}", rep.expected_order);
                ExitCode::from(EXIT_OK as u8)
            } else {
                for (step, level, o) in &short {
                    eprintln!("step {step} level {level}: order {o:.3} below {}", rep.expected_order - ORDER_WINDOW);
                }
                ExitCode::from(EXIT_INVARIANT as u8)
            }
        }
        Command::DumpMesh { fixture, out } => {
            let fx = match load_fixture(&fixture) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let dump = MeshDump::from_hierarchy(&fx.hierarchy);
            if let Err(e) = write_json(&out, &dump) {
                return fail(e);
            }
            println!("{} active cells written to {}", dump.cells.len(), out.display());
            ExitCode::from(EXIT_OK as u8)
        }
        Command::Family { kind, degrees, steps, out } => {
            let kind: FamilyKind = kind.parse().expect("restricted by clap");
            match write_family(&out, &family(kind, &degrees, steps)) {
                Ok(paths) => {
                    println!("{} fixtures written to {}", paths.len(), out.display());
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
