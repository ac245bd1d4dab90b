//! `keyforge`: key-rate computations driven by a TOML configuration.

mod config;
mod output;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use config::{ConfigError, Task, Verb};
use output::ResultRow;

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser)]
#[command(name = "keyforge", version, about = "Certified QKD key-rate bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic rate, one row per configured method.
    Asymptotic(Common),
    /// Finite-size key length from the `finite` section.
    Finite(Common),
    /// Decoy-state rate from the `decoy` section.
    Decoy(Common),
    /// Run the `sweep` section, one job per parameter value.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a JSON array of records instead of CSV.
    #[arg(long)]
    json: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Progress and validation details on standard error.
    #[arg(long)]
    verbose: bool,
    /// Write 0 for runtime_seconds so identical configs give identical bytes.
    #[arg(long)]
    reproducible: bool,
}

fn load(path: &PathBuf) -> Result<toml::Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    config::parse_document(&text)
}

/// Validated jobs for `verb`, each tagged with its sweep parameter value.
fn plan(doc: toml::Value, verb: Option<Verb>) -> Result<Vec<(Option<f64>, Task)>, ConfigError> {
    let cfg = config::from_document(doc.clone())?;
    let Some(verb) = verb else {
        let Some(sweep) = cfg.sweep.clone() else {
            return Err(ConfigError::Invalid(vec![config::Violation {
                path: "sweep".into(),
                message: "required".into(),
            }]));
        };
        let verb = sweep
            .verb
            .unwrap_or_else(|| config::default_sweep_verb(&cfg));
        let mut jobs = Vec::new();
        let mut found = Vec::new();
        for value in config::sweep_points(&sweep) {
            let mut point = doc.clone();
            if let Err(message) = config::set_path(&mut point, &sweep.parameter, value) {
                return Err(ConfigError::Invalid(vec![config::Violation {
                    path: "sweep.parameter".into(),
                    message: format!("`{}`: {message}", sweep.parameter),
                }]));
            }
            let built = config::from_document(point).and_then(|c| config::build_task(&c, verb));
            match built {
                Ok(t) => jobs.push((Some(value), t)),
                Err(ConfigError::Invalid(v)) => found.extend(v.into_iter().map(|mut v| {
                    v.message = format!("{} (at {} = {value})", v.message, sweep.parameter);
                    v
                })),
                Err(e) => return Err(e),
            }
        }
        if sweep.steps == 0 {
            found.push(config::Violation {
                path: "sweep.steps".into(),
                message: "must be positive".into(),
            });
        }
        if !found.is_empty() {
            found.dedup();
            return Err(ConfigError::Invalid(found));
        }
        return Ok(jobs);
    };
    Ok(vec![(None, config::build_task(&cfg, verb)?)])
}

fn emit(rows: &[ResultRow], common: &Common) -> io::Result<()> {
    let mut out: Box<dyn Write> = match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if common.json {
        output::write_json(rows, &mut out)?;
    } else {
        output::write_csv(rows, &mut out).map_err(io::Error::other)?;
    }
    out.flush()
}

fn execute(common: &Common, verb: Option<Verb>) -> ExitCode {
    let jobs = match load(&common.config).and_then(|doc| plan(doc, verb)) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("configuration error:\n{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let threads = common
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_COMPUTE);
        }
    };
    if common.verbose {
        eprintln!("{} job(s) on {threads} worker(s)", jobs.len());
    }
    let verbose = common.verbose;
    let per_job: Vec<Vec<ResultRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|(p, t)| {
                let rows = run::run_task(*p, t);
                if verbose {
                    for r in &rows {
                        eprintln!(
                            "  parameter {:?} {}: {} ({:.2}s)",
                            p, r.method, r.status, r.runtime_seconds
                        );
                    }
                }
                rows
            })
            .collect()
    });
    let mut rows: Vec<ResultRow> = per_job.into_iter().flatten().collect();
    if common.reproducible {
        for r in &mut rows {
            r.runtime_seconds = 0.0;
        }
    }
    if let Err(e) = emit(&rows, common) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_COMPUTE);
    }
    if run::all_ok(&rows) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_COMPUTE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Asymptotic(c) => execute(c, Some(Verb::Asymptotic)),
        Command::Finite(c) => execute(c, Some(Verb::Finite)),
        Command::Decoy(c) => execute(c, Some(Verb::Decoy)),
        Command::Sweep(c) => execute(c, None),
    }
}
