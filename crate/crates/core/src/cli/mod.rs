//! Batch runner behind the `mslab` binary.
//!
//! `mslab <kind> --config <path> [--seed N] [--out <path>]` validates the
//! config, runs one experiment and writes a JSON report plus a CSV table.
//! `mslab validate --config <path>` stops after validation and a
//! 100-sample smoke test. Exit status: 0 success, 2 validation error,
//! 3 numerical failure.

mod config;
mod experiment;
mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

pub use config::{load_config, Diagnostic, Diagnostics, ExperimentConfig, Kind, LoadedConfig};
pub use experiment::{prepare, Experiment, Outcome, Prepared, SpechtSource, SMOKE_SAMPLES};
pub use report::{csv_path, write_atomic, Envelope, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Caps the worker threads of the parallel kernels.
pub const THREADS_ENV: &str = "MSLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Entropy,
    Freeness,
    Convolve,
    Gibbs,
    HopfLax,
    Wasserstein,
    Specht,
    IndependentJoin,
    OrbitSeparation,
    Validate,
}

impl Command {
    fn kind(self) -> Option<Kind> {
        Some(match self {
            Command::Entropy => Kind::Entropy,
            Command::Freeness => Kind::Freeness,
            Command::Convolve => Kind::Convolve,
            Command::Gibbs => Kind::Gibbs,
            Command::HopfLax => Kind::HopfLax,
            Command::Wasserstein => Kind::Wasserstein,
            Command::Specht => Kind::Specht,
            Command::IndependentJoin => Kind::IndependentJoin,
            Command::OrbitSeparation => Kind::OrbitSeparation,
            Command::Validate => return None,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "mslab", version, about = "Microstate free-entropy experiments")]
struct Args {
    /// Experiment kind, or `validate` to check a config without running it.
    #[arg(value_enum)]
    command: Command,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path; the CSV goes next to it. Overrides `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv`, runs, and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_VALIDATION;
    }
    match args.command.kind() {
        None => {
            let diags = validate(&args.config, args.seed);
            println!("{}", serde_json::to_string_pretty(&diags).expect("diagnostics serialize"));
            for d in &diags {
                eprintln!("error: {d}");
            }
            if diags.is_empty() {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Some(kind) => run(kind, &args.config, args.seed, args.out.as_deref()),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k >= 1)
        .ok_or_else(|| format!("{THREADS_ENV}={v:?} is not a positive integer"))?;
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    Ok(())
}

/// Schema, parse and range checks followed by the smoke test; an empty
/// list means the config is well formed.
pub fn validate(path: &Path, seed: Option<u64>) -> Diagnostics {
    let loaded = match load_config(path) {
        Ok(l) => l,
        Err(d) => return d,
    };
    let Some(kind) = loaded.config.kind else {
        return vec![Diagnostic::new("kind", "missing experiment kind")];
    };
    let seed = seed.or(loaded.config.seed).unwrap_or(0);
    match prepare(kind, &loaded.config.params, &loaded.base_dir, seed) {
        Err(d) => d,
        Ok(p) => match p.smoke() {
            Ok(()) => Vec::new(),
            Err(e) => vec![Diagnostic::new("smoke", e.to_string())],
        },
    }
}

fn fail(code: i32, diags: &[Diagnostic]) -> i32 {
    for d in diags {
        eprintln!("error: {d}");
    }
    code
}

/// Runs one experiment and prints diagnostics; see the module docs for
/// exit statuses.
pub fn run(kind: Kind, path: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    match run_experiment(kind, path, seed, out) {
        Ok(p) => {
            eprintln!("wrote {}", p.display());
            EXIT_OK
        }
        Err((code, diags)) => fail(code, &diags),
    }
}

/// Runs one experiment and returns the JSON report path, or the exit
/// status with its diagnostics.
pub fn run_experiment(
    kind: Kind,
    path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<PathBuf, (i32, Diagnostics)> {
    let loaded = load_config(path).map_err(|d| (EXIT_VALIDATION, d))?;
    if let Some(k) = loaded.config.kind.filter(|&k| k != kind) {
        return Err((EXIT_VALIDATION, vec![Diagnostic::new("kind", format!("config is for `{k}`, not `{kind}`"))]));
    }
    let seed = seed.or(loaded.config.seed).unwrap_or(0);
    let prepared = prepare(kind, &loaded.config.params, &loaded.base_dir, seed).map_err(|d| (EXIT_VALIDATION, d))?;
    let outcome = prepared.run().map_err(|e| {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        (code, vec![Diagnostic::from_error("run", &e)])
    })?;
    let json_path = match (out, &loaded.config.output_path) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => loaded.base_dir.join(p),
        (None, None) => PathBuf::from(format!("mslab-{kind}.json")),
    };
    let envelope = Envelope {
        tool: "mslab",
        version: env!("CARGO_PKG_VERSION"),
        kind,
        seed,
        config_sha256: loaded.sha256,
        result: outcome.result,
    };
    outcome
        .table
        .to_csv()
        .and_then(|csv| write_atomic(&csv_path(&json_path), &csv))
        .and_then(|()| write_atomic(&json_path, &envelope.to_json()))
        .map_err(|e| (EXIT_NUMERICAL, vec![Diagnostic::from_error("output", &e)]))?;
    Ok(json_path)
}
