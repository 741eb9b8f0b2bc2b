use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use coordbeam::harness::{
    emit_results, read_results, run_experiment, selftest, validate_record, write_results, ExperimentSpec, ResultFormat,
};
use coordbeam::protocol::{accounting_table, AccountingScheme};
use coordbeam::quantization::{train_lloyd_max, Codebook, RatePdfParams};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "coordbeam", version, about = "Coordinated multicell beamforming Monte Carlo lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (TOML) and write its results.
    Run {
        spec: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Defaults to the output extension (.jsonl → json-lines, else csv).
        #[arg(long)]
        format: Option<Format>,
    },
    /// Check a results file for internal consistency.
    Validate { results: PathBuf },
    #[command(subcommand)]
    Codebook(CodebookCommand),
    /// Information-exchange bits for one scheme, e.g. `account proposed n_t=4 n_c=7 n_f_total=35`.
    Account {
        /// proposed, proposed-decentral, wmmse or global.
        scheme: String,
        /// key=value pairs.
        params: Vec<String>,
    },
    /// Quick randomized property checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CodebookCommand {
    /// Train a Lloyd-Max codebook for the interference-free rate pdf.
    Train {
        #[arg(long)]
        n_t: usize,
        #[arg(long)]
        alpha: usize,
        /// Noise power; give either this or --snr-db.
        #[arg(long, conflicts_with = "snr_db")]
        n0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        snr_db: Option<f64>,
        #[arg(long)]
        n_f: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the cells of a codebook file.
    Show { codebook: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

impl From<Format> for ResultFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ResultFormat::Csv,
            Format::JsonLines => ResultFormat::JsonLines,
        }
    }
}

fn account(scheme: &str, params: &[String]) -> anyhow::Result<Value> {
    let mut obj = Map::new();
    obj.insert("scheme".into(), Value::String(scheme.to_owned()));
    for p in params {
        let (k, v) = p.split_once('=').with_context(|| format!("expected key=value, got {p:?}"))?;
        let n: u64 = v.parse().with_context(|| format!("{k} must be a non-negative integer"))?;
        obj.insert(k.to_owned(), n.into());
    }
    let parsed: AccountingScheme = serde_json::from_value(Value::Object(obj))?;
    let a = accounting_table(parsed)?;
    Ok(json!({ "scheme": parsed, "bits": a.bits, "bytes": a.bytes }))
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run { spec, out, format } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let record = run_experiment(&ExperimentSpec::from_toml(&text)?)?;
            match out {
                Some(path) => {
                    let fmt = format.map(Into::into).unwrap_or_else(|| ResultFormat::from_path(&path));
                    emit_results(&record, &path, fmt)?;
                }
                None => write_results(&record, &mut stdout, format.map_or(ResultFormat::Csv, Into::into))?,
            }
        }
        Command::Validate { results } => {
            let record = read_results(&results)?;
            let rows = validate_record(&record)?;
            writeln!(stdout, "{}", json!({ "status": "ok", "rows": rows, "name": record.metadata.name }))?;
        }
        Command::Codebook(CodebookCommand::Train { n_t, alpha, n0, snr_db, n_f, out }) => {
            let n0 = match (n0, snr_db) {
                (Some(n0), None) => n0,
                (None, Some(snr)) => 10f64.powf(-snr / 10.0),
                _ => bail!("give exactly one of --n0 and --snr-db"),
            };
            let book = train_lloyd_max(&RatePdfParams::new(n_t, alpha, n0)?, n_f)?;
            let text = book.to_json()?;
            match out {
                Some(path) => std::fs::write(&path, text + "\n")?,
                None => writeln!(stdout, "{text}")?,
            }
        }
        Command::Codebook(CodebookCommand::Show { codebook }) => {
            let book = Codebook::from_json(&std::fs::read_to_string(&codebook)?)?;
            let p = book.params;
            writeln!(stdout, "n_t={} alpha={} n0={} n_f={} levels={}", p.n_t, p.alpha, p.n0, book.n_f, book.len())?;
            writeln!(stdout, "mse={:.6e} fixed_point_residual={:.3e}", book.mse(), book.fixed_point_residual())?;
            writeln!(stdout, "{:>5} {:>12} {:>12} {:>12}", "index", "lower", "upper", "centroid")?;
            for (i, c) in book.levels.iter().enumerate() {
                let lo = if i == 0 { 0.0 } else { book.boundaries[i - 1] };
                let hi = book.boundaries.get(i).copied().unwrap_or(f64::INFINITY);
                writeln!(stdout, "{i:>5} {lo:>12.6} {hi:>12.6} {c:>12.6}")?;
            }
        }
        Command::Account { scheme, params } => {
            writeln!(stdout, "{}", account(&scheme, &params)?)?;
        }
        Command::Selftest { seed } => {
            let checks = selftest(seed);
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag} {}: {}", c.name, c.detail)?;
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn error_line(err: &anyhow::Error) -> Value {
    let kind = err.downcast_ref::<coordbeam::Error>().map_or("error", |e| e.kind());
    json!({ "error": kind, "message": format!("{err:#}") })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", json!({ "error": "selftest", "message": "one or more checks failed" }));
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
