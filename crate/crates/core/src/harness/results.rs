use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub name: String,
    pub build_id: String,
    pub seed: u64,
    pub drops: usize,
    pub n_t: usize,
    pub n_c: usize,
    pub n_u: usize,
    pub timestamp: String,
}

impl RecordMetadata {
    pub fn new(name: &str, seed: u64, drops: usize, n_t: usize, n_c: usize, n_u: usize) -> Self {
        Self {
            name: name.to_string(),
            build_id: build_id(),
            seed,
            drops,
            n_t,
            n_c,
            n_u,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// `v<crate version>` plus `COORDBEAM_BUILD_ID` when set at compile time.
pub fn build_id() -> String {
    match option_env!("COORDBEAM_BUILD_ID") {
        Some(id) => format!("v{}-{id}", env!("CARGO_PKG_VERSION")),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

/// One (scheme, sweep point) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_value: f64,
    pub snr_db: f64,
    /// Drops that produced a rate (the rest failed and are counted in `errors`).
    pub drops: usize,
    /// Per-cell average rate, `sum_rate_mean / N_C`.
    pub rate_mean: f64,
    pub rate_stderr: f64,
    pub sum_rate_mean: f64,
    /// Count of drops per chosen `α`; bin 0 holds schemes without a selection.
    #[serde(with = "hist")]
    pub alpha_hist: Vec<u64>,
    /// Information exchange per drop; empty when the scheme has no accounting.
    pub exchange_bytes: Option<u64>,
    pub errors: usize,
    pub error: Option<String>,
}

mod hist {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.iter().map(u64::to_string).collect::<Vec<_>>().join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';').map(|x| x.parse().map_err(serde::de::Error::custom)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub metadata: RecordMetadata,
    pub rows: Vec<ResultRow>,
}

impl ResultRecord {
    /// Equality ignoring the timestamp.
    pub fn same_results(&self, other: &ResultRecord) -> bool {
        let mut a = self.metadata.clone();
        a.timestamp.clone_from(&other.metadata.timestamp);
        a == other.metadata && self.rows == other.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultFormat {
    Csv,
    JsonLines,
}

impl ResultFormat {
    pub fn from_path(path: &Path) -> ResultFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => ResultFormat::JsonLines,
            _ => ResultFormat::Csv,
        }
    }
}

const CSV_HEADER: [&str; 11] = [
    "scheme",
    "sweep_value",
    "snr_db",
    "drops",
    "rate_mean",
    "rate_stderr",
    "sum_rate_mean",
    "alpha_hist",
    "exchange_bytes",
    "errors",
    "error",
];

pub fn emit_results(record: &ResultRecord, path: &Path, format: ResultFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_results(record, &mut out, format)?;
    out.flush()?;
    Ok(())
}

pub fn write_results<W: Write>(record: &ResultRecord, mut out: W, format: ResultFormat) -> Result<()> {
    match format {
        ResultFormat::Csv => {
            let meta = serde_json::to_value(&record.metadata)?;
            if let serde_json::Value::Object(map) = meta {
                for (k, v) in map {
                    writeln!(out, "# {k}: {v}")?;
                }
            }
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_HEADER)?;
            for row in &record.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        ResultFormat::JsonLines => {
            serde_json::to_writer(&mut out, &record.metadata)?;
            out.write_all(b"\n")?;
            for row in &record.rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

pub fn read_results(path: &Path) -> Result<ResultRecord> {
    let format = ResultFormat::from_path(path);
    let file = BufReader::new(File::open(path)?);
    match format {
        ResultFormat::Csv => {
            let text = std::io::read_to_string(file)?;
            let mut meta = serde_json::Map::new();
            for line in text.lines().take_while(|l| l.starts_with('#')) {
                let (k, v) = line[1..]
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad metadata line {line:?}")))?;
                meta.insert(k.trim().to_string(), serde_json::from_str(v.trim())?);
            }
            let metadata: RecordMetadata = serde_json::from_value(serde_json::Value::Object(meta))?;
            let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
            let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
            if header != CSV_HEADER {
                return Err(Error::Parse(format!("unexpected columns {header:?}")));
            }
            let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
            Ok(ResultRecord { metadata, rows })
        }
        ResultFormat::JsonLines => {
            let mut lines = file.lines();
            let first = lines.next().ok_or_else(|| Error::Parse("empty results file".into()))??;
            let metadata = serde_json::from_str(&first)?;
            let mut rows = Vec::new();
            for line in lines {
                let line = line?;
                if !line.trim().is_empty() {
                    rows.push(serde_json::from_str(&line)?);
                }
            }
            Ok(ResultRecord { metadata, rows })
        }
    }
}

/// Checks the record's internal identities; returns the number of rows.
pub fn validate_record(record: &ResultRecord) -> Result<usize> {
    let n_c = record.metadata.n_c as f64;
    for row in &record.rows {
        let where_ = format!("{} @ {}", row.scheme, row.sweep_value);
        if row.error.is_some() {
            continue;
        }
        let hist_total: u64 = row.alpha_hist.iter().sum();
        if hist_total != row.drops as u64 {
            return Err(Error::InvalidArgument(format!(
                "{where_}: histogram totals {hist_total}, drops {}",
                row.drops
            )));
        }
        if row.alpha_hist.len() != record.metadata.n_t + 1 {
            return Err(Error::InvalidArgument(format!("{where_}: histogram has {} bins", row.alpha_hist.len())));
        }
        if row.drops + row.errors != record.metadata.drops {
            return Err(Error::InvalidArgument(format!("{where_}: drop count mismatch")));
        }
        let expect = row.sum_rate_mean / n_c;
        if (row.rate_mean - expect).abs() > 1e-9 * expect.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("{where_}: per-cell rate ≠ sum rate / N_C")));
        }
        if !(row.rate_mean.is_finite() && row.rate_stderr >= 0.0) {
            return Err(Error::InvalidArgument(format!("{where_}: non-finite statistics")));
        }
    }
    Ok(record.rows.len())
}
