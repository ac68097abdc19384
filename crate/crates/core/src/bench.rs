//! Corpus benchmark: compress every file with every predictor, verify the
//! round trip, and report sizes.
//!
//! The machine-readable report is JSON lines. File rows look like
//!
//! ```text
//! {"record":"file","path":"a.txt","media":"text","predictor":"order0:S=256:v1",
//!  "original_bytes":1000,"compressed_bytes":620,"ratio":1.6129,
//!  "bits_per_symbol":4.96,"wall_ms":1.2,"verified":true,"error":null}
//! ```
//!
//! and are followed by one aggregate per predictor:
//!
//! ```text
//! {"record":"aggregate","predictor":"order0:S=256:v1","files":3,"failures":0,
//!  "original_bytes":3000,"compressed_bytes":1800,"ratio":1.6667}
//! ```
//!
//! `ratio` is `original_bytes / compressed_bytes` and is `null` for empty
//! files. Aggregate ratios divide summed sizes of the successful rows.
//! `bits_per_symbol` is archive bits over coded symbols (pixels for images,
//! samples bytes for audio).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::pipeline::{compress, decompress, CompressOptions, DecompressOptions, PredictorSource};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub path: String,
    pub media: Option<String>,
    pub predictor: String,
    pub original_bytes: u64,
    pub compressed_bytes: Option<u64>,
    pub ratio: Option<f64>,
    pub bits_per_symbol: Option<f64>,
    pub wall_ms: f64,
    pub verified: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchAggregate {
    pub predictor: String,
    pub files: usize,
    pub failures: usize,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    /// Sorted by path, then predictor.
    pub rows: Vec<BenchRow>,
    /// In the order the predictors were given.
    pub aggregates: Vec<BenchAggregate>,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record<'a> {
    File(&'a BenchRow),
    Aggregate(&'a BenchAggregate),
}

impl BenchReport {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        let records = self
            .rows
            .iter()
            .map(Record::File)
            .chain(self.aggregates.iter().map(Record::Aggregate));
        for r in records {
            out.push_str(&serde_json::to_string(&r).expect("report serializes"));
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<40} {:<6} {:<22} {:>12} {:>12} {:>8} {:>8} {:>10}",
            "path", "media", "predictor", "original", "compressed", "ratio", "bps", "ms"
        );
        for r in &self.rows {
            match &r.error {
                None => {
                    let _ = writeln!(
                        out,
                        "{:<40} {:<6} {:<22} {:>12} {:>12} {:>8} {:>8} {:>10.1}",
                        r.path,
                        r.media.as_deref().unwrap_or("-"),
                        r.predictor,
                        r.original_bytes,
                        r.compressed_bytes.unwrap_or(0),
                        fmt_opt(r.ratio, 4),
                        fmt_opt(r.bits_per_symbol, 3),
                        r.wall_ms
                    );
                }
                Some(e) => {
                    let _ = writeln!(out, "{:<40} {:<6} {:<22} FAILED: {e}", r.path, "-", r.predictor);
                }
            }
        }
        if !self.aggregates.is_empty() {
            out.push('\n');
            for a in &self.aggregates {
                let _ = writeln!(
                    out,
                    "{:<22} files {:>4}  failed {:>3}  {:>12} -> {:>12}  ratio {}",
                    a.predictor,
                    a.files,
                    a.failures,
                    a.original_bytes,
                    a.compressed_bytes,
                    fmt_opt(a.ratio, 4)
                );
            }
        }
        out
    }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.prec$}"))
}

/// Regular files under `dir`, recursively, in path order.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let entry = entry?;
            let ty = entry.file_type()?;
            if ty.is_dir() {
                stack.push(entry.path());
            } else if ty.is_file() {
                files.push(entry.path());
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Benchmarks one in-memory file. Failures land in the row.
pub fn bench_bytes(path: &str, input: &[u8], predictor: &PredictorSource, opts: &CompressOptions) -> BenchRow {
    let label = match predictor {
        PredictorSource::Builtin(spec) => spec.to_string(),
        PredictorSource::Server { endpoint, .. } => endpoint.to_string(),
    };
    let mut row = BenchRow {
        path: path.to_string(),
        media: None,
        predictor: label,
        original_bytes: input.len() as u64,
        compressed_bytes: None,
        ratio: None,
        bits_per_symbol: None,
        wall_ms: 0.0,
        verified: false,
        error: None,
    };
    let opts = CompressOptions {
        predictor: predictor.clone(),
        ..opts.clone()
    };
    let start = Instant::now();
    let (archive, stats) = match compress(input, &opts) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    row.media = Some(stats.media.to_string());
    row.predictor = stats.predictor.to_string();
    row.compressed_bytes = Some(stats.compressed_bytes);
    row.ratio = stats.ratio();
    row.bits_per_symbol = stats.bits_per_symbol();

    let server = match predictor {
        PredictorSource::Server { endpoint, .. } => Some(endpoint.clone()),
        PredictorSource::Builtin(_) => None,
    };
    let dopts = DecompressOptions { server, jobs: opts.jobs };
    match decompress(&archive, &dopts) {
        Ok(out) if out == input => row.verified = true,
        Ok(_) => row.error = Some("round trip produced different bytes".into()),
        Err(e) => row.error = Some(format!("round trip failed: {e}")),
    }
    row
}

/// Runs every predictor over every file in `corpus`. Unreadable files and
/// coding failures are recorded as failed rows; only an unreadable corpus
/// directory is an error.
pub fn run_bench(corpus: &Path, predictors: &[PredictorSource], opts: &CompressOptions) -> Result<BenchReport> {
    let files = corpus_files(corpus)?;
    let mut rows = Vec::new();
    for file in &files {
        let rel = file.strip_prefix(corpus).unwrap_or(file).display().to_string();
        let input = fs::read(file);
        for p in predictors {
            let row = match &input {
                Ok(bytes) => bench_bytes(&rel, bytes, p, opts),
                Err(e) => BenchRow {
                    path: rel.clone(),
                    media: None,
                    predictor: match p {
                        PredictorSource::Builtin(spec) => spec.to_string(),
                        PredictorSource::Server { endpoint, .. } => endpoint.to_string(),
                    },
                    original_bytes: 0,
                    compressed_bytes: None,
                    ratio: None,
                    bits_per_symbol: None,
                    wall_ms: 0.0,
                    verified: false,
                    error: Some(format!("read failed: {e}")),
                },
            };
            rows.push(row);
        }
    }
    Ok(report_from_rows(rows, predictors.len()))
}

/// Sorts rows and computes per-predictor aggregates from summed sizes.
pub fn report_from_rows(mut rows: Vec<BenchRow>, predictor_hint: usize) -> BenchReport {
    let mut order: Vec<String> = Vec::with_capacity(predictor_hint);
    for r in &rows {
        if !order.contains(&r.predictor) {
            order.push(r.predictor.clone());
        }
    }
    rows.sort_by(|a, b| a.path.cmp(&b.path).then_with(|| a.predictor.cmp(&b.predictor)));
    let aggregates = order
        .into_iter()
        .map(|p| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.predictor == p).collect();
            let ok: Vec<&&BenchRow> = mine.iter().filter(|r| r.error.is_none()).collect();
            let original: u64 = ok.iter().map(|r| r.original_bytes).sum();
            let compressed: u64 = ok.iter().filter_map(|r| r.compressed_bytes).sum();
            BenchAggregate {
                predictor: p,
                files: mine.len(),
                failures: mine.len() - ok.len(),
                original_bytes: original,
                compressed_bytes: compressed,
                ratio: (original > 0 && compressed > 0).then(|| original as f64 / compressed as f64),
            }
        })
        .collect();
    BenchReport { rows, aggregates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::PredictorSpec;

    #[test]
    fn aggregate_uses_summed_sizes() {
        let row = |path: &str, o, c| BenchRow {
            path: path.into(),
            media: Some("text".into()),
            predictor: "p".into(),
            original_bytes: o,
            compressed_bytes: Some(c),
            ratio: Some(o as f64 / c as f64),
            bits_per_symbol: None,
            wall_ms: 0.0,
            verified: true,
            error: None,
        };
        let report = report_from_rows(vec![row("b", 100, 10), row("a", 900, 900)], 1);
        assert_eq!(report.rows[0].path, "a");
        assert_eq!(report.aggregates[0].ratio, Some(1000.0 / 910.0));
    }

    #[test]
    fn rows_serialize_with_documented_fields() {
        let row = bench_bytes(
            "x.txt",
            b"abcabcabc",
            &PredictorSource::Builtin(PredictorSpec::order0(256)),
            &CompressOptions::default(),
        );
        assert!(row.verified, "{row:?}");
        let report = report_from_rows(vec![row], 1);
        let lines = report.to_json_lines();
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        for key in [
            "record", "path", "media", "predictor", "original_bytes", "compressed_bytes", "ratio",
            "bits_per_symbol", "wall_ms", "verified", "error",
        ] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(first["record"], "file");
        assert!(lines.lines().nth(1).unwrap().contains("\"record\":\"aggregate\""));
    }
}
