//! Result tables: `results.csv` plus one SVG chart per metric.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::plot::{line_chart, Series};
use crate::sim::{SweepKind, SweepReport};

pub const RESULTS_HEADER: [&str; 7] = [
    "sweep_value",
    "scheme",
    "success_rate",
    "rate_bps_hz",
    "overhead",
    "trials",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: String,
    /// Empty in the CSV for schemes that select no codeword.
    pub success_rate: Option<f64>,
    pub rate_bps_hz: f64,
    pub overhead: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// One row per (point, scheme), points outermost.
    pub fn from_report(report: &SweepReport) -> Self {
        let rows = report
            .points
            .iter()
            .flat_map(|p| {
                p.stats.iter().map(move |s| ResultRow {
                    sweep_value: p.value,
                    scheme: s.scheme.to_string(),
                    success_rate: s.success_rate,
                    rate_bps_hz: s.mean_rate,
                    overhead: s.overhead,
                    trials: s.trials,
                    seed: report.seed,
                })
            })
            .collect();
        ResultTable { rows }
    }

    /// Writes `# ...` comment lines followed by the CSV table.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        for c in comments {
            writeln!(file, "# {c}").map_err(|e| Error::io(path, e))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(RESULTS_HEADER).map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            w.write_record([
                r.sweep_value.to_string(),
                r.scheme.clone(),
                r.success_rate.map(|v| v.to_string()).unwrap_or_default(),
                r.rate_bps_hz.to_string(),
                r.overhead.to_string(),
                r.trials.to_string(),
                r.seed.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        let mut file = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        file.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let header = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        if header.iter().ne(RESULTS_HEADER) {
            return Err(bad("unexpected results header".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let f = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("{}: {e}", RESULTS_HEADER[i])))
            };
            rows.push(ResultRow {
                sweep_value: f(0)?,
                scheme: rec[1].to_string(),
                success_rate: if rec[2].is_empty() { None } else { Some(f(2)?) },
                rate_bps_hz: f(3)?,
                overhead: f(4)?,
                trials: rec[5].parse().map_err(|e| bad(format!("trials: {e}")))?,
                seed: rec[6].parse().map_err(|e| bad(format!("seed: {e}")))?,
            });
        }
        Ok(ResultTable { rows })
    }
}

/// Comment lines that let a run be reproduced exactly.
pub fn header_lines(report: &SweepReport, config_hash: &str) -> Vec<String> {
    let mut line = format!(
        "xlbt sweep={} config_hash={config_hash} seed={} trials={}",
        report.kind, report.seed, report.trials
    );
    for (k, v) in &report.notes {
        line.push_str(&format!(" {k}={v}"));
    }
    vec![line]
}

fn series(report: &SweepReport, metric: impl Fn(&crate::sim::SchemeStats) -> Option<f64>) -> Vec<Series> {
    report
        .schemes
        .iter()
        .enumerate()
        .filter_map(|(i, scheme)| {
            let points: Vec<(f64, f64)> = report
                .points
                .iter()
                .filter_map(|p| metric(&p.stats[i]).map(|y| (p.value, y)))
                .collect();
            (!points.is_empty()).then(|| Series {
                label: scheme.to_string(),
                points,
            })
        })
        .collect()
}

/// Writes `results.csv`, `success_rate.svg` and `rate.svg` under `outdir`.
pub fn emit_results(
    report: &SweepReport,
    table: &ResultTable,
    outdir: &Path,
    config_hash: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let comments = header_lines(report, config_hash);
    let csv_path = outdir.join("results.csv");
    table.write_csv(&csv_path, &comments)?;

    let x_label = match report.kind {
        SweepKind::Snr => "reference SNR (dB)",
        SweepKind::Distance => "distance (m)",
        SweepKind::Single => "trial",
    };
    let comment = comments.join(" ");
    let charts = [
        (
            "success_rate.svg",
            "Success rate",
            "success rate",
            series(report, |s| s.success_rate),
        ),
        (
            "rate.svg",
            "Achievable rate",
            "rate (bps/Hz)",
            series(report, |s| Some(s.mean_rate)),
        ),
    ];
    let mut paths = vec![csv_path];
    for (name, title, y_label, data) in charts {
        let path = outdir.join(name);
        let svg = line_chart(title, x_label, y_label, &data, &comment);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads the `#` comment lines at the top of a results file.
pub fn read_header_comments(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match line.strip_prefix("# ") {
            Some(c) => out.push(c.to_string()),
            None => break,
        }
    }
    Ok(out)
}
