use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub passed: bool,
    /// Worst residual, or the decisive statistic for yes/no checks.
    pub worst: f64,
    pub at: Option<Vec<f64>>,
    pub tol: f64,
    pub detail: String,
    /// Extra lines shown under the record in the table.
    pub rows: Vec<String>,
}

impl Record {
    pub fn residual(name: &str, worst: f64, at: Option<Vec<f64>>, tol: f64, detail: String) -> Self {
        Record { name: name.to_string(), passed: worst <= tol, worst, at, tol, detail, rows: Vec::new() }
    }

    pub fn failed(name: &str, tol: f64, error: String) -> Self {
        Record { name: name.to_string(), passed: false, worst: f64::NAN, at: None, tol, detail: format!("error: {error}"), rows: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub records: Vec<Record>,
    pub elapsed: Duration,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Structured,
}

#[derive(Debug, Error)]
#[error("unknown format `{0}` (expected `table` or `structured`)")]
pub struct UnknownFormat(pub String);

impl std::str::FromStr for Format {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "structured" => Ok(Format::Structured),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

fn float(v: f64) -> String {
    format!("{v:.6e}")
}

fn point(p: &Option<Vec<f64>>) -> String {
    match p {
        Some(p) if !p.is_empty() => p.iter().map(|v| float(*v)).collect::<Vec<_>>().join(","),
        _ => "-".into(),
    }
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Structured => render_structured(report),
        Format::Table => render_table(report),
    }
}

/// One `key=value` record per check after a header; no timing, so the
/// output depends only on the scenario and the seed.
pub fn render_structured(report: &Report) -> String {
    let mut out = format!("scenario={} seed={}\n", report.scenario, report.seed);
    for r in &report.records {
        let _ = writeln!(
            out,
            "check={} status={} worst={} at={} tol={}",
            r.name,
            status(r.passed),
            float(r.worst),
            point(&r.at),
            float(r.tol)
        );
    }
    out
}

pub fn render_table(report: &Report) -> String {
    let header = ["check", "status", "worst", "tol", "at"];
    let rows: Vec<[String; 5]> = report
        .records
        .iter()
        .map(|r| {
            let at = match &r.at {
                Some(p) if !p.is_empty() => format!("({})", p.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")),
                _ => "-".into(),
            };
            [r.name.clone(), status(r.passed).to_uppercase(), format!("{:.3e}", r.worst), format!("{:.1e}", r.tol), at]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = format!("scenario {} (seed {})\n", report.scenario, report.seed);
    out += &line(&header.map(String::from));
    out.push('\n');
    out += &line(&widths.map(|w| "-".repeat(w)));
    out.push('\n');
    for (row, r) in rows.iter().zip(&report.records) {
        out += &line(row);
        out.push('\n');
        let _ = writeln!(out, "    {}", r.detail);
        for extra in &r.rows {
            let _ = writeln!(out, "    {extra}");
        }
    }
    let failed = report.records.iter().filter(|r| !r.passed).count();
    let _ = writeln!(
        out,
        "{} of {} checks passed in {:.2} s",
        report.records.len() - failed,
        report.records.len(),
        report.elapsed.as_secs_f64()
    );
    out
}
