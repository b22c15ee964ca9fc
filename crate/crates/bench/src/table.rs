//! Result tables and their CSV / Markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Arm;
use crate::error::{BenchError, Result};

/// Method column of the per-arm model quality rows.
pub const MODEL_PERFORMANCE: &str = "model_performance";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellValue {
    /// Mean and population standard deviation over trials.
    Value { mean: f64, std: f64 },
    /// The first failure among the trials of this cell.
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub arm: Arm,
    pub method: String,
    pub target: String,
    pub metric: String,
    pub value: CellValue,
    /// Trials that produced a value.
    pub n_trials: usize,
    /// Mean attribution wall time in seconds, when measured.
    pub runtime: Option<f64>,
}

impl ResultRow {
    pub fn mean(&self) -> Option<f64> {
        match self.value {
            CellValue::Value { mean, .. } => Some(mean),
            CellValue::Error(_) => None,
        }
    }

    pub fn std(&self) -> Option<f64> {
        match self.value {
            CellValue::Value { std, .. } => Some(std),
            CellValue::Error(_) => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self.value, CellValue::Error(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_error()).count()
    }

    /// First row matching the key; `metric` may be omitted.
    pub fn find(&self, dataset: &str, arm: Arm, method: &str, metric: Option<&str>) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.dataset == dataset && r.arm == arm && r.method == method && metric.is_none_or(|m| r.metric == m)
        })
    }

    /// Drops measured runtimes, leaving a table that depends only on seeds.
    pub fn without_runtimes(mut self) -> Self {
        for r in &mut self.rows {
            r.runtime = None;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TableFormat {
    #[default]
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    /// Include the runtime column. Off by default because wall times differ
    /// between otherwise identical runs.
    pub timings: bool,
}

pub fn render_table(table: &ResultTable, format: TableFormat, opts: RenderOptions) -> Result<String> {
    if table.rows.is_empty() {
        return Err(BenchError::Format("cannot render an empty result table".into()));
    }
    match format {
        TableFormat::Csv => render_csv(table, opts),
        TableFormat::Markdown => Ok(render_markdown(table, opts)),
    }
}

fn render_csv(table: &ResultTable, opts: RenderOptions) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset", "arm", "method", "target", "metric", "mean", "std", "n_trials"];
    if opts.timings {
        header.push("runtime_s");
    }
    w.write_record(&header)?;
    for r in &table.rows {
        let (mean, std) = match &r.value {
            CellValue::Value { mean, std } => (mean.to_string(), std.to_string()),
            CellValue::Error(reason) => (format!("ERR({reason})"), String::new()),
        };
        let mut rec = vec![
            r.dataset.clone(),
            r.arm.name().to_owned(),
            r.method.clone(),
            r.target.clone(),
            r.metric.clone(),
            mean,
            std,
            r.n_trials.to_string(),
        ];
        if opts.timings {
            rec.push(r.runtime.map(|t| t.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Format(e.to_string()))
}

/// `mean ± std` rounded to three decimals, e.g. `0.175 ± 0.040`.
pub fn format_cell(value: &CellValue) -> String {
    match value {
        CellValue::Value { mean, std } => format!("{} ± {}", round3(*mean), round3(*std)),
        CellValue::Error(reason) => format!("ERR({reason})"),
    }
}

// Avoids printing "-0.000" for tiny negative means.
fn round3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn render_markdown(table: &ResultTable, opts: RenderOptions) -> String {
    let mut header = vec!["dataset", "arm", "method", "target", "metric", "value", "trials"];
    if opts.timings {
        header.push("runtime (s)");
    }
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in &table.rows {
        let mut cells = vec![
            r.dataset.clone(),
            r.arm.name().to_owned(),
            r.method.clone(),
            r.target.clone(),
            r.metric.clone(),
            format_cell(&r.value).replace('|', "\\|"),
            r.n_trials.to_string(),
        ];
        if opts.timings {
            cells.push(r.runtime.map(|t| format!("{t:.3}")).unwrap_or_default());
        }
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: CellValue) -> ResultRow {
        ResultRow {
            dataset: "weighted".into(),
            arm: Arm::Handcrafted,
            method: "deeplift".into(),
            target: "scalar".into(),
            metric: "mse".into(),
            value,
            n_trials: 5,
            runtime: Some(0.25),
        }
    }

    #[test]
    fn markdown_rounding() {
        assert_eq!(format_cell(&CellValue::Value { mean: 0.17468, std: 0.0402 }), "0.175 ± 0.040");
        assert_eq!(format_cell(&CellValue::Value { mean: -1e-9, std: 0.0 }), "0.000 ± 0.000");
    }

    #[test]
    fn single_cell_csv_has_header_and_one_row() {
        let t = ResultTable {
            rows: vec![row(CellValue::Value { mean: 0.1, std: 0.0 })],
        };
        let csv = render_table(&t, TableFormat::Csv, RenderOptions::default()).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), "dataset,arm,method,target,metric,mean,std,n_trials");
        assert_eq!(csv.lines().nth(1).unwrap(), "weighted,handcrafted,deeplift,scalar,mse,0.1,0,5");
        let timed = render_table(&t, TableFormat::Csv, RenderOptions { timings: true }).unwrap();
        assert!(timed.lines().nth(1).unwrap().ends_with(",0.25"));
    }

    #[test]
    fn error_cells() {
        let t = ResultTable {
            rows: vec![row(CellValue::Error("degenerate sampling".into()))],
        };
        let md = render_table(&t, TableFormat::Markdown, RenderOptions::default()).unwrap();
        assert!(md.contains("ERR(degenerate sampling)"));
        let csv = render_table(&t, TableFormat::Csv, RenderOptions::default()).unwrap();
        assert!(csv.contains("ERR(degenerate sampling),,5"));
        assert_eq!(t.error_count(), 1);
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(render_table(&ResultTable::default(), TableFormat::Csv, RenderOptions::default()).is_err());
    }
}
