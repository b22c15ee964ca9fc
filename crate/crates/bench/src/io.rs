//! File formats: networks as JSON, dataset bundles and attribution
//! matrices as CSV with a JSON metadata sidecar next to each table.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so a
//! write followed by a read reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use attribench_core::attr::{AttributionMatrix, AttributionMethodConfig};
use attribench_core::data::{DatasetBundle, GroundTruth, Split};
use attribench_core::forge::{FeatureKind, ModelSpec};
use attribench_core::nn::FeedForwardNet;
use attribench_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

const FORMAT_VERSION: u32 = 1;

/// Path of the metadata sidecar of a table: `data.csv` → `data.meta.json`.
pub fn sidecar_path(table: &Path) -> PathBuf {
    table.with_extension("meta.json")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    fs::write(path, text).map_err(BenchError::io(path))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(BenchError::io(path))
}

pub fn net_to_json(net: &FeedForwardNet) -> Result<String> {
    Ok(serde_json::to_string_pretty(net)?)
}

pub fn net_from_json(text: &str) -> Result<FeedForwardNet> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_net(path: &Path, net: &FeedForwardNet) -> Result<()> {
    write_text(path, &net_to_json(net)?)
}

pub fn read_net(path: &Path) -> Result<FeedForwardNet> {
    net_from_json(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleMeta {
    format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    split: Option<Split>,
    kinds: Vec<FeatureKind>,
    n_labels: usize,
    ground_truth: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mask: Option<Vec<bool>>,
    model: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributionMeta {
    format_version: u32,
    rows: usize,
    cols: usize,
    config: AttributionMethodConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    elapsed_seconds: Option<f64>,
}

fn write_csv(header: &[String], rows: usize, cell: impl Fn(usize, usize) -> f64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    let mut record = Vec::with_capacity(header.len());
    for r in 0..rows {
        record.clear();
        record.extend((0..header.len()).map(|c| cell(r, c).to_string()));
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Format(e.to_string()))
}

/// Parses a numeric CSV table; returns the header and row-major values.
fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| BenchError::Format(format!("row {}: `{s}` is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Renders a bundle as CSV (`x*` features, `y*` labels and, for exact
/// ground truth, `gt*` attributions) plus its JSON sidecar.
pub fn bundle_to_strings(bundle: &DatasetBundle, split: Option<Split>) -> Result<(String, String)> {
    let n = bundle.features.cols();
    let k = bundle.labels.cols();
    let mut header = columns("x", n);
    header.extend(columns("y", k));
    let exact = match &bundle.ground_truth {
        GroundTruth::Exact(m) => Some(m),
        _ => None,
    };
    if exact.is_some() {
        header.extend(columns("gt", n));
    }
    let csv = write_csv(&header, bundle.len(), |r, c| {
        if c < n {
            bundle.features.get(r, c)
        } else if c < n + k {
            bundle.labels.get(r, c - n)
        } else {
            exact.unwrap().get(r, c - n - k)
        }
    })?;
    let meta = BundleMeta {
        format_version: FORMAT_VERSION,
        split,
        kinds: bundle.kinds.clone(),
        n_labels: k,
        ground_truth: bundle.ground_truth.kind().to_owned(),
        mask: match &bundle.ground_truth {
            GroundTruth::Mask(m) => Some(m.clone()),
            _ => None,
        },
        model: bundle.model.clone(),
    };
    Ok((csv, serde_json::to_string_pretty(&meta)?))
}

pub fn bundle_from_strings(csv: &str, meta: &str) -> Result<DatasetBundle> {
    let meta: BundleMeta = serde_json::from_str(meta)?;
    let (header, rows) = read_csv(csv)?;
    let n = meta.kinds.len();
    let k = meta.n_labels;
    let exact = meta.ground_truth == "exact";
    let width = n + k + if exact { n } else { 0 };
    let mut expected = columns("x", n);
    expected.extend(columns("y", k));
    if exact {
        expected.extend(columns("gt", n));
    }
    if header != expected {
        return Err(BenchError::Format(format!(
            "expected columns {}, found {}",
            expected.join(","),
            header.join(",")
        )));
    }
    let take = |lo: usize, hi: usize| -> Result<Matrix> {
        let data = rows.iter().flat_map(|r| r[lo..hi].iter().copied()).collect();
        Ok(Matrix::from_vec(rows.len(), hi - lo, data)?)
    };
    if rows.iter().any(|r| r.len() != width) {
        return Err(BenchError::Format("ragged rows".into()));
    }
    let ground_truth = match meta.ground_truth.as_str() {
        "exact" => GroundTruth::Exact(take(n + k, width)?),
        "mask" => GroundTruth::Mask(
            meta.mask
                .ok_or_else(|| BenchError::Format("mask ground truth without a mask".into()))?,
        ),
        "none" => GroundTruth::None,
        other => return Err(BenchError::Format(format!("unknown ground truth kind `{other}`"))),
    };
    Ok(DatasetBundle {
        features: take(0, n)?,
        labels: take(n, n + k)?,
        kinds: meta.kinds,
        ground_truth,
        model: meta.model,
    })
}

pub fn write_bundle(path: &Path, bundle: &DatasetBundle, split: Option<Split>) -> Result<()> {
    let (csv, meta) = bundle_to_strings(bundle, split)?;
    write_text(path, &csv)?;
    write_text(&sidecar_path(path), &meta)
}

pub fn read_bundle(path: &Path) -> Result<DatasetBundle> {
    bundle_from_strings(&read_text(path)?, &read_text(&sidecar_path(path))?)
}

pub fn attribution_to_strings(attr: &AttributionMatrix) -> Result<(String, String)> {
    let csv = write_csv(&columns("phi", attr.cols()), attr.rows(), |r, c| attr.values.get(r, c))?;
    let meta = AttributionMeta {
        format_version: FORMAT_VERSION,
        rows: attr.rows(),
        cols: attr.cols(),
        config: attr.config.clone(),
        elapsed_seconds: attr.elapsed.map(|d| d.as_secs_f64()),
    };
    Ok((csv, serde_json::to_string_pretty(&meta)?))
}

pub fn attribution_from_strings(csv: &str, meta: &str) -> Result<AttributionMatrix> {
    let meta: AttributionMeta = serde_json::from_str(meta)?;
    let (header, rows) = read_csv(csv)?;
    if header != columns("phi", meta.cols) || rows.len() != meta.rows || rows.iter().any(|r| r.len() != meta.cols) {
        return Err(BenchError::Format(format!(
            "attribution table does not match its {}×{} sidecar",
            meta.rows, meta.cols
        )));
    }
    let values = Matrix::from_vec(meta.rows, meta.cols, rows.into_iter().flatten().collect())?;
    Ok(AttributionMatrix {
        values,
        config: meta.config,
        elapsed: meta.elapsed_seconds.map(Duration::from_secs_f64),
    })
}

pub fn write_attribution(path: &Path, attr: &AttributionMatrix) -> Result<()> {
    let (csv, meta) = attribution_to_strings(attr)?;
    write_text(path, &csv)?;
    write_text(&sidecar_path(path), &meta)
}

pub fn read_attribution(path: &Path) -> Result<AttributionMatrix> {
    attribution_from_strings(&read_text(path)?, &read_text(&sidecar_path(path))?)
}

pub fn write_output(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}

pub fn read_input(path: &Path) -> Result<String> {
    read_text(path)
}
