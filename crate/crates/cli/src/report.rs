//! Report rows and their text, CSV and JSON renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use idcfuse::{MetricsReport, OpCounters};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column headers in their fixed order.
pub const CSV_HEADER: [&str; 9] = [
    "label",
    "CE",
    "RMSE",
    "PSNR",
    "SSIM",
    "time(s)",
    "mult_count",
    "add_count",
    "iterations",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub ce: Option<f64>,
    pub rmse: Option<f64>,
    /// Infinite for a perfect match; serialized as the string `"inf"`.
    #[serde(with = "psnr_serde")]
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub time_seconds: f64,
    pub mult_count: Option<u64>,
    pub add_count: Option<u64>,
    pub iterations: Option<u64>,
}

impl ReportRow {
    pub fn from_metrics(label: impl Into<String>, report: &MetricsReport) -> Self {
        let mut row = Self::timing_only(label, report.wall_time_seconds, report.counters);
        row.ce = Some(report.ce);
        row.rmse = Some(report.rmse);
        row.psnr = Some(report.psnr);
        row.ssim = Some(report.ssim);
        row
    }

    pub fn timing_only(
        label: impl Into<String>,
        time_seconds: f64,
        counters: Option<OpCounters>,
    ) -> Self {
        Self {
            label: label.into(),
            ce: None,
            rmse: None,
            psnr: None,
            ssim: None,
            time_seconds,
            mult_count: counters.map(|c| c.fusion_pool_multiplications),
            add_count: counters.map(|c| c.fusion_pool_additions),
            iterations: counters.map(|c| c.iterations),
        }
    }
}

mod psnr_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if *x == f64::INFINITY => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Num(x)) => Ok(Some(x)),
            Some(Raw::Text(t)) if t.is_empty() => Ok(None),
            Some(Raw::Text(t)) => match t.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(Some(f64::INFINITY)),
                other => other
                    .parse()
                    .map(Some)
                    .map_err(|_| de::Error::custom(format!("invalid psnr '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!(
                "unknown format '{other}' (expected text, csv or json)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv header mismatch: {0}")]
    Header(String),
}

fn opt(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) if x == f64::INFINITY => "inf".to_string(),
        Some(x) => format!("{x:.prec$}"),
        None => "-".to_string(),
    }
}

fn opt_int(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Renders rows as an aligned table.
pub fn to_text(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                opt(r.ce, 4),
                opt(r.rmse, 4),
                opt(r.psnr, 4),
                opt(r.ssim, 4),
                format!("{:.4}", r.time_seconds),
                opt_int(r.mult_count),
                opt_int(r.add_count),
                opt_int(r.iterations),
            ]
        })
        .collect();
    let mut widths = CSV_HEADER.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |fields: Vec<&str>| {
        let mut s = String::new();
        for (i, (f, w)) in fields.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{f:<w$}");
            } else {
                let _ = write!(s, "  {f:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(CSV_HEADER.to_vec());
    for row in &cells {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn to_csv(rows: &[ReportRow]) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ReportError::Header(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| ReportError::Header("empty input".into()))??;
    if header.iter().ne(CSV_HEADER) {
        return Err(ReportError::Header(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    records.map(|rec| Ok(rec?.deserialize(None)?)).collect()
}

/// One row serializes as an object, several as an array.
pub fn to_json(rows: &[ReportRow]) -> Result<String, ReportError> {
    Ok(match rows {
        [row] => serde_json::to_string_pretty(row)?,
        _ => serde_json::to_string_pretty(rows)?,
    })
}

pub fn from_json(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    })
}

pub fn render(rows: &[ReportRow], format: ReportFormat) -> Result<String, ReportError> {
    match format {
        ReportFormat::Text => Ok(to_text(rows)),
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows).map(|mut s| {
            s.push('\n');
            s
        }),
    }
}
