//! Benchmark reports and their JSON, Markdown and CSV renderings.

use serde::{Deserialize, Serialize};

use crate::config::LayerConfig;
use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Only one engine ran, or verification was off.
    Unverified,
    /// The config could not be run.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub element_bytes: usize,
    pub threads: usize,
    pub seed: u64,
    pub engines: String,
    pub verify: bool,
    pub repeats_override: Option<usize>,
}

/// One row of the report. Flat so the CSV form carries every field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub input_h: usize,
    pub input_w: usize,
    pub c_in: usize,
    pub kernel_n: usize,
    pub c_out: usize,
    pub pad: usize,
    pub repeats: usize,
    pub batch: usize,
    pub output_h: Option<usize>,
    pub output_w: Option<usize>,
    pub time_ref_s: Option<f64>,
    pub time_seg_s: Option<f64>,
    pub speedup: Option<f64>,
    pub mults_ref: Option<u64>,
    pub mults_seg: Option<u64>,
    pub savings_total_bytes: Option<u64>,
    pub savings_net_bytes: Option<u64>,
    pub verdict: Verdict,
    pub max_abs_diff: Option<f64>,
    pub max_rel_diff: Option<f64>,
    pub digest_ref: Option<String>,
    pub digest_seg: Option<String>,
    pub error: Option<String>,
}

impl LayerRecord {
    pub fn from_config(cfg: &LayerConfig, repeats: usize) -> Self {
        Self {
            name: cfg.name.clone(),
            input_h: cfg.input_h,
            input_w: cfg.input_w,
            c_in: cfg.c_in,
            kernel_n: cfg.kernel_n,
            c_out: cfg.c_out,
            pad: cfg.pad,
            repeats,
            batch: 0,
            output_h: None,
            output_w: None,
            time_ref_s: None,
            time_seg_s: None,
            speedup: None,
            mults_ref: None,
            mults_seg: None,
            savings_total_bytes: None,
            savings_net_bytes: None,
            verdict: Verdict::Error,
            max_abs_diff: None,
            max_rel_diff: None,
            digest_ref: None,
            digest_seg: None,
            error: None,
        }
    }

    pub(crate) fn failed(mut self, msg: String) -> Self {
        self.verdict = Verdict::Error;
        self.error = Some(msg);
        self
    }

    pub fn flop_ratio(&self) -> Option<f64> {
        Some(self.mults_ref? as f64 / self.mults_seg? as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub environment: Environment,
    pub records: Vec<LayerRecord>,
}

impl BenchReport {
    pub fn any_failed(&self) -> bool {
        self.records.iter().any(|r| r.verdict == Verdict::Fail)
    }

    pub fn any_errored(&self) -> bool {
        self.records.iter().any(|r| r.verdict == Verdict::Error)
    }

    /// Process exit status: 0 clean, 1 verification failure, 2 config error.
    pub fn exit_code(&self) -> i32 {
        if self.any_errored() {
            2
        } else if self.any_failed() {
            1
        } else {
            0
        }
    }

    /// Copy with wall-time fields cleared, for comparing runs.
    pub fn without_timings(&self) -> BenchReport {
        let mut out = self.clone();
        for r in &mut out.records {
            r.time_ref_s = None;
            r.time_seg_s = None;
            r.speedup = None;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!(
                "unknown format `{other}`, expected json|markdown|csv"
            )),
        }
    }
}

pub fn emit_report(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Markdown => to_markdown(report),
        Format::Csv => to_csv(&report.records),
    }
}

pub fn to_json(report: &BenchReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn from_json(text: &str) -> Result<BenchReport> {
    serde_json::from_str(text).map_err(|e| BenchError::Report(e.to_string()))
}

pub fn to_csv(records: &[LayerRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        // header only
        w.write_record(CSV_COLUMNS).expect("in-memory write");
    }
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn from_csv(text: &str) -> Result<Vec<LayerRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| BenchError::Report(e.to_string()))
}

const CSV_COLUMNS: &[&str] = &[
    "name",
    "input_h",
    "input_w",
    "c_in",
    "kernel_n",
    "c_out",
    "pad",
    "repeats",
    "batch",
    "output_h",
    "output_w",
    "time_ref_s",
    "time_seg_s",
    "speedup",
    "mults_ref",
    "mults_seg",
    "savings_total_bytes",
    "savings_net_bytes",
    "verdict",
    "max_abs_diff",
    "max_rel_diff",
    "digest_ref",
    "digest_seg",
    "error",
];

fn group_digits(v: u64) -> String {
    let s = v.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

pub fn to_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str("| layer | input size | kernel size | time_ref (s) | time_seg (s) | speedup | mults_ref | mults_seg | memory savings (bytes) |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for r in &report.records {
        out.push_str(&format!(
            "| {} | {} × {} × {} | {} × {} × {} × {} | {} | {} | {} | {} | {} | {} |\n",
            r.name,
            r.input_h,
            r.input_w,
            r.c_in,
            r.kernel_n,
            r.kernel_n,
            r.c_in,
            r.c_out,
            opt(r.time_ref_s, |t| format!("{t:.6}")),
            opt(r.time_seg_s, |t| format!("{t:.6}")),
            opt(r.speedup, |s| format!("{s:.3}")),
            opt(r.mults_ref, group_digits),
            opt(r.mults_seg, group_digits),
            opt(r.savings_total_bytes, group_digits),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Environment {
        Environment {
            element_bytes: 4,
            threads: 1,
            seed: 42,
            engines: "both".into(),
            verify: true,
            repeats_override: None,
        }
    }

    #[test]
    fn digit_grouping() {
        assert_eq!(group_digits(0), "0");
        assert_eq!(group_digits(999), "999");
        assert_eq!(group_digits(495_616), "495,616");
        assert_eq!(group_digits(17_172_736), "17,172,736");
    }

    #[test]
    fn empty_report_renders_in_every_format() {
        let report = BenchReport {
            environment: env(),
            records: vec![],
        };
        let json = emit_report(&report, Format::Json);
        assert_eq!(from_json(&json).unwrap(), report);
        let md = emit_report(&report, Format::Markdown);
        assert_eq!(md.lines().count(), 2);
        let csv = emit_report(&report, Format::Csv);
        assert!(from_csv(&csv).unwrap().is_empty());
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn exit_codes() {
        let cfg = LayerConfig::new("x", (2, 2, 1), 2, 1);
        let mut ok = LayerRecord::from_config(&cfg, 1);
        ok.verdict = Verdict::Pass;
        let mut report = BenchReport {
            environment: env(),
            records: vec![ok.clone()],
        };
        assert_eq!(report.exit_code(), 0);
        report.records[0].verdict = Verdict::Unverified;
        assert_eq!(report.exit_code(), 0);
        report.records[0].verdict = Verdict::Fail;
        assert_eq!(report.exit_code(), 1);
        report.records.push(ok.failed("boom".into()));
        assert_eq!(report.exit_code(), 2);
    }
}
