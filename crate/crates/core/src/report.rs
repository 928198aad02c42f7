//! Long-format CSV tables with fixed columns, row order and number formatting.

use std::io::{self, Write};

use crate::experiment::{MetricName, SkipRecord, SummaryRow, SweepRecord, SweepResult};
use crate::metrics::{MatchMode, MetricRecord};

pub const ROW_COLUMNS: [&str; 10] = [
    "speaker_id",
    "timepoint_min",
    "k_assignment",
    "window_minutes",
    "window_index",
    "mode",
    "scope",
    "metric",
    "value",
    "skip_reason",
];

pub const AGGREGATE_COLUMNS: [&str; 11] = [
    "timepoint_min",
    "k_assignment",
    "window_minutes",
    "window_index",
    "mode",
    "scope",
    "metric",
    "mean",
    "std",
    "defined",
    "speakers",
];

/// One metric value, or one skipped grid cell.
///
/// A record row carries a `metric`; its `value` is `None` when the metric is
/// undefined for that window. A skip row has no window, scope or metric and
/// carries a `skip_reason`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub speaker_id: String,
    pub timepoint_min: u32,
    pub k_assignment: String,
    pub window_minutes: u32,
    pub window_index: Option<usize>,
    pub mode: MatchMode,
    pub scope: Option<String>,
    pub metric: Option<MetricName>,
    pub value: Option<f64>,
    pub skip_reason: Option<String>,
}

pub fn format_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

impl ReportRow {
    fn fields(&self) -> [String; 10] {
        [
            self.speaker_id.clone(),
            self.timepoint_min.to_string(),
            self.k_assignment.clone(),
            self.window_minutes.to_string(),
            self.window_index.map_or_else(String::new, |i| i.to_string()),
            self.mode.to_string(),
            self.scope.clone().unwrap_or_default(),
            self.metric.map_or_else(String::new, |m| m.to_string()),
            format_value(self.value),
            self.skip_reason.clone().unwrap_or_default(),
        ]
    }
}

/// Identifies the table a set of metric records belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RowContext {
    pub speaker_id: String,
    pub timepoint_min: u32,
    pub k_assignment: String,
    pub window_minutes: u32,
}

/// Expands each record into one row per applicable metric.
pub fn metric_rows(ctx: &RowContext, records: &[MetricRecord]) -> Vec<ReportRow> {
    records
        .iter()
        .flat_map(|r| {
            MetricName::ALL.into_iter().filter(|m| m.applies_to(r.scope)).map(move |m| ReportRow {
                speaker_id: ctx.speaker_id.clone(),
                timepoint_min: ctx.timepoint_min,
                k_assignment: ctx.k_assignment.clone(),
                window_minutes: ctx.window_minutes,
                window_index: Some(r.window_index),
                mode: r.mode,
                scope: Some(r.scope.to_string()),
                metric: Some(m),
                value: m.value(r),
                skip_reason: None,
            })
        })
        .collect()
}

fn record_rows(r: &SweepRecord) -> Vec<ReportRow> {
    let ctx = RowContext {
        speaker_id: r.speaker_id.clone(),
        timepoint_min: r.timepoint_min,
        k_assignment: r.k_assignment.clone(),
        window_minutes: r.window_minutes,
    };
    metric_rows(&ctx, std::slice::from_ref(&r.metric))
}

fn skip_row(s: &SkipRecord) -> ReportRow {
    ReportRow {
        speaker_id: s.speaker_id.clone(),
        timepoint_min: s.timepoint_min,
        k_assignment: s.k_assignment.clone(),
        window_minutes: s.window_minutes,
        window_index: None,
        mode: s.mode,
        scope: None,
        metric: None,
        value: None,
        skip_reason: Some(s.reason.code().to_string()),
    }
}

/// All rows of a sweep: metric rows in sweep order, then skipped cells.
pub fn sweep_rows(r: &SweepResult) -> Vec<ReportRow> {
    r.records.iter().flat_map(record_rows).chain(r.skips.iter().map(skip_row)).collect()
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn flush<W: Write>(w: csv::Writer<W>) -> io::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.flush()
}

pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(ROW_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    flush(w)
}

pub fn write_aggregate<W: Write>(out: W, rows: &[SummaryRow]) -> io::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(AGGREGATE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.timepoint_min.to_string(),
            r.k_assignment.clone(),
            r.window_minutes.to_string(),
            r.window_index.to_string(),
            r.mode.to_string(),
            r.scope.to_string(),
            r.metric.to_string(),
            format_value(r.mean),
            format_value(r.std),
            r.defined.to_string(),
            r.speakers.to_string(),
        ])?;
    }
    flush(w)
}

pub fn rows_to_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 fields")
}
