//! The compliance report and its JSON and text renderings.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::{AppDataRoot, FileDigest};
use crate::model::{RecordKind, SourceLocator};
use crate::parsers::glucosmart::DatabaseStatus;
use crate::parsers::SkippedRow;
use crate::phi::{CellState, PhiCategory, PhiFinding, PhiMatrixRow, SecurityViolation, Severity};
use crate::time::UtcInstant;
use crate::timeline::Timeline;

pub const SCHEMA_VERSION: &str = "1";

/// A recovered record flattened to named string fields.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordEntry {
    pub app: String,
    pub locator: SourceLocator,
    pub kind: RecordKind,
    pub fields: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub schema_version: String,
    pub scan_id: String,
    pub tool_version: String,
    pub evidence_origin: String,
    pub generated_at: UtcInstant,
    pub redacted: bool,
    pub rule_table_version: u32,
    pub file_digests: Vec<FileDigest>,
    pub app_roots: Vec<AppDataRoot>,
    pub database_statuses: Vec<DatabaseStatus>,
    pub matrix: Vec<PhiMatrixRow>,
    pub violations: BTreeMap<String, Vec<SecurityViolation>>,
    pub findings: Vec<PhiFinding>,
    pub records: Vec<RecordEntry>,
    pub skipped_rows: Vec<SkippedRow>,
    pub warnings: Vec<String>,
}

impl ComplianceReport {
    pub fn empty(generated_at: UtcInstant) -> Self {
        ComplianceReport {
            schema_version: SCHEMA_VERSION.to_owned(),
            scan_id: String::new(),
            tool_version: String::new(),
            evidence_origin: String::new(),
            generated_at,
            redacted: true,
            rule_table_version: 1,
            file_digests: Vec::new(),
            app_roots: Vec::new(),
            database_statuses: Vec::new(),
            matrix: Vec::new(),
            violations: BTreeMap::new(),
            findings: Vec::new(),
            records: Vec::new(),
            skipped_rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn row(&self, app: &str) -> Option<&PhiMatrixRow> {
        self.matrix.iter().find(|r| r.app_name == app)
    }

    /// True when any app has a finding of severity `violation`.
    pub fn has_violations(&self) -> bool {
        self.violations.values().flatten().any(|v| v.severity == Severity::Violation)
    }
}

/// Pretty JSON, struct fields in declaration order, maps sorted, shortest
/// round-trip decimals, LF line endings with a trailing newline.
pub fn render_json(report: &ComplianceReport) -> Vec<u8> {
    to_canonical_json(report)
}

pub fn parse_report(bytes: &[u8]) -> Result<ComplianceReport, String> {
    serde_json::from_slice(bytes).map_err(|e| format!("{e}"))
}

pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

const RECOVERED: &str = "✓";
const NOT_RECOVERED: &str = "X";

pub fn render_text(report: &ComplianceReport) -> String {
    let mut out = String::new();
    let origin = if report.evidence_origin.is_empty() { "-" } else { &report.evidence_origin };
    out.push_str(&format!("Evidence:  {origin}\n"));
    out.push_str(&format!("Scan:      {}\n", report.scan_id));
    out.push_str(&format!("Generated: {}\n", report.generated_at));
    out.push_str(&format!("Tool:      {}\n", report.tool_version));
    out.push('\n');

    out.push_str("PHI recovered per application\n");
    let label_width = PhiCategory::ALL.iter().map(|c| c.label().len()).max().unwrap_or(0);
    let widths: Vec<usize> = report.matrix.iter().map(|r| r.app_name.chars().count().max(3)).collect();
    out.push_str(&pad("Category", label_width));
    for (row, w) in report.matrix.iter().zip(&widths) {
        out.push_str(" | ");
        out.push_str(&pad(&row.app_name, *w));
    }
    out.push('\n');
    for category in PhiCategory::ALL {
        out.push_str(&pad(category.label(), label_width));
        for (row, w) in report.matrix.iter().zip(&widths) {
            let mark = match row.cell(category) {
                CellState::Recovered => RECOVERED,
                CellState::NotRecovered => NOT_RECOVERED,
            };
            out.push_str(" | ");
            out.push_str(&center(mark, *w));
        }
        out.push('\n');
    }
    out.push_str(&format!("Key: {RECOVERED} recovered, {NOT_RECOVERED} not recovered\n\n"));

    out.push_str("Security findings\n");
    if report.violations.values().all(Vec::is_empty) {
        out.push_str("  none\n");
    }
    for (app, list) in &report.violations {
        if list.is_empty() {
            continue;
        }
        out.push_str(&format!("  {app}\n"));
        for v in list {
            let severity = match v.severity {
                Severity::Violation => "violation",
                Severity::Informational => "note",
            };
            out.push_str(&format!("    [{severity}] {}: {}\n", v.kind.as_str(), v.description));
            if let Some(account) = &v.account {
                out.push_str(&format!("      account:  {account}\n"));
            }
            if let Some(excerpt) = &v.excerpt {
                out.push_str(&format!("      password: {excerpt}\n"));
            }
            for l in &v.evidence {
                out.push_str(&format!("      at {l}\n"));
            }
        }
    }
    out.push('\n');

    if !report.database_statuses.is_empty() {
        out.push_str("Databases\n");
        for s in &report.database_statuses {
            out.push_str(&format!(
                "  {:<20} entropy {:.3} bits/byte  {}\n",
                s.status.as_str(),
                s.entropy_bits_per_byte,
                s.relative_path
            ));
        }
        out.push('\n');
    }

    out.push_str(&format!(
        "Records: {}  findings: {}  skipped rows: {}\n\n",
        report.records.len(),
        report.findings.len(),
        report.skipped_rows.len()
    ));

    out.push_str("File digests (sha-256)\n");
    if report.file_digests.is_empty() {
        out.push_str("  none\n");
    }
    for d in &report.file_digests {
        out.push_str(&format!("  {}  {:>10}  {}\n", d.hex_digest, d.byte_length, d.relative_path));
    }

    if !report.warnings.is_empty() {
        out.push_str("\nWarnings\n");
        for w in &report.warnings {
            out.push_str(&format!("  {w}\n"));
        }
    }
    out
}

/// The timeline as a JSON array of events.
pub fn render_timeline_json(timeline: &Timeline) -> Vec<u8> {
    to_canonical_json(&timeline.events)
}

pub fn render_timeline_text(timeline: &Timeline) -> String {
    let mut out = String::new();
    let kind_width = timeline.events.iter().map(|e| e.kind.as_str().len()).max().unwrap_or(0);
    let app_width = timeline.events.iter().map(|e| e.app.chars().count()).max().unwrap_or(0);
    for e in &timeline.events {
        out.push_str(&format!(
            "{}  {}  {}  {}  [{}]\n",
            e.at.utc,
            pad(&e.app, app_width),
            pad(e.kind.as_str(), kind_width),
            e.summary,
            e.locator
        ));
    }
    out.push_str(&format!(
        "{} event(s); {} record(s) without a timestamp not shown\n",
        timeline.events.len(),
        timeline.excluded
    ));
    out
}

fn pad(text: &str, width: usize) -> String {
    let n = text.chars().count();
    let mut s = text.to_owned();
    s.push_str(&" ".repeat(width.saturating_sub(n)));
    s
}

fn center(text: &str, width: usize) -> String {
    let n = text.chars().count();
    let left = width.saturating_sub(n) / 2;
    let right = width.saturating_sub(n) - left;
    format!("{}{}{}", " ".repeat(left), text, " ".repeat(right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::evaluate_privacy_rule;

    #[test]
    fn empty_report_round_trips() {
        let r = ComplianceReport::empty(UtcInstant::EPOCH);
        let json = render_json(&r);
        assert!(json.ends_with(b"}\n"));
        let back = parse_report(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(render_json(&back), json);
        assert!(core::str::from_utf8(&json).unwrap().contains("\"matrix\": []"));
    }

    #[test]
    fn text_matrix() {
        let mut r = ComplianceReport::empty(UtcInstant::EPOCH);
        r.matrix.push(evaluate_privacy_rule("App", &[]));
        let text = render_text(&r);
        assert!(text.contains("Key: ✓ recovered, X not recovered"));
        assert_eq!(text.lines().filter(|l| l.ends_with(" X ")).count(), 7);
    }
}
