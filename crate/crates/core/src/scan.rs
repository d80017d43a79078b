//! The full scan: digest, enumerate, parse, sweep, classify, evaluate, assemble.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ingest::{digest_bytes, enumerate_app_roots, sha256_hex, Evidence};
use crate::model::{ContainerKind, SourceLocator};
use crate::parsers::codemap::MeasureCodeMap;
use crate::parsers::glucosmart::{classify_databases, StorageStatus};
use crate::parsers::{AppParser, ParserOptions};
use crate::phi::{classify_with, evaluate_privacy_rule, evaluate_security_rule, redact, scan_raw, RuleTable};
use crate::report::{ComplianceReport, RecordEntry, SCHEMA_VERSION};
use crate::time::UtcInstant;
use crate::timeline::{build_timeline, AppRecord, Timeline};

/// Record fields that name a classification rather than hold a recovered
/// value; redaction leaves them readable.
pub const LABEL_FIELDS: [&str; 1] = ["pattern"];

pub struct ScanOptions<'a> {
    /// Stamped into the report and onto every record.
    pub generated_at: UtcInstant,
    pub redact: bool,
    pub code_map: &'a MeasureCodeMap,
    pub rules: &'a RuleTable,
    pub evidence_origin: String,
    pub tool_version: String,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub report: ComplianceReport,
    pub records: Vec<AppRecord>,
    pub timeline: Timeline,
}

pub fn scan_evidence(evidence: &dyn Evidence, parsers: &[&dyn AppParser], options: &ScanOptions<'_>) -> ScanOutcome {
    let mut report = ComplianceReport::empty(options.generated_at);
    report.schema_version = SCHEMA_VERSION.to_owned();
    report.tool_version = options.tool_version.clone();
    report.evidence_origin = options.evidence_origin.clone();
    report.redacted = options.redact;
    report.rule_table_version = options.rules.version;

    for path in evidence.listing() {
        match evidence.read(path) {
            Ok(bytes) => report.file_digests.push(digest_bytes(path, &bytes)),
            Err(e) => report.warnings.push(format!("{e}")),
        }
    }

    let roots = enumerate_app_roots(evidence, parsers);
    let parser_options = ParserOptions { recovered_at: options.generated_at, code_map: options.code_map };
    let mut records: Vec<AppRecord> = Vec::new();
    let mut apps: BTreeSet<String> = BTreeSet::new();
    let mut statuses_by_app = BTreeMap::new();

    for root in &roots {
        let Some(parser) = root
            .matched_parser
            .as_deref()
            .and_then(|id| parsers.iter().find(|p| p.id() == id))
        else {
            report.warnings.push(format!("{}: no parser recognizes this folder", root.package_name));
            continue;
        };
        let app = parser.app_name().to_owned();
        apps.insert(app.clone());

        let statuses = classify_databases(root, evidence);
        let parsed = parser.parse(root, evidence, &parser_options);
        report.warnings.extend(parsed.warnings);
        report.skipped_rows.extend(parsed.skipped);
        records.extend(parsed.records.into_iter().map(|record| AppRecord { app: app.clone(), record }));

        // unclaimed files are swept as raw bytes; opaque databases hold nothing readable
        let opaque: BTreeSet<&str> = statuses
            .iter()
            .filter(|s| s.status != StorageStatus::PlaintextSqlite)
            .map(|s| s.relative_path.as_str())
            .collect();
        for path in evidence.files_under(&root.relative_path) {
            if parsed.claimed.contains(path) || opaque.contains(path) {
                continue;
            }
            match evidence.read(path) {
                Ok(bytes) => {
                    let base = SourceLocator {
                        package_name: root.package_name.clone(),
                        relative_path: path.to_owned(),
                        container: ContainerKind::RawBytes,
                        detail: String::new(),
                    };
                    let hits = scan_raw(&bytes, &base, options.generated_at);
                    records.extend(hits.into_iter().map(|record| AppRecord { app: app.clone(), record }));
                }
                Err(e) => report.warnings.push(format!("{e}")),
            }
        }
        for leftover in &parsed.leftovers {
            let hits = scan_raw(leftover.text.as_bytes(), &leftover.locator, options.generated_at);
            records.extend(hits.into_iter().map(|record| AppRecord { app: app.clone(), record }));
        }

        statuses_by_app.entry(app).or_insert_with(Vec::new).extend(statuses);
    }

    records.sort_by(|a, b| {
        (&a.app, &a.record.locator, a.record.kind())
            .cmp(&(&b.app, &b.record.locator, b.record.kind()))
            .then_with(|| a.record.payload.fields().cmp(&b.record.payload.fields()))
    });

    let mut findings = Vec::new();
    for r in &records {
        findings.extend(classify_with(options.rules, &r.app, &r.record));
    }
    findings.sort();

    for app in &apps {
        report.matrix.push(evaluate_privacy_rule(app, &findings));
        let app_records: Vec<_> = records.iter().filter(|r| &r.app == app).map(|r| r.record.clone()).collect();
        let statuses = statuses_by_app.get(app).map(Vec::as_slice).unwrap_or(&[]);
        let violations = evaluate_security_rule(app, &app_records, &findings, statuses);
        report.violations.insert(app.clone(), violations);
    }

    report.database_statuses = statuses_by_app.into_values().flatten().collect();
    report.database_statuses.sort_by(|a, b| a.relative_path.cmp(&b.relative_path));
    report.app_roots = roots;
    report.skipped_rows.sort();
    report.records = records
        .iter()
        .map(|r| RecordEntry {
            app: r.app.clone(),
            locator: r.record.locator.clone(),
            kind: r.record.kind(),
            fields: r.record.payload.fields().into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
        })
        .collect();
    report.findings = findings;

    if options.redact {
        apply_redaction(&mut report);
    }
    report.scan_id = scan_id(&report);

    let timeline = build_timeline(&records, options.redact);
    ScanOutcome { report, records, timeline }
}

fn apply_redaction(report: &mut ComplianceReport) {
    for f in &mut report.findings {
        f.value_excerpt = redact(&f.value_excerpt);
    }
    for v in report.violations.values_mut().flatten() {
        v.account = v.account.as_deref().map(redact);
        v.excerpt = v.excerpt.as_deref().map(redact);
    }
    for r in &mut report.records {
        for (name, value) in r.fields.iter_mut() {
            if !LABEL_FIELDS.contains(&name.as_str()) {
                *value = redact(value);
            }
        }
    }
}

/// First 16 hex digits of a digest over the clock and every file digest.
fn scan_id(report: &ComplianceReport) -> String {
    let mut material = String::new();
    material.push_str(&report.generated_at.to_iso8601());
    for d in &report.file_digests {
        material.push('\n');
        material.push_str(&d.relative_path);
        material.push(' ');
        material.push_str(&d.hex_digest);
    }
    sha256_hex(material.as_bytes())[..16].to_owned()
}
