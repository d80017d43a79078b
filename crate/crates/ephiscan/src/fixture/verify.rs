//! Compares a scan report against the manifest of the tree it scanned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ephiscan_core::model::{RecordKind, SourceLocator};
use ephiscan_core::parsers::glucosmart::StorageStatus;
use ephiscan_core::phi::{redact, CellState, PhiCategory, ViolationKind};
use ephiscan_core::report::ComplianceReport;
use ephiscan_core::scan::LABEL_FIELDS;

use super::manifest::FixtureManifest;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    MissingRecord { locator: SourceLocator, kind: RecordKind },
    KindMismatch { locator: SourceLocator, expected: RecordKind, found: RecordKind },
    FieldValue { locator: SourceLocator, field: String, expected: Option<String>, found: Option<String> },
    MissingFinding { locator: SourceLocator, category: PhiCategory },
    UnexplainedFinding { locator: SourceLocator, category: PhiCategory, rule_id: String },
    UnexplainedRecord { locator: SourceLocator, kind: RecordKind },
    MissingSkippedRow { locator: SourceLocator },
    UnexplainedSkippedRow { locator: SourceLocator, reason: String },
    DatabaseStatus { relative_path: String, expected: Option<StorageStatus>, found: Option<StorageStatus> },
    EntropyFlag { relative_path: String, expected: bool },
    MatrixCell { app: String, category: PhiCategory, expected: CellState, found: Option<CellState> },
    UnexplainedApp { app: String },
    Violations { app: String, expected: Vec<ViolationKind>, found: Vec<ViolationKind> },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::MissingRecord { locator, kind } => write!(f, "missing {kind} record at {locator}"),
            Mismatch::KindMismatch { locator, expected, found } => {
                write!(f, "{locator}: expected a {expected} record, found {found}")
            }
            Mismatch::FieldValue { locator, field, expected, found } => {
                write!(f, "{locator}: field {field} expected {expected:?}, found {found:?}")
            }
            Mismatch::MissingFinding { locator, category } => write!(f, "{locator}: no {category} finding"),
            Mismatch::UnexplainedFinding { locator, category, rule_id } => {
                write!(f, "{locator}: unexpected {category} finding from {rule_id}")
            }
            Mismatch::UnexplainedRecord { locator, kind } => write!(f, "{locator}: unexpected {kind} record"),
            Mismatch::MissingSkippedRow { locator } => write!(f, "{locator}: invalid row was not skipped"),
            Mismatch::UnexplainedSkippedRow { locator, reason } => {
                write!(f, "{locator}: row unexpectedly skipped ({reason})")
            }
            Mismatch::DatabaseStatus { relative_path, expected, found } => {
                write!(f, "{relative_path}: status expected {expected:?}, found {found:?}")
            }
            Mismatch::EntropyFlag { relative_path, expected } => {
                write!(f, "{relative_path}: high-entropy flag expected {expected}")
            }
            Mismatch::MatrixCell { app, category, expected, found } => {
                write!(f, "{app}/{category}: expected {expected:?}, found {found:?}")
            }
            Mismatch::UnexplainedApp { app } => write!(f, "unexpected application {app} in matrix"),
            Mismatch::Violations { app, expected, found } => {
                write!(f, "{app}: violations expected {expected:?}, found {found:?}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verification {
    pub mismatches: Vec<Mismatch>,
    /// Recovered minus planted, per record kind; only non-zero entries.
    pub count_deltas: BTreeMap<RecordKind, i64>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn verify_scan_against_manifest(manifest: &FixtureManifest, report: &ComplianceReport) -> Verification {
    let mut out = Verification::default();
    let m = &mut out.mismatches;
    let shown = |name: &str, v: &str| {
        if report.redacted && !LABEL_FIELDS.contains(&name) { redact(v) } else { v.to_owned() }
    };

    let found: BTreeMap<&SourceLocator, _> = report.records.iter().map(|r| (&r.locator, r)).collect();
    let planted: BTreeMap<&SourceLocator, _> = manifest.records.iter().map(|r| (&r.locator, r)).collect();

    let mut found_categories: BTreeMap<&SourceLocator, BTreeMap<PhiCategory, &str>> = BTreeMap::new();
    for f in &report.findings {
        found_categories.entry(&f.locator).or_default().insert(f.category, &f.rule_id);
    }

    for (locator, want) in &planted {
        let Some(got) = found.get(locator) else {
            m.push(Mismatch::MissingRecord { locator: (*locator).clone(), kind: want.kind });
            continue;
        };
        if got.kind != want.kind {
            m.push(Mismatch::KindMismatch { locator: (*locator).clone(), expected: want.kind, found: got.kind });
        }
        let names: BTreeSet<&String> = want.fields.keys().chain(got.fields.keys()).collect();
        for name in names {
            let expected = want.fields.get(name).map(|v| shown(name, v));
            let actual = got.fields.get(name).cloned();
            if expected != actual {
                m.push(Mismatch::FieldValue {
                    locator: (*locator).clone(),
                    field: name.clone(),
                    expected,
                    found: actual,
                });
            }
        }
        let cats = found_categories.get(locator).cloned().unwrap_or_default();
        for c in &want.categories {
            if !cats.contains_key(c) {
                m.push(Mismatch::MissingFinding { locator: (*locator).clone(), category: *c });
            }
        }
        for (c, rule) in &cats {
            if !want.categories.contains(c) {
                m.push(Mismatch::UnexplainedFinding {
                    locator: (*locator).clone(),
                    category: *c,
                    rule_id: (*rule).to_owned(),
                });
            }
        }
    }
    for (locator, got) in &found {
        if !planted.contains_key(locator) {
            m.push(Mismatch::UnexplainedRecord { locator: (*locator).clone(), kind: got.kind });
        }
    }
    for (locator, cats) in &found_categories {
        if !found.contains_key(locator) {
            for (c, rule) in cats {
                m.push(Mismatch::UnexplainedFinding {
                    locator: (*locator).clone(),
                    category: *c,
                    rule_id: (*rule).to_owned(),
                });
            }
        }
    }

    let skipped: BTreeMap<&SourceLocator, &str> =
        report.skipped_rows.iter().map(|s| (&s.locator, s.reason.as_str())).collect();
    for l in &manifest.skipped {
        if !skipped.contains_key(l) {
            m.push(Mismatch::MissingSkippedRow { locator: l.clone() });
        }
    }
    for (l, reason) in &skipped {
        if !manifest.skipped.contains(l) {
            m.push(Mismatch::UnexplainedSkippedRow { locator: (*l).clone(), reason: (*reason).to_owned() });
        }
    }

    let statuses: BTreeMap<&str, _> =
        report.database_statuses.iter().map(|s| (s.relative_path.as_str(), s)).collect();
    for want in &manifest.database_statuses {
        match statuses.get(want.relative_path.as_str()) {
            Some(got) if got.status == want.status => {
                if want.high_entropy && !got.high_entropy {
                    m.push(Mismatch::EntropyFlag { relative_path: want.relative_path.clone(), expected: true });
                }
            }
            other => m.push(Mismatch::DatabaseStatus {
                relative_path: want.relative_path.clone(),
                expected: Some(want.status),
                found: other.map(|s| s.status),
            }),
        }
    }
    for s in &report.database_statuses {
        if !manifest.database_statuses.iter().any(|w| w.relative_path == s.relative_path) {
            m.push(Mismatch::DatabaseStatus {
                relative_path: s.relative_path.clone(),
                expected: None,
                found: Some(s.status),
            });
        }
    }

    for app in &manifest.apps {
        let row = report.row(&app.app_name);
        for c in PhiCategory::ALL {
            let expected = if app.categories.contains(&c) { CellState::Recovered } else { CellState::NotRecovered };
            let got = row.map(|r| r.cell(c));
            if got != Some(expected) {
                m.push(Mismatch::MatrixCell { app: app.app_name.clone(), category: c, expected, found: got });
            }
        }
        let mut found_kinds: Vec<ViolationKind> = report
            .violations
            .get(&app.app_name)
            .map(|v| v.iter().map(|v| v.kind).collect())
            .unwrap_or_default();
        found_kinds.sort();
        if found_kinds != app.violations {
            m.push(Mismatch::Violations {
                app: app.app_name.clone(),
                expected: app.violations.clone(),
                found: found_kinds,
            });
        }
    }
    for row in &report.matrix {
        if manifest.app(&row.app_name).is_none() {
            m.push(Mismatch::UnexplainedApp { app: row.app_name.clone() });
        }
    }

    let mut deltas: BTreeMap<RecordKind, i64> = BTreeMap::new();
    for r in &report.records {
        *deltas.entry(r.kind).or_default() += 1;
    }
    for r in &manifest.records {
        *deltas.entry(r.kind).or_default() -= 1;
    }
    deltas.retain(|_, d| *d != 0);
    out.count_deltas = deltas;
    out
}
