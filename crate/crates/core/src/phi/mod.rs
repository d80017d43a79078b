//! PHI classification of recovered records, the per-app category matrix and
//! the at-rest safeguard checks.

pub mod patterns;
pub mod rules;

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ArtifactRecord, ContainerKind, Payload, SourceLocator};
use crate::parsers::glucosmart::{DatabaseStatus, StorageStatus};

pub use patterns::scan_raw;
pub use rules::{Predicate, PhiRule, RuleTable};

/// The seven categories, in matrix row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiCategory {
    HealthCondition,
    ProvisionOfHealthcare,
    Payment,
    Name,
    Address,
    Ssn,
    DateOfBirth,
}

impl PhiCategory {
    pub const ALL: [PhiCategory; 7] = [
        PhiCategory::HealthCondition,
        PhiCategory::ProvisionOfHealthcare,
        PhiCategory::Payment,
        PhiCategory::Name,
        PhiCategory::Address,
        PhiCategory::Ssn,
        PhiCategory::DateOfBirth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhiCategory::HealthCondition => "health-condition",
            PhiCategory::ProvisionOfHealthcare => "provision-of-healthcare",
            PhiCategory::Payment => "payment",
            PhiCategory::Name => "name",
            PhiCategory::Address => "address",
            PhiCategory::Ssn => "ssn",
            PhiCategory::DateOfBirth => "date-of-birth",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhiCategory::HealthCondition => "Health condition",
            PhiCategory::ProvisionOfHealthcare => "Provision of healthcare",
            PhiCategory::Payment => "Payment for healthcare",
            PhiCategory::Name => "Name",
            PhiCategory::Address => "Address",
            PhiCategory::Ssn => "Social Security number",
            PhiCategory::DateOfBirth => "Date of birth",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }
}

impl fmt::Display for PhiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhiFinding {
    pub app: String,
    pub locator: SourceLocator,
    pub category: PhiCategory,
    pub rule_id: String,
    pub value_excerpt: String,
}

/// Applies every rule of `rules` to one record.
pub fn classify_with(rules: &RuleTable, app: &str, record: &ArtifactRecord) -> Vec<PhiFinding> {
    rules
        .rules
        .iter()
        .filter_map(|rule| {
            rule.predicate.apply(&record.payload).map(|excerpt| PhiFinding {
                app: app.to_owned(),
                locator: record.locator.clone(),
                category: rule.category,
                rule_id: rule.rule_id.clone(),
                value_excerpt: excerpt,
            })
        })
        .collect()
}

/// [`classify_with`] under the built-in rule table.
pub fn classify_record(app: &str, record: &ArtifactRecord) -> Vec<PhiFinding> {
    classify_with(&RuleTable::default(), app, record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellState {
    Recovered,
    NotRecovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiMatrixRow {
    pub app_name: String,
    pub cells: BTreeMap<PhiCategory, CellState>,
}

impl PhiMatrixRow {
    pub fn cell(&self, category: PhiCategory) -> CellState {
        self.cells.get(&category).copied().unwrap_or(CellState::NotRecovered)
    }

    pub fn recovered(&self, category: PhiCategory) -> bool {
        self.cell(category) == CellState::Recovered
    }
}

/// A category is recovered iff at least one finding for `app` carries it.
pub fn evaluate_privacy_rule(app: &str, findings: &[PhiFinding]) -> PhiMatrixRow {
    let present: BTreeSet<PhiCategory> = findings.iter().filter(|f| f.app == app).map(|f| f.category).collect();
    PhiMatrixRow {
        app_name: app.to_owned(),
        cells: PhiCategory::ALL
            .into_iter()
            .map(|c| (c, if present.contains(&c) { CellState::Recovered } else { CellState::NotRecovered }))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    PlaintextEphiAtRest,
    PlaintextCredential,
    WeakSafeguardNote,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::PlaintextEphiAtRest => "plaintext-ephi-at-rest",
            ViolationKind::PlaintextCredential => "plaintext-credential",
            ViolationKind::WeakSafeguardNote => "weak-safeguard-note",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Violation,
    Informational,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SecurityViolation {
    pub kind: ViolationKind,
    pub severity: Severity,
    pub evidence: Vec<SourceLocator>,
    pub description: String,
    /// Credential violations only.
    pub account: Option<String>,
    /// The exposed secret (credential violations only); redactable.
    pub excerpt: Option<String>,
}

/// Security-Rule outcomes for one application.
///
/// `findings` are the app's PHI findings (from [`classify_with`]). Health
/// findings count as stored in plaintext when they come from an XML file or
/// from a SQLite table whose file is not classified encrypted-or-opaque.
pub fn evaluate_security_rule(
    app: &str,
    records: &[ArtifactRecord],
    findings: &[PhiFinding],
    db_statuses: &[DatabaseStatus],
) -> Vec<SecurityViolation> {
    let opaque: BTreeSet<&str> = db_statuses
        .iter()
        .filter(|s| s.status != StorageStatus::PlaintextSqlite)
        .map(|s| s.relative_path.as_str())
        .collect();
    let findings: Vec<&PhiFinding> = findings.iter().filter(|f| f.app == app).collect();
    let mut out = Vec::new();

    let health: Vec<&PhiFinding> = findings
        .iter()
        .copied()
        .filter(|f| f.category == PhiCategory::HealthCondition)
        .filter(|f| match f.locator.container {
            ContainerKind::XmlFile => true,
            ContainerKind::SqliteTable => !opaque.contains(f.locator.relative_path.as_str()),
            ContainerKind::RawBytes => false,
        })
        .collect();
    if !health.is_empty() {
        // one locator per (file, table)
        let mut seen = BTreeMap::new();
        for f in &health {
            let table = f.locator.detail.split(':').next().unwrap_or("");
            seen.entry((f.locator.relative_path.as_str(), table)).or_insert_with(|| f.locator.clone());
        }
        out.push(SecurityViolation {
            kind: ViolationKind::PlaintextEphiAtRest,
            severity: Severity::Violation,
            description: format!(
                "{} health-condition value(s) readable without decryption in {} location(s)",
                health.len(),
                seen.len()
            ),
            evidence: seen.into_values().collect(),
            account: None,
            excerpt: None,
        });
    }

    for r in records {
        if let Payload::Credential(c) = &r.payload {
            if let Some(password) = &c.password_plaintext {
                out.push(SecurityViolation {
                    kind: ViolationKind::PlaintextCredential,
                    severity: Severity::Violation,
                    evidence: alloc::vec![r.locator.clone()],
                    description: "account password stored unencrypted".to_owned(),
                    account: Some(c.account.clone()),
                    excerpt: Some(password.clone()),
                });
            }
        }
    }

    if health.is_empty() && !findings.is_empty() {
        let evidence: BTreeSet<SourceLocator> = findings.iter().map(|f| f.locator.clone()).collect();
        let categories: BTreeSet<&str> = findings.iter().map(|f| f.category.as_str()).collect();
        out.push(SecurityViolation {
            kind: ViolationKind::WeakSafeguardNote,
            severity: Severity::Informational,
            description: format!(
                "health data is protected but identifying data is stored in plaintext ({})",
                categories.into_iter().collect::<Vec<_>>().join(", ")
            ),
            evidence: evidence.into_iter().collect(),
            account: None,
            excerpt: None,
        });
    }
    out.sort();
    out
}

/// Keeps the first and last two characters; anything of four characters or
/// fewer is masked entirely.
pub fn redact(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    if n <= 4 {
        return "*".repeat(n);
    }
    let mut out = String::new();
    out.extend(&chars[..2]);
    out.push_str(&"*".repeat(n - 4));
    out.extend(&chars[n - 2..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normalize_timestamp, CredentialSet};
    use crate::parsers::glucosmart::GlucoProfile;
    use crate::parsers::myvitals::{MyVitalsProfile, OximetryReading};
    use crate::time::{CalendarDate, UtcInstant};
    use alloc::vec;

    fn loc(path: &str, container: ContainerKind, detail: &str) -> SourceLocator {
        SourceLocator {
            package_name: "pkg".into(),
            relative_path: path.into(),
            container,
            detail: detail.into(),
        }
    }

    fn record(payload: Payload, locator: SourceLocator) -> ArtifactRecord {
        ArtifactRecord::new(payload, locator, UtcInstant::EPOCH)
    }

    fn oximetry() -> ArtifactRecord {
        let t = normalize_timestamp(1_530_829_549).unwrap();
        record(
            Payload::Oximetry(OximetryReading {
                result_spo2: 97,
                pulse_rate: 89,
                perfusion_index: 9.7f32 as f64,
                measured_at: t.clone(),
                last_change_at: normalize_timestamp(1_530_829_596).unwrap(),
                phone_created_at: t,
                health_id: "medicaldevices2018exper@gmail.com".into(),
                machine_type: "PO3M".into(),
                machine_device_id: "5CF821DED2ED".into(),
                used_user_id: 0,
                phone_data_id: "5CF821DED2ED15308295490".into(),
            }),
            loc("a.db", ContainerKind::SqliteTable, "TB_SPO2Result:1"),
        )
    }

    fn categories(findings: &[PhiFinding]) -> BTreeSet<PhiCategory> {
        findings.iter().map(|f| f.category).collect()
    }

    #[test]
    fn oximetry_is_health_and_provision() {
        let f = classify_record("A", &oximetry());
        assert_eq!(
            categories(&f),
            [PhiCategory::HealthCondition, PhiCategory::ProvisionOfHealthcare].into()
        );
    }

    #[test]
    fn profiles() {
        let mv = record(
            Payload::MyVitalsProfile(MyVitalsProfile {
                name: "Test Patient".into(),
                date_of_birth: CalendarDate::new(1980, 1, 2).unwrap(),
                timezone_location: "America/Chicago".into(),
                email: "medicaldevices2018exper@gmail.com".into(),
            }),
            loc("a.db", ContainerKind::SqliteTable, "TB_Userinfo:1"),
        );
        assert_eq!(
            categories(&classify_record("A", &mv)),
            [PhiCategory::Name, PhiCategory::Address, PhiCategory::DateOfBirth].into()
        );
        let g = record(
            Payload::GlucoProfile(GlucoProfile { username: "u@example.com".into(), device_identifier: "BG5".into() }),
            loc("u.xml", ContainerKind::XmlFile, "UserName"),
        );
        assert_eq!(categories(&classify_record("G", &g)), [PhiCategory::Name].into());
    }

    #[test]
    fn credentials_and_unknowns_yield_nothing() {
        let c = record(
            Payload::Credential(CredentialSet {
                account: "a@b.co".into(),
                password_plaintext: Some("pw".into()),
                refresh_token: None,
                access_token: None,
                region_host: None,
                is_online_flag: None,
            }),
            loc("c.xml", ContainerKind::XmlFile, "k"),
        );
        assert!(classify_record("A", &c).is_empty());
    }

    #[test]
    fn matrix_row_has_all_cells() {
        let f = classify_record("A", &oximetry());
        let row = evaluate_privacy_rule("A", &f);
        assert_eq!(row.cells.len(), 7);
        assert!(row.recovered(PhiCategory::HealthCondition));
        assert!(!row.recovered(PhiCategory::Payment));
        let empty = evaluate_privacy_rule("B", &f);
        assert!(PhiCategory::ALL.iter().all(|c| !empty.recovered(*c)));
    }

    #[test]
    fn opaque_database_findings_are_not_plaintext() {
        let rec = oximetry();
        let f = classify_record("A", &rec);
        let v = evaluate_security_rule("A", core::slice::from_ref(&rec), &f, &[]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::PlaintextEphiAtRest);

        let status = crate::parsers::glucosmart::classify_database("a.db", &[0x55; 64]);
        let v = evaluate_security_rule("A", core::slice::from_ref(&rec), &f, &[status]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::WeakSafeguardNote);
        assert_eq!(v[0].severity, Severity::Informational);
    }

    #[test]
    fn redaction() {
        assert_eq!(redact(""), "");
        assert_eq!(redact("abcd"), "****");
        assert_eq!(redact("MedExp2018"), "Me******18");
        assert_eq!(redact("äöüßé"), "äö*ßé");
    }

    #[test]
    fn category_order() {
        let mut v = vec![PhiCategory::DateOfBirth, PhiCategory::HealthCondition, PhiCategory::Name];
        v.sort();
        assert_eq!(v, [PhiCategory::HealthCondition, PhiCategory::Name, PhiCategory::DateOfBirth]);
    }
}
