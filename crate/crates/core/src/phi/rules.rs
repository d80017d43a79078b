//! The published PHI rule table: which predicate, applied to which records,
//! yields which category. Shipped as text so every finding's `rule_id` can be
//! traced to a line an auditor can read.
//!
//! ```text
//! version 1
//! # rule_id        predicate                  category
//! HC-READING       physiological-reading      health-condition
//! ```

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::patterns::{contains_payment_card, contains_ssn};
use super::PhiCategory;
use crate::model::{EpochInstant, HitPattern, Payload};

pub const DEFAULT_RULES: &str = "\
version 1
# rule_id              predicate                   category
HC-READING             physiological-reading       health-condition
PH-DEVICE-REG          device-registration         provision-of-healthcare
PH-DEVICE-STAMP        device-stamped-reading      provision-of-healthcare
ID-NAME                profile-name                name
ID-DOB                 profile-birth-date          date-of-birth
ID-ADDRESS-PROXY-TZ    profile-timezone-location   address
ID-SSN-PATTERN         ssn-pattern                 ssn
PAY-CARD-PATTERN       payment-card-pattern        payment
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    /// Blood pressure, oximetry, weight, glucose and Health Mate measurements.
    PhysiologicalReading,
    DeviceRegistration,
    /// A reading tied to the device that took it, or to the moment it was taken.
    DeviceStampedReading,
    ProfileName,
    ProfileBirthDate,
    /// The profile's timezone location, a stand-in for a postal address.
    ProfileTimezoneLocation,
    SsnPattern,
    PaymentCardPattern,
}

impl Predicate {
    pub const ALL: [Predicate; 8] = [
        Predicate::PhysiologicalReading,
        Predicate::DeviceRegistration,
        Predicate::DeviceStampedReading,
        Predicate::ProfileName,
        Predicate::ProfileBirthDate,
        Predicate::ProfileTimezoneLocation,
        Predicate::SsnPattern,
        Predicate::PaymentCardPattern,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::PhysiologicalReading => "physiological-reading",
            Predicate::DeviceRegistration => "device-registration",
            Predicate::DeviceStampedReading => "device-stamped-reading",
            Predicate::ProfileName => "profile-name",
            Predicate::ProfileBirthDate => "profile-birth-date",
            Predicate::ProfileTimezoneLocation => "profile-timezone-location",
            Predicate::SsnPattern => "ssn-pattern",
            Predicate::PaymentCardPattern => "payment-card-pattern",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == name)
    }

    /// The excerpt this predicate extracts from a payload, if it applies. An
    /// empty field counts as absent.
    pub fn apply(self, payload: &Payload) -> Option<String> {
        self.excerpt(payload).filter(|e| !e.trim().is_empty())
    }

    fn excerpt(self, payload: &Payload) -> Option<String> {
        match (self, payload) {
            (Predicate::PhysiologicalReading, Payload::BloodPressure(r)) => {
                Some(format!("{}/{}", r.systolic, r.diastolic))
            }
            (Predicate::PhysiologicalReading, Payload::Oximetry(r)) => Some(format!("{}", r.result_spo2)),
            (Predicate::PhysiologicalReading, Payload::Weight(r)) => Some(format!("{}", r.weight)),
            (Predicate::PhysiologicalReading, Payload::Glucose(r)) => Some(format!("{}", r.mg_per_dl)),
            (Predicate::PhysiologicalReading, Payload::Measurement(r)) => Some(format!("{}", r.value)),

            (Predicate::DeviceRegistration, Payload::Device(r)) => Some(r.mac_address.clone()),

            (Predicate::DeviceStampedReading, Payload::BloodPressure(r)) => {
                Some(or_instant(&r.device_id, &r.measured_at))
            }
            (Predicate::DeviceStampedReading, Payload::Oximetry(r)) => {
                Some(or_instant(&r.machine_device_id, &r.measured_at))
            }
            (Predicate::DeviceStampedReading, Payload::Weight(r)) => Some(r.measured_at.utc.clone()),
            (Predicate::DeviceStampedReading, Payload::Environment(r)) => Some(r.measured_at.utc.clone()),
            (Predicate::DeviceStampedReading, Payload::Glucose(r)) => Some(r.measured_at.utc.clone()),
            (Predicate::DeviceStampedReading, Payload::Measurement(r)) => Some(match r.device_ref {
                Some(d) => format!("{d}"),
                None => r.measured_at.utc.clone(),
            }),

            (Predicate::ProfileName, Payload::MyVitalsProfile(r)) => Some(r.name.clone()),
            (Predicate::ProfileName, Payload::GlucoProfile(r)) => Some(r.username.clone()),
            (Predicate::ProfileName, Payload::HealthMateUser(r)) => Some(r.name.clone()),

            (Predicate::ProfileBirthDate, Payload::MyVitalsProfile(r)) => Some(format!("{}", r.date_of_birth)),
            (Predicate::ProfileBirthDate, Payload::HealthMateUser(r)) => Some(format!("{}", r.birthday)),

            (Predicate::ProfileTimezoneLocation, Payload::MyVitalsProfile(r)) => Some(r.timezone_location.clone()),

            (Predicate::SsnPattern, Payload::RawHit(h)) if h.pattern == HitPattern::Ssn => Some(h.text.clone()),
            (Predicate::PaymentCardPattern, Payload::RawHit(h)) if h.pattern == HitPattern::PaymentCard => {
                Some(h.text.clone())
            }
            (Predicate::SsnPattern, p) if !matches!(p, Payload::RawHit(_)) => {
                text_fields(p).find_map(|v| contains_ssn(&v).map(str::to_owned))
            }
            (Predicate::PaymentCardPattern, p) if !matches!(p, Payload::RawHit(_)) => {
                text_fields(p).find_map(|v| contains_payment_card(&v).map(str::to_owned))
            }
            _ => None,
        }
    }
}

fn or_instant(device: &str, at: &EpochInstant) -> String {
    if device.is_empty() { at.utc.clone() } else { device.to_owned() }
}

/// Free-text field values of a structured record; `_raw` epoch companions are
/// left out.
fn text_fields(payload: &Payload) -> impl Iterator<Item = String> {
    payload
        .fields()
        .into_iter()
        .filter(|(name, _)| !name.ends_with("_raw"))
        .map(|(_, v)| v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiRule {
    pub rule_id: String,
    pub predicate: Predicate,
    pub category: PhiCategory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    pub version: u32,
    pub rules: Vec<PhiRule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTableError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RuleTableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule table line {}: {}", self.line, self.message)
    }
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::parse(DEFAULT_RULES).expect("built-in rule table parses")
    }
}

impl RuleTable {
    /// Parses the text form. The first significant line must be `version N`;
    /// each further line is `rule_id predicate category`.
    pub fn parse(text: &str) -> Result<Self, RuleTableError> {
        let mut version = None;
        let mut rules: Vec<PhiRule> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| RuleTableError { line: n + 1, message };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if version.is_none() {
                match cols.as_slice() {
                    ["version", v] => {
                        version = Some(v.parse().map_err(|_| err(format!("bad version {v:?}")))?);
                        continue;
                    }
                    _ => return Err(err("expected `version N` first".to_owned())),
                }
            }
            let [rule_id, predicate, category] = cols.as_slice() else {
                return Err(err(format!("expected three columns, got {}", cols.len())));
            };
            let predicate =
                Predicate::from_name(predicate).ok_or_else(|| err(format!("unknown predicate {predicate:?}")))?;
            let category =
                PhiCategory::from_name(category).ok_or_else(|| err(format!("unknown category {category:?}")))?;
            if rules.iter().any(|r| r.rule_id == *rule_id) {
                return Err(err(format!("duplicate rule id {rule_id}")));
            }
            rules.push(PhiRule { rule_id: (*rule_id).to_owned(), predicate, category });
        }
        let version = version.ok_or(RuleTableError { line: 0, message: "empty rule table".to_owned() })?;
        Ok(RuleTable { version, rules })
    }

    pub fn rule(&self, rule_id: &str) -> Option<&PhiRule> {
        self.rules.iter().find(|r| r.rule_id == rule_id)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("version {}\n", self.version);
        for r in &self.rules {
            out.push_str(&format!("{:<22} {:<27} {}\n", r.rule_id, r.predicate.as_str(), r.category.as_str()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_round_trips() {
        let t = RuleTable::default();
        assert_eq!(t.version, 1);
        assert_eq!(t.rules.len(), 8);
        assert_eq!(RuleTable::parse(&t.to_text()).unwrap(), t);
        assert_eq!(t.rule("ID-ADDRESS-PROXY-TZ").unwrap().category, PhiCategory::Address);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(RuleTable::parse("X a b").unwrap_err().line, 1);
        assert_eq!(RuleTable::parse("version 1\n\nA profile-name nom").unwrap_err().line, 3);
        assert_eq!(RuleTable::parse("version 1\nA nope name").unwrap_err().line, 2);
        assert_eq!(RuleTable::parse("version 1\nA profile-name name\nA profile-name name").unwrap_err().line, 3);
        assert!(RuleTable::parse("# nothing").is_err());
    }
}
