//! Shared record model: provenance locators, epoch normalization and the
//! typed records every parser emits.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::parsers::glucosmart::GlucoProfile;
use crate::parsers::healthmate::{DeviceRegistration, HealthMateMeasurement, HealthMateUser, MeasurementKind};
use crate::parsers::myvitals::{
    BloodPressureReading, EnvironmentReading, MyVitalsProfile, OximetryReading, WeightReading,
};
use crate::time::{UtcInstant, MAX_UNIX_SECONDS};

/// What kind of container a locator points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContainerKind {
    SqliteTable,
    XmlFile,
    RawBytes,
}

/// Where a recovered value came from. `detail` is a table row (`TB_BPResult:3`),
/// an XML key, or a byte offset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocator {
    pub package_name: String,
    pub relative_path: String,
    pub container: ContainerKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocatorError {
    EmptyField(&'static str),
}

impl fmt::Display for LocatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocatorError::EmptyField(name) => write!(f, "locator field `{name}` is empty"),
        }
    }
}

pub fn make_locator(
    package: &str,
    path: &str,
    container: ContainerKind,
    detail: &str,
) -> Result<SourceLocator, LocatorError> {
    for (name, value) in [("package_name", package), ("relative_path", path), ("detail", detail)] {
        if value.is_empty() {
            return Err(LocatorError::EmptyField(name));
        }
    }
    Ok(SourceLocator {
        package_name: package.to_owned(),
        relative_path: path.to_owned(),
        container,
        detail: detail.to_owned(),
    })
}

impl fmt::Display for SourceLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.relative_path, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeUnit {
    Seconds,
    Milliseconds,
}

/// Inclusive lower bound of the millisecond band.
pub const MILLIS_THRESHOLD: i64 = 1_000_000_000_000;
/// Exclusive upper bound of the seconds band.
pub const SECONDS_THRESHOLD: i64 = 100_000_000_000;

/// A raw epoch value with its inferred unit and second-precision UTC rendering.
/// For millisecond values the sub-second part lives in `remainder_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochInstant {
    pub raw_value: i64,
    pub unit: TimeUnit,
    pub utc: String,
    pub remainder_ms: u16,
}

impl EpochInstant {
    pub fn unix_seconds(&self) -> i64 {
        match self.unit {
            TimeUnit::Seconds => self.raw_value,
            TimeUnit::Milliseconds => self.raw_value / 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampError {
    NonPositive(i64),
    AmbiguousUnit(i64),
    /// Past 9999-12-31T23:59:59Z.
    OutOfRange(i64),
}

impl fmt::Display for TimestampError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimestampError::NonPositive(v) => write!(f, "timestamp {v} is not positive"),
            TimestampError::AmbiguousUnit(v) => {
                write!(f, "timestamp {v} is neither plausibly seconds nor milliseconds")
            }
            TimestampError::OutOfRange(v) => write!(f, "timestamp {v} is beyond year 9999"),
        }
    }
}

/// Infers seconds vs milliseconds from magnitude and renders UTC.
pub fn normalize_timestamp(raw: i64) -> Result<EpochInstant, TimestampError> {
    if raw <= 0 {
        return Err(TimestampError::NonPositive(raw));
    }
    let (unit, secs, remainder_ms) = if raw >= MILLIS_THRESHOLD {
        (TimeUnit::Milliseconds, raw / 1000, (raw % 1000) as u16)
    } else if raw < SECONDS_THRESHOLD {
        (TimeUnit::Seconds, raw, 0)
    } else {
        return Err(TimestampError::AmbiguousUnit(raw));
    };
    if secs > MAX_UNIX_SECONDS {
        return Err(TimestampError::OutOfRange(raw));
    }
    let utc = UtcInstant::from_unix_seconds(secs)
        .ok_or(TimestampError::OutOfRange(raw))?
        .to_iso8601();
    Ok(EpochInstant { raw_value: raw, unit, utc, remainder_ms })
}

/// Syntactic email check: one `@`, a non-empty local part, and a dotted domain
/// of alphanumeric/hyphen labels.
pub fn is_email(text: &str) -> bool {
    let Some((local, domain)) = text.split_once('@') else {
        return false;
    };
    if local.is_empty() || domain.contains('@') {
        return false;
    }
    let local_ok = local
        .bytes()
        .all(|b| b.is_ascii_alphanumeric() || b"._%+-".contains(&b));
    let labels: Vec<&str> = domain.split('.').collect();
    local_ok
        && !local.starts_with('.')
        && !local.ends_with('.')
        && labels.len() >= 2
        && labels.iter().all(|l| {
            !l.is_empty()
                && !l.starts_with('-')
                && !l.ends_with('-')
                && l.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
        })
        && labels.last().is_some_and(|tld| tld.len() >= 2 && tld.bytes().all(|b| b.is_ascii_alphabetic()))
}

/// Account credentials recovered from a preferences file. A populated
/// `password_plaintext` always means the password sat unencrypted on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialSet {
    pub account: String,
    pub password_plaintext: Option<String>,
    pub refresh_token: Option<String>,
    pub access_token: Option<String>,
    pub region_host: Option<String>,
    pub is_online_flag: Option<bool>,
}

/// Pattern classes found by the raw byte sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitPattern {
    Email,
    MacAddress,
    DateLike,
    SecretKeyName,
    Ssn,
    PaymentCard,
    /// A Health Mate measure row whose type code has no mapping.
    UnmappedMeasureCode,
}

impl HitPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            HitPattern::Email => "email",
            HitPattern::MacAddress => "mac-address",
            HitPattern::DateLike => "date-like",
            HitPattern::SecretKeyName => "secret-key-name",
            HitPattern::Ssn => "ssn",
            HitPattern::PaymentCard => "payment-card",
            HitPattern::UnmappedMeasureCode => "unmapped-measure-code",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHit {
    pub pattern: HitPattern,
    pub text: String,
    /// Only set for [`HitPattern::UnmappedMeasureCode`].
    pub measure_code: Option<i64>,
    pub measured_at: Option<EpochInstant>,
}

/// Placeholder shape for glucose readings. No parser emits it today: the
/// Gluco-Smart databases are encrypted and only classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlucoseStatus {
    pub mg_per_dl: f64,
    pub measured_at: EpochInstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    BloodPressure,
    Oximetry,
    Weight,
    Environment,
    GlucoseStatus,
    UserProfile,
    Credential,
    DeviceRegistration,
    RawHit,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::BloodPressure => "blood-pressure",
            RecordKind::Oximetry => "oximetry",
            RecordKind::Weight => "weight",
            RecordKind::Environment => "environment",
            RecordKind::GlucoseStatus => "glucose-status",
            RecordKind::UserProfile => "user-profile",
            RecordKind::Credential => "credential",
            RecordKind::DeviceRegistration => "device-registration",
            RecordKind::RawHit => "raw-hit",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    BloodPressure(BloodPressureReading),
    Oximetry(OximetryReading),
    Weight(WeightReading),
    Environment(EnvironmentReading),
    Glucose(GlucoseStatus),
    MyVitalsProfile(MyVitalsProfile),
    GlucoProfile(GlucoProfile),
    HealthMateUser(HealthMateUser),
    Credential(CredentialSet),
    Device(DeviceRegistration),
    Measurement(HealthMateMeasurement),
    RawHit(RawHit),
}

impl Payload {
    /// The record kind is a function of the payload, so the two cannot disagree.
    pub fn kind(&self) -> RecordKind {
        match self {
            Payload::BloodPressure(_) => RecordKind::BloodPressure,
            Payload::Oximetry(_) => RecordKind::Oximetry,
            Payload::Weight(_) => RecordKind::Weight,
            Payload::Environment(_) => RecordKind::Environment,
            Payload::Glucose(_) => RecordKind::GlucoseStatus,
            Payload::MyVitalsProfile(_) | Payload::GlucoProfile(_) | Payload::HealthMateUser(_) => {
                RecordKind::UserProfile
            }
            Payload::Credential(_) => RecordKind::Credential,
            Payload::Device(_) => RecordKind::DeviceRegistration,
            Payload::Measurement(m) => match m.kind {
                MeasurementKind::Systolic | MeasurementKind::Diastolic | MeasurementKind::Pulse => {
                    RecordKind::BloodPressure
                }
                _ => RecordKind::Weight,
            },
            Payload::RawHit(_) => RecordKind::RawHit,
        }
    }

    /// The instant that places this record on a timeline, if any.
    pub fn timeline_instant(&self) -> Option<&EpochInstant> {
        match self {
            Payload::BloodPressure(r) => Some(&r.measured_at),
            Payload::Oximetry(r) => Some(&r.measured_at),
            Payload::Weight(r) => Some(&r.measured_at),
            Payload::Environment(r) => Some(&r.measured_at),
            Payload::Glucose(r) => Some(&r.measured_at),
            Payload::Device(r) => Some(&r.last_use_date),
            Payload::Measurement(r) => Some(&r.measured_at),
            Payload::RawHit(r) => r.measured_at.as_ref(),
            Payload::MyVitalsProfile(_)
            | Payload::GlucoProfile(_)
            | Payload::HealthMateUser(_)
            | Payload::Credential(_) => None,
        }
    }

    /// Flat, ordered field rendering used in reports and fixture manifests.
    /// Decimals use the shortest round-trip form; instants render as UTC plus
    /// a `_raw` companion carrying the stored integer.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = FieldList::default();
        match self {
            Payload::BloodPressure(r) => {
                out.int("systolic", r.systolic);
                out.int("diastolic", r.diastolic);
                out.int("pulse", r.pulse);
                out.instant("measured_at", &r.measured_at);
                out.text("device_id", &r.device_id);
                out.opt_text("note", r.note.as_deref());
                out.text("account", &r.account);
            }
            Payload::Oximetry(r) => {
                out.int("result_spo2", r.result_spo2);
                out.int("pulse_rate", r.pulse_rate);
                out.dec("perfusion_index", r.perfusion_index);
                out.instant("measured_at", &r.measured_at);
                out.instant("last_change_at", &r.last_change_at);
                out.instant("phone_created_at", &r.phone_created_at);
                out.text("health_id", &r.health_id);
                out.text("machine_type", &r.machine_type);
                out.text("machine_device_id", &r.machine_device_id);
                out.int("used_user_id", r.used_user_id);
                out.text("phone_data_id", &r.phone_data_id);
            }
            Payload::Weight(r) => {
                out.dec("weight", r.weight);
                out.dec("bmi", r.bmi);
                out.dec("body_fat_pct", r.body_fat_pct);
                out.dec("body_water_pct", r.body_water_pct);
                out.dec("muscle_mass", r.muscle_mass);
                out.dec("daily_calorie_intake", r.daily_calorie_intake);
                out.dec("bone_mass", r.bone_mass);
                out.instant("measured_at", &r.measured_at);
                out.text("account", &r.account);
            }
            Payload::Environment(r) => {
                out.dec("humidity", r.humidity);
                out.dec("temperature", r.temperature);
                out.dec("lighting_level", r.lighting_level);
                out.instant("measured_at", &r.measured_at);
            }
            Payload::Glucose(r) => {
                out.dec("mg_per_dl", r.mg_per_dl);
                out.instant("measured_at", &r.measured_at);
            }
            Payload::MyVitalsProfile(r) => {
                out.text("name", &r.name);
                out.text("date_of_birth", &r.date_of_birth.to_string());
                out.text("timezone_location", &r.timezone_location);
                out.text("email", &r.email);
            }
            Payload::GlucoProfile(r) => {
                out.text("username", &r.username);
                out.text("device_identifier", &r.device_identifier);
            }
            Payload::HealthMateUser(r) => {
                out.text("name", &r.name);
                out.text("gender", &r.gender);
                out.text("birthday", &r.birthday.to_string());
                out.text("email", &r.email);
            }
            Payload::Credential(r) => {
                out.text("account", &r.account);
                out.opt_text("password_plaintext", r.password_plaintext.as_deref());
                out.opt_text("refresh_token", r.refresh_token.as_deref());
                out.opt_text("access_token", r.access_token.as_deref());
                out.opt_text("region_host", r.region_host.as_deref());
                if let Some(flag) = r.is_online_flag {
                    out.text("is_online_flag", if flag { "true" } else { "false" });
                }
            }
            Payload::Device(r) => {
                out.int("id", r.id);
                out.instant("association_date", &r.association_date);
                out.instant("last_use_date", &r.last_use_date);
                out.instant("modified_date", &r.modified_date);
                out.text("mac_address", &r.mac_address);
                out.int("firmware", r.firmware);
                out.opt_text("timezone", r.timezone.as_deref());
                out.int("battery_pct", r.battery_pct);
                out.int("device_type", r.device_type);
                out.int("device_model", r.device_model);
            }
            Payload::Measurement(r) => {
                out.text("measurement", r.kind.as_str());
                out.dec("value", r.value);
                out.instant("measured_at", &r.measured_at);
                if let Some(d) = r.device_ref {
                    out.int("device_ref", d);
                }
            }
            Payload::RawHit(r) => {
                out.text("pattern", r.pattern.as_str());
                out.text("text", &r.text);
                if let Some(code) = r.measure_code {
                    out.int("measure_code", code);
                }
                if let Some(at) = &r.measured_at {
                    out.instant("measured_at", at);
                }
            }
        }
        out.0
    }

    /// One-line human summary used by timelines.
    pub fn summary(&self) -> String {
        match self {
            Payload::BloodPressure(r) => {
                format!("BP {}/{} mmHg, pulse {} bpm", r.systolic, r.diastolic, r.pulse)
            }
            Payload::Oximetry(r) => format!(
                "SpO2 {}%, PR {} bpm, PI {} ({})",
                r.result_spo2, r.pulse_rate, r.perfusion_index, r.machine_type
            ),
            Payload::Weight(r) => format!("weight {}, BMI {}", r.weight, r.bmi),
            Payload::Environment(r) => format!(
                "humidity {}%, temperature {}, lighting {}",
                r.humidity, r.temperature, r.lighting_level
            ),
            Payload::Glucose(r) => format!("glucose {} mg/dL", r.mg_per_dl),
            Payload::MyVitalsProfile(r) => format!("profile {}", r.email),
            Payload::GlucoProfile(r) => format!("profile {}", r.username),
            Payload::HealthMateUser(r) => format!("profile {}", r.email),
            Payload::Credential(r) => format!("credentials for {}", r.account),
            Payload::Device(r) => format!("device {} ({}) last used", r.id, r.mac_address),
            Payload::Measurement(r) => format!("{} {}", r.kind.as_str(), r.value),
            Payload::RawHit(r) => format!("{} hit {}", r.pattern.as_str(), r.text),
        }
    }
}

#[derive(Default)]
struct FieldList(Vec<(&'static str, String)>);

impl FieldList {
    fn int(&mut self, name: &'static str, v: i64) {
        self.0.push((name, v.to_string()));
    }
    fn dec(&mut self, name: &'static str, v: f64) {
        self.0.push((name, format_decimal(v)));
    }
    fn text(&mut self, name: &'static str, v: &str) {
        self.0.push((name, v.to_owned()));
    }
    fn opt_text(&mut self, name: &'static str, v: Option<&str>) {
        if let Some(v) = v {
            self.text(name, v);
        }
    }
    fn instant(&mut self, name: &'static str, v: &EpochInstant) {
        self.0.push((name, v.utc.clone()));
        let raw: &'static str = match name {
            "measured_at" => "measured_at_raw",
            "last_change_at" => "last_change_at_raw",
            "phone_created_at" => "phone_created_at_raw",
            "association_date" => "association_date_raw",
            "last_use_date" => "last_use_date_raw",
            "modified_date" => "modified_date_raw",
            _ => "instant_raw",
        };
        self.0.push((raw, v.raw_value.to_string()));
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_decimal(v: f64) -> String {
    format!("{v}")
}

/// A recovered, typed unit of evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactRecord {
    pub payload: Payload,
    pub locator: SourceLocator,
    pub recovered_at: UtcInstant,
}

impl ArtifactRecord {
    pub fn new(payload: Payload, locator: SourceLocator, recovered_at: UtcInstant) -> Self {
        ArtifactRecord { payload, locator, recovered_at }
    }

    pub fn kind(&self) -> RecordKind {
        self.payload.kind()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_oximetry_measure_time_is_seconds() {
        let t = normalize_timestamp(1_530_829_549).unwrap();
        assert_eq!(t.unit, TimeUnit::Seconds);
        assert_eq!(t.utc, "2018-07-05T22:25:49Z");
        assert_eq!(t.remainder_ms, 0);
    }

    #[test]
    fn device_last_use_is_milliseconds() {
        let t = normalize_timestamp(1_542_127_729_662).unwrap();
        assert_eq!(t.unit, TimeUnit::Milliseconds);
        assert_eq!(t.remainder_ms, 662);
        assert_eq!(t.unix_seconds(), 1_542_127_729);
    }

    #[test]
    fn non_positive_and_ambiguous() {
        assert_eq!(normalize_timestamp(0), Err(TimestampError::NonPositive(0)));
        assert_eq!(normalize_timestamp(-5), Err(TimestampError::NonPositive(-5)));
        assert_eq!(
            normalize_timestamp(SECONDS_THRESHOLD),
            Err(TimestampError::AmbiguousUnit(SECONDS_THRESHOLD))
        );
        assert_eq!(
            normalize_timestamp(MILLIS_THRESHOLD - 1),
            Err(TimestampError::AmbiguousUnit(MILLIS_THRESHOLD - 1))
        );
        assert!(normalize_timestamp(SECONDS_THRESHOLD - 1).is_ok());
        assert!(normalize_timestamp(MILLIS_THRESHOLD).is_ok());
        assert!(matches!(normalize_timestamp(i64::MAX), Err(TimestampError::OutOfRange(_))));
    }

    #[test]
    fn locators() {
        let l = make_locator(
            "iHealthMyVitals.V2",
            "iHealthMyVitals.V2/Databases/androidNin.db",
            ContainerKind::SqliteTable,
            "TB_SPO2Result:1",
        )
        .unwrap();
        assert_eq!(l.detail, "TB_SPO2Result:1");
        assert_eq!(
            make_locator("x", "y", ContainerKind::XmlFile, ""),
            Err(LocatorError::EmptyField("detail"))
        );
        let d = make_locator(
            "com.withings.wiscale2",
            "com.withings.wiscale2/databases/withings-wiscale.db",
            ContainerKind::SqliteTable,
            "devices:5595648",
        )
        .unwrap();
        assert_eq!(d.package_name, "com.withings.wiscale2");
    }

    #[test]
    fn email_syntax() {
        assert!(is_email("medicaldevices2018exper@gmail.com"));
        assert!(is_email("a.b+c@sub.example.org"));
        for bad in ["", "@x.com", "a@", "a@b", "a@@b.com", "a b@c.com", "a@b.c0m", "a@-b.com", ".a@b.com"] {
            assert!(!is_email(bad), "{bad}");
        }
    }

    #[test]
    fn decimals_are_shortest_round_trip() {
        assert_eq!(format_decimal(80.5), "80.5");
        assert_eq!(format_decimal(2200.0), "2200");
        assert_eq!(format_decimal(9.7f32 as f64), "9.699999809265137");
    }
}
