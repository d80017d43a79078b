//! Withings/Nokia Health Mate: `devices`, `measure` and `users` in
//! `withings-wiscale.db`.
//!
//! `devices` columns are the app's own. `measure` is read as
//! `(type INTEGER, value REAL, date INTEGER, deviceid INTEGER)` and `users` as
//! `(name, gender, birthday, email)`; type codes go through a [`MeasureCodeMap`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::codemap::MeasureCodeMap;
use super::{check, find_file, parse_rows, AppParse, AppParser, ParseContext, ParseError, ParserOptions, SkippedRow, TableParse};
use crate::ingest::{AppDataRoot, Evidence};
use crate::model::{is_email, EpochInstant, HitPattern, Payload, RawHit};
use crate::sqlite::Database;
use crate::time::CalendarDate;

pub const PACKAGE: &str = "com.withings.wiscale2";
pub const DATABASE_FILE: &str = "withings-wiscale.db";

pub const TABLE_DEVICES: &str = "devices";
pub const TABLE_MEASURE: &str = "measure";
pub const TABLE_USERS: &str = "users";

pub const DEVICE_COLUMNS: [&str; 10] = [
    "id", "associationDate", "lastUseDate", "modifiedDate", "macAddress", "firmware", "timezone",
    "battery", "type", "model",
];
pub const MEASURE_COLUMNS: [&str; 4] = ["type", "value", "date", "deviceid"];
pub const USER_COLUMNS: [&str; 4] = ["name", "gender", "birthday", "email"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementKind {
    Weight,
    BodyFat,
    BodyWater,
    Pulse,
    BoneMass,
    MuscleMass,
    Bmi,
    Systolic,
    Diastolic,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 9] = [
        MeasurementKind::Weight,
        MeasurementKind::BodyFat,
        MeasurementKind::BodyWater,
        MeasurementKind::Pulse,
        MeasurementKind::BoneMass,
        MeasurementKind::MuscleMass,
        MeasurementKind::Bmi,
        MeasurementKind::Systolic,
        MeasurementKind::Diastolic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementKind::Weight => "weight",
            MeasurementKind::BodyFat => "body-fat",
            MeasurementKind::BodyWater => "body-water",
            MeasurementKind::Pulse => "pulse",
            MeasurementKind::BoneMass => "bone-mass",
            MeasurementKind::MuscleMass => "muscle-mass",
            MeasurementKind::Bmi => "bmi",
            MeasurementKind::Systolic => "systolic",
            MeasurementKind::Diastolic => "diastolic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRegistration {
    pub id: i64,
    pub association_date: EpochInstant,
    pub last_use_date: EpochInstant,
    pub modified_date: EpochInstant,
    pub mac_address: String,
    pub firmware: i64,
    pub timezone: Option<String>,
    pub battery_pct: i64,
    pub device_type: i64,
    pub device_model: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthMateMeasurement {
    pub kind: MeasurementKind,
    pub value: f64,
    pub measured_at: EpochInstant,
    pub device_ref: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthMateUser {
    pub name: String,
    pub gender: String,
    pub birthday: CalendarDate,
    pub email: String,
}

/// Lowercase `hh:hh:hh:hh:hh:hh`; uppercase hex is folded, anything else rejected.
pub fn normalize_mac(text: &str) -> Option<String> {
    let lower = text.trim().to_ascii_lowercase();
    let groups: Vec<&str> = lower.split(':').collect();
    (groups.len() == 6
        && groups.iter().all(|g| g.len() == 2 && g.bytes().all(|b| b.is_ascii_hexdigit())))
    .then_some(lower)
}

pub struct HealthMateParser;

impl AppParser for HealthMateParser {
    fn id(&self) -> &'static str {
        "withings-health-mate"
    }

    fn app_name(&self) -> &'static str {
        "Health Mate"
    }

    fn signature(&self) -> &'static str {
        "com.withings.wiscale2/**/withings-wiscale.db"
    }

    fn detect(&self, root: &AppDataRoot, evidence: &dyn Evidence) -> bool {
        root.package_name == PACKAGE && find_file(evidence, &root.relative_path, DATABASE_FILE).is_some()
    }

    fn parse(&self, root: &AppDataRoot, evidence: &dyn Evidence, options: &ParserOptions<'_>) -> AppParse {
        let mut out = AppParse::default();
        let Some(db_path) = find_file(evidence, &root.relative_path, DATABASE_FILE) else {
            return out;
        };
        let db_path = db_path.to_owned();
        let bytes = match evidence.read(&db_path) {
            Ok(b) => b,
            Err(e) => {
                out.warnings.push(format!("{e}"));
                return out;
            }
        };
        let ctx = ParseContext {
            package_name: &root.package_name,
            relative_path: &db_path,
            recovered_at: options.recovered_at,
        };
        match Database::open(&bytes) {
            Ok(db) => {
                out.claimed.insert(db_path.clone());
                out.absorb_result(&db_path, devices(&db, &ctx));
                out.absorb_result(&db_path, measures(&db, &ctx, options.code_map));
                out.absorb_result(&db_path, users(&db, &ctx));
            }
            Err(e) => out.warnings.push(format!("{db_path}: {}", ParseError::from(e))),
        }
        out
    }
}

pub fn parse_devices(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    devices(&Database::open(db)?, ctx)
}

pub fn parse_measures(db: &[u8], ctx: &ParseContext<'_>, map: &MeasureCodeMap) -> Result<TableParse, ParseError> {
    measures(&Database::open(db)?, ctx, map)
}

pub fn parse_users(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    users(&Database::open(db)?, ctx)
}

fn devices(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_DEVICES, &DEVICE_COLUMNS, |row| {
        let mac = row.text(4)?;
        let mac_address = normalize_mac(&mac).ok_or("macAddress is not colon-hex")?;
        let battery_pct = row.int(7)?;
        check((0..=100).contains(&battery_pct), "battery outside [0, 100]")?;
        Ok(Payload::Device(DeviceRegistration {
            id: row.int(0)?,
            association_date: row.instant(1)?,
            last_use_date: row.instant(2)?,
            modified_date: row.instant(3)?,
            mac_address,
            firmware: row.int(5)?,
            timezone: row.opt_text(6)?,
            battery_pct,
            device_type: row.int(8)?,
            device_model: row.int(9)?,
        }))
    })
}

fn measures(db: &Database<'_>, ctx: &ParseContext<'_>, map: &MeasureCodeMap) -> Result<TableParse, ParseError> {
    let mut parsed = parse_rows(db, ctx, TABLE_MEASURE, &MEASURE_COLUMNS, |row| {
        let code = row.int(0)?;
        let value = row.real(1)?;
        let measured_at = row.instant(2)?;
        let device_ref = row.int(3).ok();
        match map.kind(code) {
            Some(kind) => {
                check(value > 0.0, "value not positive")?;
                Ok(Payload::Measurement(HealthMateMeasurement { kind, value, measured_at, device_ref }))
            }
            None => Ok(Payload::RawHit(RawHit {
                pattern: HitPattern::UnmappedMeasureCode,
                text: format!("type {code} value {value}"),
                measure_code: Some(code),
                measured_at: Some(measured_at),
            })),
        }
    })?;
    enforce_pressure_pairs(&mut parsed);
    Ok(parsed)
}

/// A systolic value must exceed the diastolic value recorded at the same
/// instant. Violating pairs are moved to the skipped tally.
fn enforce_pressure_pairs(parsed: &mut TableParse) {
    let mut sessions: BTreeMap<i64, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, r) in parsed.records.iter().enumerate() {
        if let Payload::Measurement(m) = &r.payload {
            let slot = sessions.entry(m.measured_at.raw_value).or_default();
            match m.kind {
                MeasurementKind::Systolic => slot.0.push(i),
                MeasurementKind::Diastolic => slot.1.push(i),
                _ => {}
            }
        }
    }
    let value = |i: usize| match &parsed.records[i].payload {
        Payload::Measurement(m) => m.value,
        _ => 0.0,
    };
    let mut bad: Vec<usize> = Vec::new();
    for (sys, dia) in sessions.values() {
        if sys.is_empty() || dia.is_empty() {
            continue;
        }
        let min_sys = sys.iter().map(|&i| value(i)).fold(f64::INFINITY, f64::min);
        let max_dia = dia.iter().map(|&i| value(i)).fold(f64::NEG_INFINITY, f64::max);
        if min_sys <= max_dia {
            bad.extend(sys.iter().chain(dia.iter()));
        }
    }
    bad.sort_unstable();
    for i in bad.into_iter().rev() {
        let record = parsed.records.remove(i);
        parsed.skipped.push(SkippedRow {
            locator: record.locator,
            reason: "systolic not above diastolic at the same instant".to_owned(),
        });
    }
}

fn users(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_USERS, &USER_COLUMNS, |row| {
        let email = row.text(3)?;
        check(is_email(&email), "email is not an email address")?;
        let birthday = row.text(2)?;
        Ok(Payload::HealthMateUser(HealthMateUser {
            name: row.text(0)?,
            gender: row.opt_text(1)?.unwrap_or_default(),
            birthday: CalendarDate::parse(&birthday).ok_or("birthday is not YYYY-MM-DD")?,
            email,
        }))
    })
}
