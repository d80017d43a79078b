//! iHealth MyVitals: `Databases/androidNin.db` and the region-host preferences file.
//!
//! Column names for `TB_SPO2Result` follow the app's own schema. The other four
//! tables are bound to this layout:
//!
//! | table | columns |
//! |---|---|
//! | `TB_BPResult` | `Sys, Dia, Pulse, MeasureTime, DeviceID, Note, Account` |
//! | `TB_WeightOnlineResult` | `Weight, BMI, BodyFat, BodyWater, MuscleMass, DailyCalorie, BoneMass, MeasureTime, Account` |
//! | `TB_TemperatureHumidity` | `Humidity, Temperature, Lighting, MeasureTime` |
//! | `TB_Userinfo` | `Name, Birthday, TimeZone, Email` |
//!
//! A device whose schema drifts from this surfaces as `MissingTable` /
//! `MissingColumn`, or as skipped rows.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{
    check, find_file, parse_rows, AppParse, AppParser, Leftover, ParseContext, ParseError,
    ParserOptions, TableParse,
};
use crate::ingest::{AppDataRoot, Evidence};
use crate::model::{is_email, ContainerKind, CredentialSet, EpochInstant, Payload};
use crate::prefs::{parse_shared_prefs, PrefValue};
use crate::sqlite::Database;
use crate::time::CalendarDate;

pub const PACKAGE: &str = "iHealthMyVitals.V2";
pub const DATABASE_PATH: &str = "Databases/androidNin.db";
pub const CREDENTIAL_XML: &str = "sp_user_region_host_info.xml";

pub const TABLE_BP: &str = "TB_BPResult";
pub const TABLE_SPO2: &str = "TB_SPO2Result";
pub const TABLE_WEIGHT: &str = "TB_WeightOnlineResult";
pub const TABLE_ENVIRONMENT: &str = "TB_TemperatureHumidity";
pub const TABLE_USER: &str = "TB_Userinfo";

pub const BP_COLUMNS: [&str; 7] = ["Sys", "Dia", "Pulse", "MeasureTime", "DeviceID", "Note", "Account"];
pub const SPO2_COLUMNS: [&str; 11] = [
    "UsedUserID", "PhoneDataID", "iHealthID", "MachineType", "MachineDeviceID", "MeasureTime",
    "LastChangeTime", "PhoneCreateTime", "Result", "PR", "PI",
];
pub const WEIGHT_COLUMNS: [&str; 9] = [
    "Weight", "BMI", "BodyFat", "BodyWater", "MuscleMass", "DailyCalorie", "BoneMass", "MeasureTime",
    "Account",
];
pub const ENVIRONMENT_COLUMNS: [&str; 4] = ["Humidity", "Temperature", "Lighting", "MeasureTime"];
pub const USER_COLUMNS: [&str; 4] = ["Name", "Birthday", "TimeZone", "Email"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BloodPressureReading {
    pub systolic: i64,
    pub diastolic: i64,
    pub pulse: i64,
    pub measured_at: EpochInstant,
    pub device_id: String,
    pub note: Option<String>,
    pub account: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OximetryReading {
    pub result_spo2: i64,
    pub pulse_rate: i64,
    pub perfusion_index: f64,
    pub measured_at: EpochInstant,
    pub last_change_at: EpochInstant,
    pub phone_created_at: EpochInstant,
    pub health_id: String,
    pub machine_type: String,
    pub machine_device_id: String,
    pub used_user_id: i64,
    pub phone_data_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReading {
    pub weight: f64,
    pub bmi: f64,
    pub body_fat_pct: f64,
    pub body_water_pct: f64,
    pub muscle_mass: f64,
    pub daily_calorie_intake: f64,
    pub bone_mass: f64,
    pub measured_at: EpochInstant,
    pub account: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentReading {
    pub humidity: f64,
    pub temperature: f64,
    pub lighting_level: f64,
    pub measured_at: EpochInstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyVitalsProfile {
    pub name: String,
    pub date_of_birth: CalendarDate,
    pub timezone_location: String,
    pub email: String,
}

pub struct MyVitalsParser;

impl AppParser for MyVitalsParser {
    fn id(&self) -> &'static str {
        "ihealth-myvitals"
    }

    fn app_name(&self) -> &'static str {
        "iHealth MyVitals"
    }

    fn signature(&self) -> &'static str {
        "iHealthMyVitals.V2/Databases/androidNin.db"
    }

    fn detect(&self, root: &AppDataRoot, evidence: &dyn Evidence) -> bool {
        root.package_name == PACKAGE
            && evidence.contains(&format!("{}/{DATABASE_PATH}", root.relative_path))
    }

    fn parse(&self, root: &AppDataRoot, evidence: &dyn Evidence, options: &ParserOptions<'_>) -> AppParse {
        let mut out = AppParse::default();
        let db_path = format!("{}/{DATABASE_PATH}", root.relative_path);
        match evidence.read(&db_path) {
            Ok(bytes) => {
                let ctx = ParseContext {
                    package_name: &root.package_name,
                    relative_path: &db_path,
                    recovered_at: options.recovered_at,
                };
                match Database::open(&bytes) {
                    Ok(db) => {
                        out.claimed.insert(db_path.clone());
                        out.absorb_result(&db_path, bp_results(&db, &ctx));
                        out.absorb_result(&db_path, spo2_results(&db, &ctx));
                        out.absorb_result(&db_path, weight_results(&db, &ctx));
                        out.absorb_result(&db_path, environment(&db, &ctx));
                        out.absorb_result(&db_path, user_info(&db, &ctx));
                    }
                    Err(e) => out.warnings.push(format!("{db_path}: {}", ParseError::from(e))),
                }
            }
            Err(e) => out.warnings.push(format!("{e}")),
        }

        if let Some(xml_path) = find_file(evidence, &root.relative_path, CREDENTIAL_XML) {
            let xml_path = xml_path.to_owned();
            let ctx = ParseContext {
                package_name: &root.package_name,
                relative_path: &xml_path,
                recovered_at: options.recovered_at,
            };
            match evidence.read(&xml_path) {
                Ok(bytes) => match parse_region_host_xml(&bytes, &ctx) {
                    Ok(extraction) => {
                        out.claimed.insert(xml_path.clone());
                        if extraction.inconsistent_prefix {
                            out.warnings.push(format!(
                                "{xml_path}: {}",
                                CredentialError::InconsistentPrefix
                            ));
                        }
                        out.records.extend(extraction.records);
                        out.leftovers.extend(extraction.leftovers);
                    }
                    Err(e) => out.warnings.push(format!("{xml_path}: {e}")),
                },
                Err(e) => out.warnings.push(format!("{e}")),
            }
        }
        out
    }
}

pub fn parse_bp_results(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    bp_results(&Database::open(db)?, ctx)
}

pub fn parse_spo2_results(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    spo2_results(&Database::open(db)?, ctx)
}

pub fn parse_weight_results(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    weight_results(&Database::open(db)?, ctx)
}

pub fn parse_environment(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    environment(&Database::open(db)?, ctx)
}

pub fn parse_user_info(db: &[u8], ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    user_info(&Database::open(db)?, ctx)
}

fn bp_results(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_BP, &BP_COLUMNS, |row| {
        let systolic = row.int(0)?;
        let diastolic = row.int(1)?;
        let pulse = row.int(2)?;
        check(diastolic > 0 && systolic > diastolic, "systolic/diastolic out of order")?;
        check(pulse > 0, "pulse not positive")?;
        Ok(Payload::BloodPressure(BloodPressureReading {
            systolic,
            diastolic,
            pulse,
            measured_at: row.instant(3)?,
            device_id: row.opt_text(4)?.unwrap_or_default(),
            note: row.opt_text(5)?,
            account: row.opt_text(6)?.unwrap_or_default(),
        }))
    })
}

fn spo2_results(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    let mut parsed = parse_rows(db, ctx, TABLE_SPO2, &SPO2_COLUMNS, |row| {
        let result_spo2 = row.int(8)?;
        let pulse_rate = row.int(9)?;
        let perfusion_index = row.real(10)?;
        check(result_spo2 > 0 && result_spo2 <= 100, "Result outside (0, 100]")?;
        check(pulse_rate > 0, "PR not positive")?;
        check(perfusion_index >= 0.0, "PI negative")?;
        Ok(Payload::Oximetry(OximetryReading {
            result_spo2,
            pulse_rate,
            perfusion_index,
            measured_at: row.instant(5)?,
            last_change_at: row.instant(6)?,
            phone_created_at: row.instant(7)?,
            health_id: row.opt_text(2)?.unwrap_or_default(),
            machine_type: row.opt_text(3)?.unwrap_or_default(),
            machine_device_id: row.opt_text(4)?.unwrap_or_default(),
            used_user_id: row.int(0).unwrap_or(0),
            phone_data_id: row.opt_text(1)?.unwrap_or_default(),
        }))
    })?;
    // stable: equal MeasureTime keeps rowid order
    parsed.records.sort_by_key(|r| match &r.payload {
        Payload::Oximetry(o) => o.measured_at.raw_value,
        _ => i64::MIN,
    });
    Ok(parsed)
}

fn weight_results(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_WEIGHT, &WEIGHT_COLUMNS, |row| {
        let weight = row.real(0)?;
        let body_fat_pct = row.real(2)?;
        let body_water_pct = row.real(3)?;
        check(weight > 0.0, "Weight not positive")?;
        check((0.0..=100.0).contains(&body_fat_pct), "BodyFat outside [0, 100]")?;
        check((0.0..=100.0).contains(&body_water_pct), "BodyWater outside [0, 100]")?;
        Ok(Payload::Weight(WeightReading {
            weight,
            bmi: row.real(1)?,
            body_fat_pct,
            body_water_pct,
            muscle_mass: row.real(4)?,
            daily_calorie_intake: row.real(5)?,
            bone_mass: row.real(6)?,
            measured_at: row.instant(7)?,
            account: row.opt_text(8)?.unwrap_or_default(),
        }))
    })
}

fn environment(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_ENVIRONMENT, &ENVIRONMENT_COLUMNS, |row| {
        let humidity = row.real(0)?;
        check((0.0..=100.0).contains(&humidity), "Humidity outside [0, 100]")?;
        Ok(Payload::Environment(EnvironmentReading {
            humidity,
            temperature: row.real(1)?,
            lighting_level: row.real(2)?,
            measured_at: row.instant(3)?,
        }))
    })
}

fn user_info(db: &Database<'_>, ctx: &ParseContext<'_>) -> Result<TableParse, ParseError> {
    parse_rows(db, ctx, TABLE_USER, &USER_COLUMNS, |row| {
        let birthday = row.text(1)?;
        let email = row.text(3)?;
        check(is_email(&email), "Email is not an email address")?;
        Ok(Payload::MyVitalsProfile(MyVitalsProfile {
            name: row.text(0)?,
            date_of_birth: CalendarDate::parse(&birthday).ok_or("Birthday is not YYYY-MM-DD")?,
            timezone_location: row.opt_text(2)?.unwrap_or_default(),
            email,
        }))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CredentialError {
    MalformedXml(String),
    NoCredentialKeys,
    /// Keys name more than one account; reported as a warning alongside the sets.
    InconsistentPrefix,
}

impl fmt::Display for CredentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CredentialError::MalformedXml(m) => write!(f, "malformed XML: {m}"),
            CredentialError::NoCredentialKeys => f.write_str("no recognized credential keys"),
            CredentialError::InconsistentPrefix => {
                f.write_str("credential keys carry more than one account prefix")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredentialExtraction {
    /// One credential record per account, ordered by account.
    pub records: Vec<crate::model::ArtifactRecord>,
    pub inconsistent_prefix: bool,
    pub leftovers: Vec<Leftover>,
}

const SUFFIX_PASSWORD: &str = "_user_password";
const SUFFIX_REFRESH: &str = "_user_refresh_token";
const SUFFIX_ACCESS: &str = "_user_access_token";
const SUFFIX_REGION: &str = "_user_region_host_info";
const SUFFIX_ONLINE: &str = "_user_is_online";

const CREDENTIAL_SUFFIXES: [&str; 5] =
    [SUFFIX_PASSWORD, SUFFIX_REFRESH, SUFFIX_ACCESS, SUFFIX_REGION, SUFFIX_ONLINE];

/// Splits `<email><suffix>` keys. The prefix must be an email address.
fn split_credential_key(key: &str) -> Option<(&str, &'static str)> {
    CREDENTIAL_SUFFIXES.iter().find_map(|suffix| {
        key.strip_suffix(suffix)
            .filter(|prefix| is_email(prefix))
            .map(|prefix| (prefix, *suffix))
    })
}

/// Recovers account credentials from the region-host preferences file.
pub fn parse_region_host_xml(
    xml: &[u8],
    ctx: &ParseContext<'_>,
) -> Result<CredentialExtraction, CredentialError> {
    let entries = parse_shared_prefs(xml).map_err(|e| CredentialError::MalformedXml(e.0))?;
    let mut sets: BTreeMap<String, (CredentialSet, String)> = BTreeMap::new();
    let mut leftovers = Vec::new();
    for entry in entries {
        let Some((account, suffix)) = split_credential_key(&entry.name) else {
            leftovers.push(Leftover {
                locator: ctx.locator(ContainerKind::XmlFile, entry.name.clone()),
                text: entry.value.render(),
            });
            continue;
        };
        let (set, anchor) = sets.entry(account.to_owned()).or_insert_with(|| {
            (
                CredentialSet {
                    account: account.to_owned(),
                    password_plaintext: None,
                    refresh_token: None,
                    access_token: None,
                    region_host: None,
                    is_online_flag: None,
                },
                entry.name.clone(),
            )
        });
        let text = || entry.value.as_str().map(|s| s.trim().to_owned());
        match suffix {
            SUFFIX_PASSWORD => {
                set.password_plaintext = text();
                *anchor = entry.name.clone();
            }
            SUFFIX_REFRESH => set.refresh_token = text(),
            SUFFIX_ACCESS => set.access_token = text(),
            SUFFIX_REGION => set.region_host = text(),
            _ => {
                set.is_online_flag = match &entry.value {
                    PrefValue::Boolean(b) => Some(*b),
                    PrefValue::String(s) => s.trim().parse().ok(),
                    _ => None,
                }
            }
        }
    }
    if sets.is_empty() {
        return Err(CredentialError::NoCredentialKeys);
    }
    let inconsistent_prefix = sets.len() > 1;
    let records = sets
        .into_values()
        .map(|(set, anchor)| ctx.record(Payload::Credential(set), ctx.locator(ContainerKind::XmlFile, anchor)))
        .collect();
    Ok(CredentialExtraction { records, inconsistent_prefix, leftovers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::UtcInstant;

    const REGION_HOST_XML: &str = r#"<?xml version='1.0' encoding='utf-8' standalone='yes' ?>
<map>
  <boolean name="medicaldevices2018exper@gmail.com_user_is_online" value="false" />
  <string name="medicaldevices2018exper@gmail.com_user_refresh_token">
    D2PXXZMSfnfbwDALTvmpUw0VRnZXD0djicG9CT0QPuODtvy-BEwR8wjr7coVdcAvge0t0-
    zTYf6ier3jyPQiUT5u7otC*4ZrrkVzYkx85LyoS9DftfXM-ig0*qcbcHx*RtLim-B1K7tZfzcoXtWg
  </string>
  <string name="medicaldevices2018exper@gmail.com_user_access_token">
    YgQLYRcdlyAWpL7cBiNLoORlyXd-uTznbuJaZRxiQgMb8EfrHdEF2q-hS0f2dQ0ryf*ubXJmrrUwG3RzYf
    sZEZV9f3ZoWYCG1zSXbIgjPupID*XleiJwi2JKVf7dw
  </string>
  <string name="medicaldevices2018exper@gmail.com_user_password">MedExp2018</string>
  <string name="medicaldevices2018exper@gmail.com_user_region_host_info">http://ap2.1hoad
  </string>
  <int name="medicaldevices2018exper@gmail.com_user_region_flag" value="1" />
</map>"#;

    fn ctx() -> ParseContext<'static> {
        ParseContext {
            package_name: PACKAGE,
            relative_path: "iHealthMyVitals.V2/shared_prefs/sp_user_region_host_info.xml",
            recovered_at: UtcInstant::EPOCH,
        }
    }

    fn credential(r: &crate::model::ArtifactRecord) -> &CredentialSet {
        match &r.payload {
            Payload::Credential(c) => c,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plaintext_password_recovered() {
        let out = parse_region_host_xml(REGION_HOST_XML.as_bytes(), &ctx()).unwrap();
        assert!(!out.inconsistent_prefix);
        assert_eq!(out.records.len(), 1);
        let c = credential(&out.records[0]);
        assert_eq!(c.account, "medicaldevices2018exper@gmail.com");
        assert_eq!(c.password_plaintext.as_deref(), Some("MedExp2018"));
        assert_eq!(c.is_online_flag, Some(false));
        assert!(c.refresh_token.as_deref().unwrap().starts_with("D2PXXZMS"));
        assert!(c.access_token.as_deref().unwrap().starts_with("YgQLYRcd"));
        assert_eq!(c.region_host.as_deref(), Some("http://ap2.1hoad"));
        assert_eq!(out.records[0].locator.detail, "medicaldevices2018exper@gmail.com_user_password");
        assert_eq!(out.records[0].locator.container, ContainerKind::XmlFile);
        // region_flag is not a credential key
        assert_eq!(out.leftovers.len(), 1);
        assert_eq!(out.leftovers[0].text, "1");
    }

    #[test]
    fn empty_map_has_no_keys() {
        assert_eq!(parse_region_host_xml(b"<map/>", &ctx()), Err(CredentialError::NoCredentialKeys));
    }

    #[test]
    fn online_flag_only() {
        let xml = br#"<map><boolean name="a@b.com_user_is_online" value="true"/></map>"#;
        let out = parse_region_host_xml(xml, &ctx()).unwrap();
        let c = credential(&out.records[0]);
        assert_eq!(c.is_online_flag, Some(true));
        assert_eq!(c.password_plaintext, None);
    }

    #[test]
    fn two_accounts_flagged() {
        let xml = br#"<map>
            <string name="a@b.com_user_password">x</string>
            <string name="c@d.org_user_access_token">t</string>
        </map>"#;
        let out = parse_region_host_xml(xml, &ctx()).unwrap();
        assert!(out.inconsistent_prefix);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            parse_region_host_xml(b"<map><string>", &ctx()),
            Err(CredentialError::MalformedXml(_))
        ));
    }

    #[test]
    fn non_email_prefix_is_not_a_credential() {
        let xml = br#"<map><string name="guest_user_password">x</string></map>"#;
        assert_eq!(parse_region_host_xml(xml, &ctx()), Err(CredentialError::NoCredentialKeys));
    }
}
