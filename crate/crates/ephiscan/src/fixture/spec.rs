//! The fixture specification: a TOML document describing which synthetic
//! records to plant for each application. The format is described in
//! `docs/fixture-spec.md` at the repository root.

use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Smallest encrypted stand-in that fills the whole entropy window.
pub const MIN_ENCRYPTED_DB_SIZE: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    #[default]
    Directory,
    Zip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub format_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub output_kind: OutputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub myvitals: Option<MyVitalsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glucosmart: Option<GlucoSmartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub healthmate: Option<HealthMateSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MyVitalsSpec {
    pub bp_rows: u32,
    pub spo2_rows: u32,
    pub weight_rows: u32,
    pub env_rows: u32,
    pub user_rows: u32,
    /// Rows with an out-of-range oxygen saturation; the scanner must skip them.
    pub invalid_spo2_rows: u32,
    /// Rows whose systolic value does not exceed the diastolic one.
    pub invalid_bp_rows: u32,
    /// Explicit oximetry rows, written after the synthetic ones.
    pub spo2: Vec<Spo2Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub credential: Option<CredentialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spo2Row {
    pub used_user_id: i64,
    pub phone_data_id: String,
    pub health_id: String,
    pub machine_type: String,
    pub machine_device_id: String,
    pub measure_time: i64,
    pub last_change_time: i64,
    pub phone_create_time: i64,
    pub result: i64,
    pub pr: i64,
    /// Stored at single precision, as the app writes it.
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredentialSpec {
    pub account: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_host: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_online: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_flag: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlucoSmartSpec {
    pub encrypted_db_count: u32,
    /// Bytes per encrypted database; defaults to 8192.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encrypted_db_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_info: Option<GlucoUserInfo>,
}

impl GlucoSmartSpec {
    pub fn db_size(&self) -> u32 {
        self.encrypted_db_size.unwrap_or(8192)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlucoUserInfo {
    pub username: String,
    pub device_id: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HealthMateSpec {
    pub device_rows: u32,
    pub measure_rows: u32,
    pub user_rows: u32,
    /// Measure rows with a type code the default code map does not know.
    pub unmapped_measure_rows: u32,
    pub devices: Vec<DeviceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRow {
    pub id: i64,
    pub association_date: i64,
    pub last_use_date: i64,
    pub modified_date: i64,
    pub mac_address: String,
    pub firmware: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timezone: Option<String>,
    pub battery: i64,
    #[serde(rename = "type")]
    pub device_type: i64,
    pub model: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct InvalidSpec {
    pub line: Option<usize>,
    pub message: String,
}

impl InvalidSpec {
    fn new(message: impl Into<String>) -> Self {
        InvalidSpec { line: None, message: message.into() }
    }
}

impl FixtureSpec {
    pub fn parse(text: &str) -> Result<Self, InvalidSpec> {
        let spec: FixtureSpec = toml::from_str(text).map_err(|e| InvalidSpec {
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            message: e.message().to_owned(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Panics on a seed above `i64::MAX`, which TOML cannot hold and
    /// [`FixtureSpec::validate`] rejects.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fixture spec serializes")
    }

    pub fn validate(&self) -> Result<(), InvalidSpec> {
        if self.format_version != FORMAT_VERSION {
            return Err(InvalidSpec::new(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(InvalidSpec::new(format!("seed must be at most {}", i64::MAX)));
        }
        if let Some(g) = &self.glucosmart {
            if g.db_size() < MIN_ENCRYPTED_DB_SIZE {
                return Err(InvalidSpec::new(format!(
                    "glucosmart.encrypted_db_size must be at least {MIN_ENCRYPTED_DB_SIZE}"
                )));
            }
        }
        if let Some(h) = &self.healthmate {
            let mut ids: Vec<i64> = h.devices.iter().map(|d| d.id).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(InvalidSpec::new("healthmate.devices ids must be unique"));
            }
        }
        Ok(())
    }
}
