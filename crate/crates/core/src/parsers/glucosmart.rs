//! iHealth Gluco-Smart (`jiuana-androidBg.start`). Its databases are encrypted
//! on the device, so they are only classified; the one readable artifact is
//! `user_info.xml`, keyed `UserName` / `DeviceID`.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{find_file, AppParse, AppParser, Leftover, ParseContext, ParserOptions};
use crate::entropy::{leading_entropy, HIGH_ENTROPY_BITS};
use crate::ingest::{AppDataRoot, Evidence};
use crate::model::{ArtifactRecord, ContainerKind, Payload};
use crate::prefs::{parse_shared_prefs, PrefValue};
use crate::sqlite::has_magic;

pub const PACKAGE: &str = "jiuana-androidBg.start";
pub const USER_INFO_XML: &str = "user_info.xml";
pub const KEY_USERNAME: &str = "UserName";
pub const KEY_DEVICE_ID: &str = "DeviceID";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageStatus {
    PlaintextSqlite,
    EncryptedOrOpaque,
    Empty,
}

impl StorageStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StorageStatus::PlaintextSqlite => "plaintext-sqlite",
            StorageStatus::EncryptedOrOpaque => "encrypted-or-opaque",
            StorageStatus::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseStatus {
    pub relative_path: String,
    pub status: StorageStatus,
    pub header_magic_present: bool,
    /// Over the first 4 KiB.
    pub entropy_bits_per_byte: f64,
    pub high_entropy: bool,
    pub note: Option<String>,
}

pub fn classify_database(relative_path: &str, bytes: &[u8]) -> DatabaseStatus {
    let header_magic_present = has_magic(bytes);
    let entropy = leading_entropy(bytes);
    let status = if bytes.is_empty() {
        StorageStatus::Empty
    } else if header_magic_present {
        StorageStatus::PlaintextSqlite
    } else {
        StorageStatus::EncryptedOrOpaque
    };
    DatabaseStatus {
        relative_path: relative_path.to_owned(),
        status,
        header_magic_present,
        entropy_bits_per_byte: entropy,
        high_entropy: entropy >= HIGH_ENTROPY_BITS,
        note: None,
    }
}

/// Classifies every `.db` file beneath the root. Unreadable files count as
/// encrypted-or-opaque with a note.
pub fn classify_databases(root: &AppDataRoot, evidence: &dyn Evidence) -> Vec<DatabaseStatus> {
    evidence
        .files_under(&root.relative_path)
        .into_iter()
        .filter(|p| p.ends_with(".db"))
        .map(|path| match evidence.read(path) {
            Ok(bytes) => classify_database(path, &bytes),
            Err(e) => DatabaseStatus {
                relative_path: path.to_owned(),
                status: StorageStatus::EncryptedOrOpaque,
                header_magic_present: false,
                entropy_bits_per_byte: 0.0,
                high_entropy: false,
                note: Some(format!("{e}")),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlucoProfile {
    pub username: String,
    pub device_identifier: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserInfoError {
    MalformedXml(String),
    MissingFields { username: Option<String>, device_identifier: Option<String> },
}

impl fmt::Display for UserInfoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserInfoError::MalformedXml(m) => write!(f, "malformed XML: {m}"),
            UserInfoError::MissingFields { username, device_identifier } => write!(
                f,
                "user profile incomplete (username {}, device identifier {})",
                if username.is_some() { "present" } else { "missing" },
                if device_identifier.is_some() { "present" } else { "missing" },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserInfoExtraction {
    pub record: ArtifactRecord,
    pub leftovers: Vec<Leftover>,
}

/// Extracts the username and device identifier. Exact `UserName`/`DeviceID`
/// keys win; otherwise the first string key mentioning user/name (resp.
/// device/id) is taken.
pub fn parse_user_info_xml(xml: &[u8], ctx: &ParseContext<'_>) -> Result<UserInfoExtraction, UserInfoError> {
    let entries = parse_shared_prefs(xml).map_err(|e| UserInfoError::MalformedXml(e.0))?;
    let non_empty = |v: &PrefValue| v.as_str().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);

    let pick = |exact: &str, fuzzy: &dyn Fn(&str) -> bool| -> Option<(usize, String)> {
        entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.name == exact)
            .or_else(|| entries.iter().enumerate().find(|(_, e)| fuzzy(&e.name.to_ascii_lowercase())))
            .and_then(|(i, e)| non_empty(&e.value).map(|v| (i, v)))
    };
    let user = pick(KEY_USERNAME, &|k| (k.contains("user") || k.contains("name")) && !k.contains("device"));
    let device = pick(KEY_DEVICE_ID, &|k| k.contains("device") || k.ends_with("id"));

    let (Some((ui, username)), Some((di, device_identifier))) = (user.clone(), device.clone()) else {
        return Err(UserInfoError::MissingFields {
            username: user.map(|u| u.1),
            device_identifier: device.map(|d| d.1),
        });
    };
    let leftovers = entries
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ui && *i != di)
        .map(|(_, e)| Leftover {
            locator: ctx.locator(ContainerKind::XmlFile, e.name.clone()),
            text: e.value.render(),
        })
        .collect();
    let anchor = entries[ui].name.clone();
    let record = ctx.record(
        Payload::GlucoProfile(GlucoProfile { username, device_identifier }),
        ctx.locator(ContainerKind::XmlFile, anchor),
    );
    Ok(UserInfoExtraction { record, leftovers })
}

pub struct GlucoSmartParser;

impl AppParser for GlucoSmartParser {
    fn id(&self) -> &'static str {
        "ihealth-gluco-smart"
    }

    fn app_name(&self) -> &'static str {
        "Gluco-Smart"
    }

    fn signature(&self) -> &'static str {
        "jiuana-androidBg.start/"
    }

    fn detect(&self, root: &AppDataRoot, _evidence: &dyn Evidence) -> bool {
        root.package_name == PACKAGE
    }

    fn parse(&self, root: &AppDataRoot, evidence: &dyn Evidence, options: &ParserOptions<'_>) -> AppParse {
        let mut out = AppParse::default();
        for status in classify_databases(root, evidence) {
            if status.status != StorageStatus::PlaintextSqlite {
                out.claimed.insert(status.relative_path.clone());
            }
            if status.status == StorageStatus::PlaintextSqlite {
                out.warnings.push(format!(
                    "{}: unexpectedly plaintext; readings are not extracted for this app",
                    status.relative_path
                ));
            }
        }
        let Some(xml_path) = find_file(evidence, &root.relative_path, USER_INFO_XML) else {
            return out;
        };
        let xml_path = xml_path.to_owned();
        let ctx = ParseContext {
            package_name: &root.package_name,
            relative_path: &xml_path,
            recovered_at: options.recovered_at,
        };
        match evidence.read(&xml_path) {
            Ok(bytes) => match parse_user_info_xml(&bytes, &ctx) {
                Ok(extraction) => {
                    out.claimed.insert(xml_path.clone());
                    out.records.push(extraction.record);
                    out.leftovers.extend(extraction.leftovers);
                }
                Err(e) => out.warnings.push(format!("{xml_path}: {e}")),
            },
            Err(e) => out.warnings.push(format!("{e}")),
        }
        out
    }
}
