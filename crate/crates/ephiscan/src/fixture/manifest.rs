//! What a fixture tree is expected to yield when scanned.

use std::collections::{BTreeMap, BTreeSet};

use ephiscan_core::ingest::FileDigest;
use ephiscan_core::model::{RecordKind, SourceLocator};
use ephiscan_core::parsers::glucosmart::StorageStatus;
use ephiscan_core::phi::{PhiCategory, ViolationKind};
use serde::{Deserialize, Serialize};

use super::spec::FixtureSpec;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedRecord {
    pub app: String,
    pub locator: SourceLocator,
    pub kind: RecordKind,
    pub fields: BTreeMap<String, String>,
    pub categories: BTreeSet<PhiCategory>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpectedStatus {
    pub relative_path: String,
    pub status: StorageStatus,
    pub high_entropy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedApp {
    pub app_name: String,
    pub categories: BTreeSet<PhiCategory>,
    pub violations: Vec<ViolationKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub format_version: u32,
    pub spec: FixtureSpec,
    pub files: Vec<FileDigest>,
    pub records: Vec<PlantedRecord>,
    /// Rows planted with invalid values.
    pub skipped: Vec<SourceLocator>,
    pub database_statuses: Vec<ExpectedStatus>,
    pub apps: Vec<ExpectedApp>,
}

impl FixtureManifest {
    pub fn to_json(&self) -> Vec<u8> {
        ephiscan_core::report::to_canonical_json(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn app(&self, name: &str) -> Option<&ExpectedApp> {
        self.apps.iter().find(|a| a.app_name == name)
    }
}
