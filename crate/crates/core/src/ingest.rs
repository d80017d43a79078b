//! Evidence access contract, application-root discovery and file digests.
//!
//! Containers themselves (directories, zip archives) are opened elsewhere; this
//! module only sees them through [`Evidence`].

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::parsers::AppParser;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvidenceError {
    NotFound(String),
    Io(String),
}

impl fmt::Display for EvidenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvidenceError::NotFound(p) => write!(f, "{p}: not found in evidence"),
            EvidenceError::Io(msg) => write!(f, "evidence read failed: {msg}"),
        }
    }
}

/// Read-only view of an extracted app-data tree. Paths are relative,
/// `/`-separated and never contain `..`.
pub trait Evidence {
    fn listing(&self) -> &BTreeSet<String>;

    fn read(&self, relative_path: &str) -> Result<Vec<u8>, EvidenceError>;

    fn contains(&self, relative_path: &str) -> bool {
        self.listing().contains(relative_path)
    }

    /// Every file beneath `dir` (a relative directory path without trailing slash).
    fn files_under(&self, dir: &str) -> Vec<&str> {
        let prefix = format!("{dir}/");
        self.listing()
            .range(prefix.clone()..)
            .take_while(|p| p.starts_with(&prefix))
            .map(String::as_str)
            .collect()
    }
}

/// An evidence tree held entirely in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryEvidence {
    files: BTreeMap<String, Vec<u8>>,
    listing: BTreeSet<String>,
}

impl MemoryEvidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a file; returns `false` (and stores nothing) if the path does not
    /// normalize to a safe relative path.
    pub fn insert(&mut self, path: &str, bytes: Vec<u8>) -> bool {
        match normalize_relative_path(path) {
            Some(p) => {
                self.listing.insert(p.clone());
                self.files.insert(p, bytes);
                true
            }
            None => false,
        }
    }
}

impl Evidence for MemoryEvidence {
    fn listing(&self) -> &BTreeSet<String> {
        &self.listing
    }

    fn read(&self, relative_path: &str) -> Result<Vec<u8>, EvidenceError> {
        self.files
            .get(relative_path)
            .cloned()
            .ok_or_else(|| EvidenceError::NotFound(relative_path.to_owned()))
    }
}

/// Normalizes a container entry name to a `/`-separated relative path.
/// Returns `None` for anything that would climb out of the root (`..`), empty
/// names, and names with NUL or drive prefixes.
pub fn normalize_relative_path(raw: &str) -> Option<String> {
    if raw.contains('\0') {
        return None;
    }
    let mut segments: Vec<&str> = Vec::new();
    for seg in raw.split(['/', '\\']) {
        match seg {
            "" | "." => continue,
            ".." => return None,
            s if segments.is_empty() && s.len() == 2 && s.ends_with(':') => return None,
            s => segments.push(s),
        }
    }
    (!segments.is_empty()).then(|| segments.join("/"))
}

/// One top-level folder of the evidence tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppDataRoot {
    pub package_name: String,
    pub relative_path: String,
    pub matched_parser: Option<String>,
}

impl AppDataRoot {
    pub fn unbound(package_name: &str) -> Self {
        AppDataRoot {
            package_name: package_name.to_owned(),
            relative_path: package_name.to_owned(),
            matched_parser: None,
        }
    }
}

/// One root per top-level directory that holds at least one file, sorted by
/// package name. A root is bound to a parser only when exactly one parser
/// accepts it.
pub fn enumerate_app_roots(evidence: &dyn Evidence, parsers: &[&dyn AppParser]) -> Vec<AppDataRoot> {
    let packages: BTreeSet<&str> = evidence
        .listing()
        .iter()
        .filter_map(|p| p.split_once('/').map(|(top, _)| top))
        .collect();
    packages
        .into_iter()
        .map(|pkg| {
            let mut root = AppDataRoot::unbound(pkg);
            let accepted: Vec<&str> = parsers
                .iter()
                .filter(|p| p.detect(&root, evidence))
                .map(|p| p.id())
                .collect();
            if let [only] = accepted.as_slice() {
                root.matched_parser = Some((*only).to_owned());
            }
            root
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DigestAlgorithm {
    #[serde(rename = "sha-256")]
    Sha256,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileDigest {
    pub relative_path: String,
    pub algorithm: DigestAlgorithm,
    pub hex_digest: String,
    pub byte_length: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push(char::from_digit((b >> 4) as u32, 16).unwrap_or('0'));
        hex.push(char::from_digit((b & 0xf) as u32, 16).unwrap_or('0'));
    }
    hex
}

pub fn digest_bytes(relative_path: &str, bytes: &[u8]) -> FileDigest {
    FileDigest {
        relative_path: relative_path.to_owned(),
        algorithm: DigestAlgorithm::Sha256,
        hex_digest: sha256_hex(bytes),
        byte_length: bytes.len() as u64,
    }
}

pub fn hash_file(evidence: &dyn Evidence, relative_path: &str) -> Result<FileDigest, EvidenceError> {
    if !evidence.contains(relative_path) {
        return Err(EvidenceError::NotFound(relative_path.to_owned()));
    }
    let bytes = evidence.read(relative_path)?;
    Ok(digest_bytes(relative_path, &bytes))
}
