//! Opening evidence containers: an extracted directory tree or a zip archive.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use ephiscan_core::ingest::{normalize_relative_path, Evidence, EvidenceError};
use ephiscan_core::time::UtcInstant;
use walkdir::WalkDir;

#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error("{0}: no such file or directory")]
    NotFound(PathBuf),
    #[error("{0}: not a directory or zip archive")]
    UnsupportedContainer(PathBuf),
    #[error("{path}: corrupt archive: {message}")]
    CorruptArchive { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerType {
    Directory,
    Zip,
}

enum Storage {
    Directory(PathBuf),
    Zip(BTreeMap<String, Vec<u8>>),
}

/// An opened, read-only evidence container.
pub struct EvidenceSource {
    pub container: ContainerType,
    pub path: PathBuf,
    pub opened_at: UtcInstant,
    /// Entries that were skipped while opening (symlinks, unsafe names, duplicates).
    pub warnings: Vec<String>,
    listing: BTreeSet<String>,
    storage: Storage,
}

impl EvidenceSource {
    /// Basename of the container with any `.zip` suffix removed, so a tree and
    /// its archive report the same origin.
    pub fn origin_name(&self) -> String {
        let name = self
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.to_string_lossy().into_owned());
        match name.strip_suffix(".zip") {
            Some(stem) if !stem.is_empty() => stem.to_owned(),
            _ => name,
        }
    }
}

impl Evidence for EvidenceSource {
    fn listing(&self) -> &BTreeSet<String> {
        &self.listing
    }

    fn read(&self, relative_path: &str) -> Result<Vec<u8>, EvidenceError> {
        if !self.listing.contains(relative_path) {
            return Err(EvidenceError::NotFound(relative_path.to_owned()));
        }
        match &self.storage {
            Storage::Directory(root) => {
                fs::read(root.join(relative_path)).map_err(|e| EvidenceError::Io(format!("{relative_path}: {e}")))
            }
            Storage::Zip(entries) => entries
                .get(relative_path)
                .cloned()
                .ok_or_else(|| EvidenceError::NotFound(relative_path.to_owned())),
        }
    }
}

pub fn open_source(path: &Path, opened_at: UtcInstant) -> Result<EvidenceSource, OpenError> {
    let meta = fs::metadata(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => OpenError::NotFound(path.to_owned()),
        _ => OpenError::Io { path: path.to_owned(), source: e },
    })?;
    if meta.is_dir() {
        open_directory(path, opened_at)
    } else if meta.is_file() && looks_like_zip(path)? {
        open_zip(path, opened_at)
    } else {
        Err(OpenError::UnsupportedContainer(path.to_owned()))
    }
}

fn looks_like_zip(path: &Path) -> Result<bool, OpenError> {
    let mut magic = [0u8; 4];
    let mut file = File::open(path).map_err(|e| OpenError::Io { path: path.to_owned(), source: e })?;
    let n = file.read(&mut magic).map_err(|e| OpenError::Io { path: path.to_owned(), source: e })?;
    // local file header, or the end record of an empty archive
    Ok(n == 4 && (magic == *b"PK\x03\x04" || magic == *b"PK\x05\x06"))
}

fn open_directory(root: &Path, opened_at: UtcInstant) -> Result<EvidenceSource, OpenError> {
    let mut listing = BTreeSet::new();
    let mut warnings = Vec::new();
    for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
        let entry = entry.map_err(|e| OpenError::Io {
            path: e.path().unwrap_or(root).to_owned(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("directory walk failed")),
        })?;
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        if entry.file_type().is_symlink() {
            warnings.push(format!("{}: symbolic link not followed", rel.display()));
            continue;
        }
        if !entry.file_type().is_file() {
            continue;
        }
        match rel.to_str().and_then(normalize_relative_path) {
            Some(p) => {
                listing.insert(p);
            }
            None => warnings.push(format!("{}: name is not usable as an evidence path", rel.display())),
        }
    }
    Ok(EvidenceSource {
        container: ContainerType::Directory,
        path: root.to_owned(),
        opened_at,
        warnings,
        listing,
        storage: Storage::Directory(root.to_owned()),
    })
}

fn open_zip(path: &Path, opened_at: UtcInstant) -> Result<EvidenceSource, OpenError> {
    let corrupt = |message: String| OpenError::CorruptArchive { path: path.to_owned(), message };
    let file = File::open(path).map_err(|e| OpenError::Io { path: path.to_owned(), source: e })?;
    let mut archive = zip::ZipArchive::new(file).map_err(|e| corrupt(e.to_string()))?;
    let mut entries = BTreeMap::new();
    let mut warnings = Vec::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i).map_err(|e| corrupt(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let raw = entry.name().to_owned();
        let Some(name) = normalize_relative_path(&raw) else {
            warnings.push(format!("{raw}: entry escapes the archive root; skipped"));
            continue;
        };
        if entries.contains_key(&name) {
            warnings.push(format!("{raw}: duplicate entry; first copy kept"));
            continue;
        }
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut bytes).map_err(|e| corrupt(format!("{raw}: {e}")))?;
        entries.insert(name, bytes);
    }
    Ok(EvidenceSource {
        container: ContainerType::Zip,
        path: path.to_owned(),
        opened_at,
        warnings,
        listing: entries.keys().cloned().collect(),
        storage: Storage::Zip(entries),
    })
}
