use std::fs;
use std::io::Write;

use ephiscan::source::ContainerType;
use ephiscan::{open_source, OpenError};
use ephiscan_core::ingest::Evidence;
use ephiscan_core::time::UtcInstant;
use zip::write::SimpleFileOptions;

fn clock() -> UtcInstant {
    UtcInstant::parse_iso8601("2024-01-01T00:00:00Z").unwrap()
}

#[test]
fn directory_listing_is_relative_and_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("evidence");
    fs::create_dir_all(root.join("b.app/databases")).unwrap();
    fs::create_dir_all(root.join("a.app/empty")).unwrap();
    fs::write(root.join("b.app/databases/x.db"), b"x").unwrap();
    fs::write(root.join("a.app/prefs.xml"), b"<map/>").unwrap();
    #[cfg(unix)]
    std::os::unix::fs::symlink("/etc/passwd", root.join("a.app/link")).unwrap();

    let src = open_source(&root, clock()).unwrap();
    assert_eq!(src.container, ContainerType::Directory);
    assert_eq!(src.origin_name(), "evidence");
    let listing: Vec<&str> = src.listing().iter().map(String::as_str).collect();
    assert_eq!(listing, ["a.app/prefs.xml", "b.app/databases/x.db"]);
    assert_eq!(src.read("b.app/databases/x.db").unwrap(), b"x");
    assert!(src.read("../outside").is_err());
    #[cfg(unix)]
    assert!(src.warnings.iter().any(|w| w.contains("symbolic link")));
}

#[test]
fn zip_entries_that_escape_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("evidence.zip");
    let mut w = zip::ZipWriter::new(fs::File::create(&path).unwrap());
    let opts = SimpleFileOptions::default();
    w.add_directory("pkg/", opts).unwrap();
    w.start_file("pkg/shared_prefs/a.xml", opts).unwrap();
    w.write_all(b"<map/>").unwrap();
    w.start_file("../evil.txt", opts).unwrap();
    w.write_all(b"nope").unwrap();
    w.start_file("pkg\\win\\style.txt", opts).unwrap();
    w.write_all(b"ok").unwrap();
    w.finish().unwrap();

    let src = open_source(&path, clock()).unwrap();
    assert_eq!(src.container, ContainerType::Zip);
    assert_eq!(src.origin_name(), "evidence");
    let listing: Vec<&str> = src.listing().iter().map(String::as_str).collect();
    assert_eq!(listing, ["pkg/shared_prefs/a.xml", "pkg/win/style.txt"]);
    assert_eq!(src.warnings.len(), 1);
    assert!(src.warnings[0].starts_with("../evil.txt"));
}

#[test]
fn open_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(open_source(&dir.path().join("missing"), clock()), Err(OpenError::NotFound(_))));

    let plain = dir.path().join("plain.txt");
    fs::write(&plain, b"hello").unwrap();
    assert!(matches!(open_source(&plain, clock()), Err(OpenError::UnsupportedContainer(_))));

    let broken = dir.path().join("broken.zip");
    fs::write(&broken, b"PK\x03\x04 this is not really an archive").unwrap();
    let err = open_source(&broken, clock()).err().unwrap();
    assert!(matches!(err, OpenError::CorruptArchive { .. }), "{err}");
}
