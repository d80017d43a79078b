use std::fs;
use std::path::Path;
use std::process::Command;

use ephiscan::cli::run;
use ephiscan::fixture::REFERENCE_SPEC;

const CLOCK: &str = "2024-03-01T12:00:00Z";

fn ephiscan(args: &[&str]) -> (u8, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ephiscan").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn replica(dir: &Path, name: &str) -> std::path::PathBuf {
    let spec = dir.join("replica.spec");
    fs::write(&spec, REFERENCE_SPEC).unwrap();
    let out = dir.join(name);
    let (code, stdout, stderr) = ephiscan(&["fixtures", s(&spec), "-o", s(&out)]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("manifest:"));
    out
}

#[test]
fn replica_scan_exits_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let (code, text, _) = ephiscan(&["scan", s(&tree), "--fixed-clock", CLOCK]);
    assert_eq!(code, 2);
    assert!(text.contains("Key: ✓ recovered, X not recovered"));
    assert!(text.contains("plaintext-credential"));
    assert!(!text.contains("MedExp2018"), "redaction is the default");

    let (code, text, _) = ephiscan(&["scan", s(&tree), "--format", "text", "--no-redact", "--fixed-clock", CLOCK]);
    assert_eq!(code, 2);
    assert!(text.contains("MedExp2018"));
}

#[test]
fn json_is_reproducible_across_runs_and_containers() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let zip = replica(&dir.path().join("z").tap_mkdir(), "replica.zip");
    let scan = |p: &Path| ephiscan(&["scan", s(p), "--format", "json", "--fixed-clock", CLOCK]).1;
    let a = scan(&tree);
    assert_eq!(a, scan(&tree));
    assert_eq!(a, scan(&zip));
    let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(parsed["generated_at"], CLOCK);
    assert_eq!(parsed["evidence_origin"], "replica");
    assert!(a.ends_with("}\n"));
}

trait TapMkdir {
    fn tap_mkdir(self) -> Self;
}

impl TapMkdir for std::path::PathBuf {
    fn tap_mkdir(self) -> Self {
        fs::create_dir_all(&self).unwrap();
        self
    }
}

#[test]
fn empty_and_missing_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, _) = ephiscan(&["scan", s(dir.path())]);
    assert_eq!(code, 0);
    assert!(text.contains("Records: 0"));

    let (code, stdout, stderr) = ephiscan(&["scan", s(&dir.path().join("nope"))]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    assert!(stderr.starts_with("ephiscan: ") && stderr.contains("no such file"));
}

#[test]
fn malformed_spec_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, "format_version = 1\nseed = 3\n[myvitals]\nbp_rows = -1\n").unwrap();
    let (code, _, stderr) = ephiscan(&["fixtures", s(&spec), "-o", s(&dir.path().join("out"))]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 4"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn fixtures_refuse_non_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let spec = dir.path().join("replica.spec");
    let (code, _, stderr) = ephiscan(&["fixtures", s(&spec), "-o", s(&tree)]);
    assert_eq!(code, 1, "{stderr}");
}

#[test]
fn timeline_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let out = dir.path().join("timeline.json");
    let (code, stdout, _) =
        ephiscan(&["timeline", s(&tree), "--format", "json", "--fixed-clock", CLOCK, "-o", s(&out)]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let events: Vec<serde_json::Value> = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert!(events.len() >= 7);
    let utc: Vec<&str> = events.iter().map(|e| e["at"]["utc"].as_str().unwrap()).collect();
    assert!(utc.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn code_map_override() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let bad = dir.path().join("bad.map");
    fs::write(&bad, "1 = weight\n1 = bmi\n").unwrap();
    let (code, _, stderr) = ephiscan(&["scan", s(&tree), "--code-map", s(&bad)]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 2"), "{stderr}");

    // Without the weight code, those rows become unmapped-code hits.
    let partial = dir.path().join("partial.map");
    fs::write(&partial, "# blood pressure only\n4 = systolic\n5 = diastolic\n11 = pulse\n").unwrap();
    let (_, json, _) = ephiscan(&["scan", s(&tree), "--format", "json", "--code-map", s(&partial)]);
    assert!(json.contains("unmapped-measure-code"));
}

#[test]
fn list_parsers() {
    let (code, json, _) = ephiscan(&["list-parsers", "--format", "json"]);
    assert_eq!(code, 0);
    let parsers: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    let ids: Vec<&str> = parsers.iter().map(|p| p["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["ihealth-myvitals", "ihealth-gluco-smart", "withings-health-mate"]);
    let (_, text, _) = ephiscan(&["list-parsers"]);
    assert!(text.starts_with("ID"));
}

#[test]
fn usage_errors() {
    assert_eq!(ephiscan(&["frobnicate"]).0, 1);
    assert_eq!(ephiscan(&["scan"]).0, 1);
    assert_eq!(ephiscan(&["scan", ".", "--fixed-clock", "yesterday"]).0, 1);
    assert_eq!(ephiscan(&["--help"]).0, 0);
}

#[test]
fn binary_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let tree = replica(dir.path(), "replica");
    let bin = env!("CARGO_BIN_EXE_ephiscan");
    let status = Command::new(bin).args(["scan", s(&tree)]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin).args(["scan", s(&dir.path().join("missing"))]).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}
