use chrono::DateTime;
use ephiscan_core::ingest::{normalize_relative_path, MemoryEvidence};
use ephiscan_core::model::{
    normalize_timestamp, ArtifactRecord, ContainerKind, CredentialSet, Payload, SourceLocator, TimeUnit,
    TimestampError,
};
use ephiscan_core::parsers::builtin_parsers;
use ephiscan_core::parsers::codemap::MeasureCodeMap;
use ephiscan_core::parsers::myvitals::OximetryReading;
use ephiscan_core::phi::{
    evaluate_privacy_rule, evaluate_security_rule, redact, CellState, PhiCategory, PhiFinding, RuleTable, ViolationKind,
};
use ephiscan_core::report::{parse_report, render_json};
use ephiscan_core::scan::{scan_evidence, ScanOptions};
use ephiscan_core::time::UtcInstant;
use ephiscan_core::timeline::{build_timeline, AppRecord};
use proptest::prelude::*;
use rusqlite::Connection;

fn chrono_utc(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0).unwrap().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn clock() -> UtcInstant {
    UtcInstant::parse_iso8601("2024-01-01T00:00:00Z").unwrap()
}

fn loc(detail: String) -> SourceLocator {
    SourceLocator {
        package_name: "pkg".into(),
        relative_path: "pkg/db".into(),
        container: ContainerKind::SqliteTable,
        detail,
    }
}

fn finding(i: usize, category: PhiCategory) -> PhiFinding {
    PhiFinding {
        app: "App".into(),
        locator: loc(format!("T:{i}")),
        category,
        rule_id: "R".into(),
        value_excerpt: "v".into(),
    }
}

fn category() -> impl Strategy<Value = PhiCategory> {
    proptest::sample::select(PhiCategory::ALL.to_vec())
}

fn oximetry(raw: i64, detail: String) -> ArtifactRecord {
    let at = normalize_timestamp(raw).unwrap();
    let payload = Payload::Oximetry(OximetryReading {
        result_spo2: 97,
        pulse_rate: 80,
        perfusion_index: 5.0,
        measured_at: at.clone(),
        last_change_at: at.clone(),
        phone_created_at: at,
        health_id: "a@b.co".into(),
        machine_type: "PO3M".into(),
        machine_device_id: "5CF821DED2ED".into(),
        used_user_id: 0,
        phone_data_id: "x".into(),
    });
    ArtifactRecord::new(payload, loc(detail), clock())
}

proptest! {
    #[test]
    fn seconds_band_matches_chrono(raw in 1i64..100_000_000_000) {
        let got = normalize_timestamp(raw).unwrap();
        prop_assert_eq!(got.unit, TimeUnit::Seconds);
        prop_assert_eq!(&got.utc, &chrono_utc(raw));
        prop_assert_eq!(got.unix_seconds(), raw);
    }

    #[test]
    fn millisecond_band_matches_chrono(raw in 1_000_000_000_000i64..=253_402_300_799_999) {
        let got = normalize_timestamp(raw).unwrap();
        let oracle = DateTime::from_timestamp_millis(raw).unwrap();
        prop_assert_eq!(got.unit, TimeUnit::Milliseconds);
        prop_assert_eq!(got.utc, oracle.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        prop_assert_eq!(i64::from(got.remainder_ms), raw.rem_euclid(1000));
    }

    #[test]
    fn ambiguous_band_always_errors(raw in 100_000_000_000i64..1_000_000_000_000) {
        prop_assert_eq!(normalize_timestamp(raw), Err(TimestampError::AmbiguousUnit(raw)));
    }

    #[test]
    fn non_positive_and_far_future_error(raw in i64::MIN..=0, far in 253_402_300_800_000i64..) {
        prop_assert_eq!(normalize_timestamp(raw), Err(TimestampError::NonPositive(raw)));
        prop_assert_eq!(normalize_timestamp(far), Err(TimestampError::OutOfRange(far)));
    }

    #[test]
    fn matrix_ignores_order(cats in proptest::collection::vec(category(), 0..30), seed in any::<u64>()) {
        let findings: Vec<PhiFinding> = cats.iter().enumerate().map(|(i, c)| finding(i, *c)).collect();
        let mut shuffled = findings.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
            }
        }
        prop_assert_eq!(evaluate_privacy_rule("App", &findings), evaluate_privacy_rule("App", &shuffled));
    }

    #[test]
    fn matrix_is_monotone(
        base in proptest::collection::vec(category(), 0..20),
        extra in proptest::collection::vec(category(), 0..20),
    ) {
        let small: Vec<PhiFinding> = base.iter().enumerate().map(|(i, c)| finding(i, *c)).collect();
        let mut large = small.clone();
        large.extend(extra.iter().enumerate().map(|(i, c)| finding(100 + i, *c)));
        let a = evaluate_privacy_rule("App", &small);
        let b = evaluate_privacy_rule("App", &large);
        for c in PhiCategory::ALL {
            prop_assert!(a.cell(c) == CellState::NotRecovered || b.cell(c) == CellState::Recovered);
            prop_assert_eq!(a.recovered(c), base.contains(&c));
        }
    }

    #[test]
    fn credential_violation_iff_password(
        password in proptest::option::of("[A-Za-z0-9]{1,16}"),
        token in proptest::option::of("[A-Za-z0-9]{8,40}"),
    ) {
        let record = ArtifactRecord::new(
            Payload::Credential(CredentialSet {
                account: "someone@example.org".into(),
                password_plaintext: password.clone(),
                refresh_token: token.clone(),
                access_token: token,
                region_host: None,
                is_online_flag: Some(false),
            }),
            SourceLocator {
                package_name: "pkg".into(),
                relative_path: "pkg/shared_prefs/p.xml".into(),
                container: ContainerKind::XmlFile,
                detail: "k".into(),
            },
            clock(),
        );
        let violations = evaluate_security_rule("App", &[record], &[], &[]);
        let flagged = violations.iter().find(|v| v.kind == ViolationKind::PlaintextCredential);
        prop_assert_eq!(flagged.is_some(), password.is_some());
        if let Some(v) = flagged {
            prop_assert_eq!(&v.excerpt, &password);
        }
    }

    #[test]
    fn timeline_ignores_record_order(
        raws in proptest::collection::vec(prop_oneof![
            1_400_000_000i64..1_400_000_100,
            1_400_000_000_000i64..1_400_000_100_000,
        ], 1..40),
        seed in any::<u64>(),
    ) {
        let records: Vec<AppRecord> = raws
            .iter()
            .enumerate()
            .map(|(i, r)| AppRecord { app: format!("app{}", i % 3), record: oximetry(*r, format!("T:{}", i % 5)) })
            .collect();
        let mut shuffled = records.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_mul(31).wrapping_add(i * 17) % n);
        }
        let a = build_timeline(&records, false);
        prop_assert_eq!(&a, &build_timeline(&shuffled, false));
        prop_assert_eq!(a.events.len(), n);
        prop_assert!(a.events.windows(2).all(|w| w[0].at.utc <= w[1].at.utc));
    }

    #[test]
    fn normalized_paths_never_escape(raw in "[a-z./\\\\:]{0,30}") {
        if let Some(p) = normalize_relative_path(&raw) {
            prop_assert!(!p.is_empty() && !p.starts_with('/') && !p.contains('\\'));
            prop_assert!(p.split('/').all(|s| !s.is_empty() && s != "." && s != ".."));
            prop_assert_eq!(normalize_relative_path(&p), Some(p.clone()));
        }
        prop_assert!(raw.split(['/', '\\']).all(|s| s != "..") || normalize_relative_path(&raw).is_none());
    }

    #[test]
    fn redaction_keeps_length_and_edges(text in ".{0,40}") {
        let r = redact(&text);
        let chars: Vec<char> = text.chars().collect();
        prop_assert_eq!(r.chars().count(), chars.len());
        if chars.len() > 4 {
            prop_assert!(r.starts_with(&chars[..2].iter().collect::<String>()));
            prop_assert!(r.ends_with(&chars[chars.len() - 2..].iter().collect::<String>()));
        } else {
            prop_assert!(r.chars().all(|c| c == '*'));
        }
    }
}

fn myvitals_db(rows: &[(i64, i64, i64, i64)]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("androidNin.db");
    let conn = Connection::open(&path).unwrap();
    conn.execute_batch(
        "CREATE TABLE TB_BPResult (_id INTEGER PRIMARY KEY AUTOINCREMENT, Sys INTEGER, Dia INTEGER, Pulse INTEGER,
            MeasureTime INTEGER, DeviceID TEXT, Note TEXT, Account TEXT);
         CREATE TABLE TB_Userinfo (_id INTEGER PRIMARY KEY AUTOINCREMENT, Name TEXT, Birthday TEXT, TimeZone TEXT, Email TEXT);
         INSERT INTO TB_Userinfo (Name, Birthday, TimeZone, Email) VALUES ('Pat Doe', '1980-02-29', 'America/Chicago', 'pat@example.org');",
    )
    .unwrap();
    for (sys, dia, pulse, at) in rows {
        conn.execute(
            "INSERT INTO TB_BPResult (Sys, Dia, Pulse, MeasureTime, DeviceID, Note, Account) VALUES (?1, ?2, ?3, ?4, 'A4C138000001', NULL, 'pat@example.org')",
            (sys, dia, pulse, at),
        )
        .unwrap();
    }
    drop(conn);
    std::fs::read(path).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn report_json_round_trips(
        rows in proptest::collection::vec((60i64..200, 40i64..130, 40i64..150, 1_300_000_000i64..1_700_000_000), 0..12),
        redacted in any::<bool>(),
    ) {
        let mut evidence = MemoryEvidence::new();
        evidence.insert("iHealthMyVitals.V2/Databases/androidNin.db", myvitals_db(&rows));
        evidence.insert("stray.app/notes.txt", b"call 555 about card 4111 1111 1111 1111".to_vec());
        let code_map = MeasureCodeMap::default();
        let rules = RuleTable::default();
        let options = ScanOptions {
            generated_at: clock(),
            redact: redacted,
            code_map: &code_map,
            rules: &rules,
            evidence_origin: "memory".into(),
            tool_version: "test".into(),
        };
        let report = scan_evidence(&evidence, builtin_parsers(), &options).report;
        let bytes = render_json(&report);
        let back = parse_report(&bytes).unwrap();
        prop_assert_eq!(&back, &report);
        prop_assert_eq!(render_json(&back), bytes);
        let valid = rows.iter().filter(|(s, d, _, _)| s > d).count();
        prop_assert_eq!(report.skipped_rows.len(), rows.len() - valid);
    }
}
