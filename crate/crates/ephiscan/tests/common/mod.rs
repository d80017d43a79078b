#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ephiscan::fixture::spec::{
    CredentialSpec, DeviceRow, GlucoSmartSpec, GlucoUserInfo, HealthMateSpec, MyVitalsSpec, Spo2Row,
};
use ephiscan::fixture::{build_fixture, generate_fixture, FixtureManifest, FixtureSpec, OutputKind, REFERENCE_SPEC};
use ephiscan::{scan_path, ScanConfig};
use ephiscan_core::scan::ScanOutcome;
use ephiscan_core::time::UtcInstant;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn clock() -> UtcInstant {
    UtcInstant::parse_iso8601("2024-03-01T12:00:00Z").unwrap()
}

pub fn config(redact: bool) -> ScanConfig {
    ScanConfig { redact, fixed_clock: Some(clock()), ..ScanConfig::default() }
}

pub fn replica_spec() -> FixtureSpec {
    FixtureSpec::parse(REFERENCE_SPEC).unwrap()
}

/// Writes the fixture for `spec` under `dir/name` and returns the tree path.
pub fn write(spec: &FixtureSpec, dir: &Path, name: &str) -> (PathBuf, FixtureManifest) {
    let out = dir.join(name);
    let manifest = generate_fixture(spec, &out).unwrap();
    (out, manifest)
}

pub fn scan(path: &Path, redact: bool) -> ScanOutcome {
    scan_path(path, &config(redact)).unwrap()
}

/// The bundled replica, generated into `dir` and scanned.
pub fn scan_replica(dir: &Path, redact: bool) -> (ScanOutcome, FixtureManifest) {
    let (out, manifest) = write(&replica_spec(), dir, "replica");
    (scan(&out, redact), manifest)
}

fn hex(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| char::from_digit(rng.gen_range(0..16), 16).unwrap()).collect()
}

fn mac(rng: &mut ChaCha8Rng) -> String {
    (0..6).map(|_| hex(rng, 2)).collect::<Vec<_>>().join(":")
}

fn epoch(rng: &mut ChaCha8Rng) -> i64 {
    let secs = rng.gen_range(1_300_000_000..1_700_000_000);
    if rng.gen_bool(0.5) {
        secs
    } else {
        secs * 1000 + rng.gen_range(0..1000)
    }
}

/// A randomized but valid spec; every app section is optional.
pub fn random_spec(seed: u64) -> FixtureSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let myvitals = rng.gen_bool(0.8).then(|| {
        let account = format!("user{}@example.org", rng.gen_range(1..1000));
        let spo2 = (0..rng.gen_range(0..3))
            .map(|_| {
                let t = rng.gen_range(1_400_000_000..1_600_000_000);
                Spo2Row {
                    used_user_id: rng.gen_range(0..3),
                    phone_data_id: hex(&mut rng, 16).to_uppercase(),
                    health_id: account.clone(),
                    machine_type: "PO3M".into(),
                    machine_device_id: hex(&mut rng, 12).to_uppercase(),
                    measure_time: t,
                    last_change_time: t + rng.gen_range(1..60),
                    phone_create_time: t,
                    result: rng.gen_range(90..=100),
                    pr: rng.gen_range(50..120),
                    pi: f64::from(rng.gen_range(10..150)) / 10.0,
                }
            })
            .collect();
        let credential = rng.gen_bool(0.7).then(|| CredentialSpec {
            account: account.clone(),
            password: rng.gen_bool(0.6).then(|| format!("Pw{}", hex(&mut rng, 8))),
            refresh_token: rng.gen_bool(0.5).then(|| hex(&mut rng, 40)),
            access_token: rng.gen_bool(0.5).then(|| hex(&mut rng, 40)),
            region_host: rng.gen_bool(0.5).then(|| "http://ap2.example".into()),
            is_online: rng.gen_bool(0.5).then(|| rng.gen_bool(0.5)),
            region_flag: rng.gen_bool(0.5).then(|| rng.gen_range(0..100)),
        });
        MyVitalsSpec {
            bp_rows: rng.gen_range(0..5),
            spo2_rows: rng.gen_range(0..5),
            weight_rows: rng.gen_range(0..5),
            env_rows: rng.gen_range(0..3),
            user_rows: rng.gen_range(0..3),
            invalid_spo2_rows: rng.gen_range(0..2),
            invalid_bp_rows: rng.gen_range(0..2),
            spo2,
            credential,
        }
    });
    let glucosmart = rng.gen_bool(0.7).then(|| GlucoSmartSpec {
        encrypted_db_count: rng.gen_range(0..3),
        encrypted_db_size: rng.gen_bool(0.5).then(|| rng.gen_range(4096..12000)),
        user_info: rng.gen_bool(0.7).then(|| GlucoUserInfo {
            username: format!("g{}@example.com", rng.gen_range(1..1000)),
            device_id: format!("BG5-{}", hex(&mut rng, 4).to_uppercase()),
        }),
    });
    let healthmate = rng.gen_bool(0.8).then(|| {
        let devices = (0..rng.gen_range(0..3))
            .map(|i| DeviceRow {
                id: 5_000_000 + i,
                association_date: epoch(&mut rng),
                last_use_date: epoch(&mut rng),
                modified_date: epoch(&mut rng),
                mac_address: mac(&mut rng),
                firmware: rng.gen_range(100..2000),
                timezone: rng.gen_bool(0.5).then(|| "Europe/Paris".into()),
                battery: rng.gen_range(0..=100),
                device_type: rng.gen_range(1..5),
                model: rng.gen_range(1..60),
            })
            .collect();
        HealthMateSpec {
            device_rows: rng.gen_range(0..3),
            measure_rows: rng.gen_range(0..8),
            user_rows: rng.gen_range(0..2),
            unmapped_measure_rows: rng.gen_range(0..2),
            devices,
        }
    });
    FixtureSpec {
        format_version: 1,
        seed,
        output_kind: if rng.gen_bool(0.5) { OutputKind::Directory } else { OutputKind::Zip },
        myvitals,
        glucosmart,
        healthmate,
    }
}

pub fn tree(spec: &FixtureSpec) -> ephiscan::fixture::FixtureTree {
    build_fixture(spec).unwrap()
}
