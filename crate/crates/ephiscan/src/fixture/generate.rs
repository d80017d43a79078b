//! Builds fixture trees and their manifests.
//!
//! Expected record fields and PHI categories are written out here from the
//! planted values themselves, without calling the scanner, so a scan can be
//! checked against them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::DateTime;
use ephiscan_core::ingest::digest_bytes;
use ephiscan_core::model::{ContainerKind, RecordKind, SourceLocator};
use ephiscan_core::parsers::glucosmart::StorageStatus;
use ephiscan_core::phi::{PhiCategory, ViolationKind};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::{params, Connection};

use super::manifest::{ExpectedApp, ExpectedStatus, FixtureManifest, PlantedRecord};
use super::spec::{CredentialSpec, FixtureSpec, InvalidSpec, OutputKind, Spo2Row, FORMAT_VERSION};

pub const MYVITALS_PACKAGE: &str = "iHealthMyVitals.V2";
pub const GLUCOSMART_PACKAGE: &str = "jiuana-androidBg.start";
pub const HEALTHMATE_PACKAGE: &str = "com.withings.wiscale2";

const MYVITALS_APP: &str = "iHealth MyVitals";
const GLUCOSMART_APP: &str = "Gluco-Smart";
const HEALTHMATE_APP: &str = "Health Mate";

const MYVITALS_DB: &str = "iHealthMyVitals.V2/Databases/androidNin.db";
const MYVITALS_XML: &str = "iHealthMyVitals.V2/shared_prefs/sp_user_region_host_info.xml";
const GLUCO_DB_DIR: &str = "jiuana-androidBg.start/databases";
const GLUCO_XML: &str = "jiuana-androidBg.start/shared_prefs/user_info.xml";
const HEALTHMATE_DB: &str = "com.withings.wiscale2/databases/withings-wiscale.db";

const MYVITALS_SCHEMA: &str = "
CREATE TABLE TB_BPResult (_id INTEGER PRIMARY KEY AUTOINCREMENT, Sys INTEGER, Dia INTEGER,
    Pulse INTEGER, MeasureTime INTEGER, DeviceID TEXT, Note TEXT, Account TEXT);
CREATE TABLE TB_SPO2Result (_id INTEGER PRIMARY KEY AUTOINCREMENT, UsedUserID INTEGER,
    PhoneDataID TEXT, iHealthID TEXT, MachineType TEXT, MachineDeviceID TEXT, MeasureTime INTEGER,
    LastChangeTime INTEGER, PhoneCreateTime INTEGER, Result INTEGER, PR INTEGER, PI REAL);
CREATE TABLE TB_WeightOnlineResult (_id INTEGER PRIMARY KEY AUTOINCREMENT, Weight REAL, BMI REAL,
    BodyFat REAL, BodyWater REAL, MuscleMass REAL, DailyCalorie REAL, BoneMass REAL,
    MeasureTime INTEGER, Account TEXT);
CREATE TABLE TB_TemperatureHumidity (_id INTEGER PRIMARY KEY AUTOINCREMENT, Humidity REAL,
    Temperature REAL, Lighting REAL, MeasureTime INTEGER);
CREATE TABLE TB_Userinfo (_id INTEGER PRIMARY KEY AUTOINCREMENT, Name TEXT, Birthday TEXT,
    TimeZone TEXT, Email TEXT);
";

const HEALTHMATE_SCHEMA: &str = "
CREATE TABLE devices (id INTEGER PRIMARY KEY, associationDate INTEGER, lastUseDate INTEGER,
    modifiedDate INTEGER, macAddress TEXT, firmware INTEGER, timezone TEXT, battery INTEGER,
    type INTEGER, model INTEGER);
CREATE TABLE measure (id INTEGER PRIMARY KEY, type INTEGER, value REAL, date INTEGER,
    deviceid INTEGER);
CREATE TABLE users (id INTEGER PRIMARY KEY, name TEXT, gender TEXT, birthday TEXT, email TEXT);
";

/// Health Mate type codes and the physiological ranges values are drawn from.
const MEASURE_CODES: [(i64, &str, f64, f64); 9] = [
    (1, "weight", 45.0, 120.0),
    (4, "systolic", 95.0, 160.0),
    (5, "diastolic", 60.0, 94.0),
    (6, "body-fat", 8.0, 40.0),
    (8, "body-water", 40.0, 65.0),
    (11, "pulse", 50.0, 110.0),
    (76, "muscle-mass", 20.0, 60.0),
    (88, "bone-mass", 2.0, 4.0),
    (170, "bmi", 17.0, 35.0),
];

const FIRST_NAMES: [&str; 8] = ["Alex", "Jordan", "Casey", "Riley", "Morgan", "Taylor", "Jamie", "Avery"];
const LAST_NAMES: [&str; 8] = ["Smith", "Garcia", "Nguyen", "Okafor", "Schmidt", "Rossi", "Kim", "Novak"];
const TIMEZONES: [&str; 4] = ["America/Chicago", "America/New_York", "Europe/London", "Asia/Tokyo"];
const BP_NOTES: [&str; 3] = ["after walk", "morning", "before dinner"];

// 2015-01-01 .. 2020-01-01
const SECONDS_START: i64 = 1_420_070_400;
const SECONDS_END: i64 = 1_577_836_800;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    InvalidSpec(#[from] InvalidSpec),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("building database: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("writing archive: {0}")]
    Zip(#[from] zip::result::ZipError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io { path: path.to_owned(), source }
}

/// A generated tree held in memory.
#[derive(Debug, Clone)]
pub struct FixtureTree {
    pub files: BTreeMap<String, Vec<u8>>,
    /// Directories that must exist even when empty.
    pub dirs: BTreeSet<String>,
    pub manifest: FixtureManifest,
}

/// Generates the tree for `spec` and writes it to `out` (a directory, or a zip
/// archive when the spec asks for one or `out` ends in `.zip`). The manifest is
/// written next to it as `<out>.manifest.json`.
pub fn generate_fixture(spec: &FixtureSpec, out: &Path) -> Result<FixtureManifest, FixtureError> {
    let tree = build_fixture(spec)?;
    let kind = if out.extension().is_some_and(|e| e == "zip") { OutputKind::Zip } else { spec.output_kind };
    match kind {
        OutputKind::Directory => write_directory(&tree, out)?,
        OutputKind::Zip => write_zip(&tree, out)?,
    }
    let manifest_path = manifest_path(out);
    fs::write(&manifest_path, tree.manifest.to_json()).map_err(io_err(&manifest_path))?;
    Ok(tree.manifest)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_directory(tree: &FixtureTree, out: &Path) -> Result<(), FixtureError> {
    if out.exists() && fs::read_dir(out).map_err(io_err(out))?.next().is_some() {
        return Err(FixtureError::Io {
            path: out.to_owned(),
            source: io::Error::new(io::ErrorKind::AlreadyExists, "output directory is not empty"),
        });
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    for dir in &tree.dirs {
        let p = out.join(dir);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    for (rel, bytes) in &tree.files {
        let p = out.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&p, bytes).map_err(io_err(&p))?;
    }
    Ok(())
}

/// Entries sorted, fixed timestamps and permissions, so equal trees give
/// equal archives.
pub fn write_zip(tree: &FixtureTree, out: &Path) -> Result<(), FixtureError> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(out).map_err(io_err(out))?;
    let mut zip = zip::ZipWriter::new(file);
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644);
    let mut dirs: BTreeSet<String> = tree.dirs.clone();
    for rel in tree.files.keys() {
        let mut parts: Vec<&str> = rel.split('/').collect();
        parts.pop();
        for i in 1..=parts.len() {
            dirs.insert(parts[..i].join("/"));
        }
    }
    for dir in &dirs {
        zip.add_directory(format!("{dir}/"), options.unix_permissions(0o755))?;
    }
    for (rel, bytes) in &tree.files {
        zip.start_file(rel.as_str(), options)?;
        zip.write_all(bytes).map_err(io_err(out))?;
    }
    zip.finish()?;
    Ok(())
}

fn utc(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .expect("fixture instants are in range")
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

/// UTC rendering of a stored epoch value: 13 digits are milliseconds.
fn utc_of_raw(raw: i64) -> String {
    if raw >= 1_000_000_000_000 {
        utc(raw.div_euclid(1000))
    } else {
        utc(raw)
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[derive(Default)]
struct Fields(BTreeMap<String, String>);

impl Fields {
    fn put(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.0.insert(name.to_owned(), value.to_string());
        self
    }
    fn instant(&mut self, name: &str, raw: i64) -> &mut Self {
        self.put(name, utc_of_raw(raw));
        self.put(&format!("{name}_raw"), raw)
    }
}

struct Planter {
    rng: ChaCha8Rng,
    records: Vec<PlantedRecord>,
    skipped: Vec<SourceLocator>,
}

impl Planter {
    fn plant(
        &mut self,
        app: &str,
        locator: SourceLocator,
        kind: RecordKind,
        fields: Fields,
        categories: &[PhiCategory],
    ) {
        self.records.push(PlantedRecord {
            app: app.to_owned(),
            locator,
            kind,
            fields: fields.0,
            categories: categories.iter().copied().collect(),
        });
    }

    fn email(&mut self) -> (String, String) {
        let first = *FIRST_NAMES.choose(&mut self.rng).unwrap_or(&"Alex");
        let last = *LAST_NAMES.choose(&mut self.rng).unwrap_or(&"Smith");
        let n: u32 = self.rng.gen_range(10..100);
        (
            format!("{first} {last}"),
            format!("{}.{}{n}@example.com", first.to_lowercase(), last.to_lowercase()),
        )
    }

    fn hex(&mut self, len: usize) -> String {
        (0..len).map(|_| char::from(b"0123456789ABCDEF"[self.rng.gen_range(0..16)])).collect()
    }

    fn birthday(&mut self) -> String {
        let y: i32 = self.rng.gen_range(1940..2006);
        let m: u32 = self.rng.gen_range(1..13);
        let d: u32 = self.rng.gen_range(1..29);
        format!("{y:04}-{m:02}-{d:02}")
    }

    fn value(&mut self, lo: f64, hi: f64) -> f64 {
        round1(self.rng.gen_range(lo..hi))
    }
}

fn sqlite_locator(package: &str, path: &str, table: &str, rowid: i64) -> SourceLocator {
    SourceLocator {
        package_name: package.to_owned(),
        relative_path: path.to_owned(),
        container: ContainerKind::SqliteTable,
        detail: format!("{table}:{rowid}"),
    }
}

fn xml_locator(package: &str, path: &str, key: &str) -> SourceLocator {
    SourceLocator {
        package_name: package.to_owned(),
        relative_path: path.to_owned(),
        container: ContainerKind::XmlFile,
        detail: key.to_owned(),
    }
}

/// Creates a database in a scratch file, lets `fill` populate it and returns
/// the file's bytes.
fn build_database(
    schema: &str,
    fill: impl FnOnce(&Connection) -> Result<(), FixtureError>,
) -> Result<Vec<u8>, FixtureError> {
    let dir = tempfile::tempdir().map_err(io_err(Path::new("tempdir")))?;
    let path = dir.path().join("fixture.db");
    {
        let conn = Connection::open(&path)?;
        conn.execute_batch(schema)?;
        fill(&conn)?;
        conn.close().map_err(|(_, e)| e)?;
    }
    fs::read(&path).map_err(io_err(&path))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn build_fixture(spec: &FixtureSpec) -> Result<FixtureTree, FixtureError> {
    spec.validate()?;
    validate_values(spec)?;
    let mut p = Planter { rng: ChaCha8Rng::seed_from_u64(spec.seed), records: Vec::new(), skipped: Vec::new() };
    let mut files = BTreeMap::new();
    let mut dirs = BTreeSet::new();
    let mut statuses = Vec::new();
    let mut apps = Vec::new();

    if let Some(mv) = &spec.myvitals {
        let (_, fallback_account) = p.email();
        let account = mv.credential.as_ref().map(|c| c.account.clone()).unwrap_or(fallback_account);
        let mut health = false;
        let db = build_database(MYVITALS_SCHEMA, |conn| {
            health = plant_myvitals(conn, &mut p, mv, &account)?;
            Ok(())
        })?;
        files.insert(MYVITALS_DB.to_owned(), db);
        statuses.push(ExpectedStatus {
            relative_path: MYVITALS_DB.to_owned(),
            status: StorageStatus::PlaintextSqlite,
            high_entropy: false,
        });
        let mut violations = Vec::new();
        if health {
            violations.push(ViolationKind::PlaintextEphiAtRest);
        }
        if let Some(cred) = &mv.credential {
            files.insert(MYVITALS_XML.to_owned(), credential_xml(cred).into_bytes());
            plant_credential(&mut p, cred);
            if cred.password.is_some() {
                violations.push(ViolationKind::PlaintextCredential);
            }
        }
        apps.push((MYVITALS_APP, violations, health));
    }

    if let Some(g) = &spec.glucosmart {
        dirs.insert(GLUCO_DB_DIR.to_owned());
        for i in 0..g.encrypted_db_count {
            let path = format!("{GLUCO_DB_DIR}/jiuana_bg{i}.db");
            let mut bytes = vec![0u8; g.db_size() as usize];
            p.rng.fill_bytes(&mut bytes);
            files.insert(path.clone(), bytes);
            statuses.push(ExpectedStatus {
                relative_path: path,
                status: StorageStatus::EncryptedOrOpaque,
                high_entropy: true,
            });
        }
        if let Some(info) = &g.user_info {
            let xml = format!(
                "<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n    \
                 <string name=\"UserName\">{}</string>\n    <string name=\"DeviceID\">{}</string>\n</map>\n",
                xml_escape(&info.username),
                xml_escape(&info.device_id)
            );
            files.insert(GLUCO_XML.to_owned(), xml.into_bytes());
            let mut f = Fields::default();
            f.put("username", &info.username).put("device_identifier", &info.device_id);
            p.plant(
                GLUCOSMART_APP,
                xml_locator(GLUCOSMART_PACKAGE, GLUCO_XML, "UserName"),
                RecordKind::UserProfile,
                f,
                &[PhiCategory::Name],
            );
        }
        if g.encrypted_db_count > 0 || g.user_info.is_some() {
            apps.push((GLUCOSMART_APP, Vec::new(), false));
        }
    }

    if let Some(h) = &spec.healthmate {
        let mut health = false;
        let db = build_database(HEALTHMATE_SCHEMA, |conn| {
            health = plant_healthmate(conn, &mut p, h)?;
            Ok(())
        })?;
        files.insert(HEALTHMATE_DB.to_owned(), db);
        statuses.push(ExpectedStatus {
            relative_path: HEALTHMATE_DB.to_owned(),
            status: StorageStatus::PlaintextSqlite,
            high_entropy: false,
        });
        apps.push((HEALTHMATE_APP, if health { vec![ViolationKind::PlaintextEphiAtRest] } else { Vec::new() }, health));
    }

    let mut expected_apps = Vec::new();
    for (app, mut violations, health) in apps {
        let categories: BTreeSet<PhiCategory> = p
            .records
            .iter()
            .filter(|r| r.app == app)
            .flat_map(|r| r.categories.iter().copied())
            .collect();
        if !health && !categories.is_empty() {
            violations.push(ViolationKind::WeakSafeguardNote);
        }
        violations.sort();
        expected_apps.push(ExpectedApp { app_name: app.to_owned(), categories, violations });
    }
    expected_apps.sort_by(|a, b| a.app_name.cmp(&b.app_name));

    p.records.sort();
    p.skipped.sort();
    statuses.sort();
    let manifest = FixtureManifest {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        files: files.iter().map(|(path, bytes)| digest_bytes(path, bytes)).collect(),
        records: p.records,
        skipped: p.skipped,
        database_statuses: statuses,
        apps: expected_apps,
    };
    Ok(FixtureTree { files, dirs, manifest })
}

/// Explicit rows must satisfy the same invariants synthetic ones do.
fn validate_values(spec: &FixtureSpec) -> Result<(), InvalidSpec> {
    let bad = |message: String| InvalidSpec { line: None, message };
    let epoch_ok = |v: i64| v > 0 && (v < 100_000_000_000 || (1_000_000_000_000..253_402_300_800_000).contains(&v));
    if let Some(mv) = &spec.myvitals {
        for (i, r) in mv.spo2.iter().enumerate() {
            let Spo2Row { result, pr, pi, measure_time, last_change_time, phone_create_time, .. } = r;
            if !(1..=100).contains(result) || *pr <= 0 || !(*pi >= 0.0 && pi.is_finite()) {
                return Err(bad(format!("myvitals.spo2[{i}]: Result, PR or PI out of range")));
            }
            if ![*measure_time, *last_change_time, *phone_create_time].into_iter().all(epoch_ok) {
                return Err(bad(format!("myvitals.spo2[{i}]: timestamp outside the seconds/milliseconds bands")));
            }
        }
        if let Some(c) = &mv.credential {
            let email_like = c.account.contains('@') && c.account.rsplit('@').next().is_some_and(|d| d.contains('.'));
            if !email_like {
                return Err(bad("myvitals.credential.account must be an email address".to_owned()));
            }
            if c.region_flag.is_some_and(|f| !(0..100).contains(&f)) {
                return Err(bad("myvitals.credential.region_flag must be in 0..100".to_owned()));
            }
        }
    }
    if let Some(h) = &spec.healthmate {
        for (i, d) in h.devices.iter().enumerate() {
            let mac_ok = d.mac_address.len() == 17
                && d.mac_address.split(':').all(|g| g.len() == 2 && g.bytes().all(|b| b.is_ascii_hexdigit()));
            if !mac_ok || !(0..=100).contains(&d.battery) {
                return Err(bad(format!("healthmate.devices[{i}]: macAddress or battery invalid")));
            }
            if ![d.association_date, d.last_use_date, d.modified_date].into_iter().all(epoch_ok) {
                return Err(bad(format!("healthmate.devices[{i}]: timestamp outside the seconds/milliseconds bands")));
            }
        }
    }
    Ok(())
}

/// Returns whether any health reading was planted.
fn plant_myvitals(
    conn: &Connection,
    p: &mut Planter,
    mv: &super::spec::MyVitalsSpec,
    account: &str,
) -> Result<bool, FixtureError> {
    let pkg = MYVITALS_PACKAGE;
    let mut health = false;
    let mut t = p.rng.gen_range(SECONDS_START..SECONDS_END);
    let mut next_time = |rng: &mut ChaCha8Rng| {
        t += rng.gen_range(600..86_400);
        t
    };

    let bp_device = p.hex(12);
    for i in 0..(mv.bp_rows + mv.invalid_bp_rows) {
        let invalid = i >= mv.bp_rows;
        let sys: i64 = p.rng.gen_range(95..=160);
        let dia: i64 = if invalid { p.rng.gen_range(sys..=sys + 20) } else { p.rng.gen_range(60..=(sys - 10).min(100)) };
        let pulse: i64 = p.rng.gen_range(50..=110);
        let at = next_time(&mut p.rng);
        let note = if p.rng.gen_bool(0.5) { Some(*BP_NOTES.choose(&mut p.rng).unwrap_or(&"morning")) } else { None };
        conn.execute(
            "INSERT INTO TB_BPResult (Sys, Dia, Pulse, MeasureTime, DeviceID, Note, Account) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![sys, dia, pulse, at, bp_device, note, account],
        )?;
        let loc = sqlite_locator(pkg, MYVITALS_DB, "TB_BPResult", conn.last_insert_rowid());
        if invalid {
            p.skipped.push(loc);
            continue;
        }
        health = true;
        let mut f = Fields::default();
        f.put("systolic", sys).put("diastolic", dia).put("pulse", pulse).instant("measured_at", at);
        f.put("device_id", &bp_device).put("account", account);
        if let Some(n) = note {
            f.put("note", n);
        }
        p.plant(MYVITALS_APP, loc, RecordKind::BloodPressure, f, &[PhiCategory::HealthCondition, PhiCategory::ProvisionOfHealthcare]);
    }

    let spo2_device = p.hex(12);
    let mut rows: Vec<(Spo2Row, bool)> = Vec::new();
    for i in 0..(mv.spo2_rows + mv.invalid_spo2_rows) {
        let invalid = i >= mv.spo2_rows;
        let at = next_time(&mut p.rng);
        let result = if invalid {
            *[0i64, 101, 105, 120].choose(&mut p.rng).unwrap_or(&0)
        } else {
            p.rng.gen_range(90..=100)
        };
        let pi = p.rng.gen_range(0.2f32..20.0) as f64;
        rows.push((
            Spo2Row {
                used_user_id: 0,
                phone_data_id: format!("{spo2_device}{at}{}", p.rng.gen_range(0..10)),
                health_id: account.to_owned(),
                machine_type: "PO3M".to_owned(),
                machine_device_id: spo2_device.clone(),
                measure_time: at,
                last_change_time: at + p.rng.gen_range(5..60),
                phone_create_time: at,
                result,
                pr: p.rng.gen_range(50..=110),
                pi,
            },
            invalid,
        ));
    }
    rows.extend(mv.spo2.iter().cloned().map(|r| (r, false)));
    for (r, invalid) in rows {
        let pi = r.pi as f32 as f64;
        conn.execute(
            "INSERT INTO TB_SPO2Result (UsedUserID, PhoneDataID, iHealthID, MachineType, MachineDeviceID, MeasureTime, \
             LastChangeTime, PhoneCreateTime, Result, PR, PI) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11)",
            params![
                r.used_user_id,
                r.phone_data_id,
                r.health_id,
                r.machine_type,
                r.machine_device_id,
                r.measure_time,
                r.last_change_time,
                r.phone_create_time,
                r.result,
                r.pr,
                pi
            ],
        )?;
        let loc = sqlite_locator(pkg, MYVITALS_DB, "TB_SPO2Result", conn.last_insert_rowid());
        if invalid {
            p.skipped.push(loc);
            continue;
        }
        health = true;
        let mut f = Fields::default();
        f.put("result_spo2", r.result).put("pulse_rate", r.pr).put("perfusion_index", pi);
        f.instant("measured_at", r.measure_time)
            .instant("last_change_at", r.last_change_time)
            .instant("phone_created_at", r.phone_create_time);
        f.put("health_id", &r.health_id)
            .put("machine_type", &r.machine_type)
            .put("machine_device_id", &r.machine_device_id)
            .put("used_user_id", r.used_user_id)
            .put("phone_data_id", &r.phone_data_id);
        p.plant(MYVITALS_APP, loc, RecordKind::Oximetry, f, &[PhiCategory::HealthCondition, PhiCategory::ProvisionOfHealthcare]);
    }

    for _ in 0..mv.weight_rows {
        let at = next_time(&mut p.rng);
        let w = [
            p.value(45.0, 120.0),
            p.value(17.0, 35.0),
            p.value(8.0, 40.0),
            p.value(40.0, 65.0),
            p.value(20.0, 60.0),
            p.rng.gen_range(1400..3000) as f64,
            p.value(2.0, 4.0),
        ];
        conn.execute(
            "INSERT INTO TB_WeightOnlineResult (Weight, BMI, BodyFat, BodyWater, MuscleMass, DailyCalorie, BoneMass, \
             MeasureTime, Account) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
            params![w[0], w[1], w[2], w[3], w[4], w[5], w[6], at, account],
        )?;
        let loc = sqlite_locator(pkg, MYVITALS_DB, "TB_WeightOnlineResult", conn.last_insert_rowid());
        health = true;
        let mut f = Fields::default();
        for (name, v) in ["weight", "bmi", "body_fat_pct", "body_water_pct", "muscle_mass", "daily_calorie_intake", "bone_mass"]
            .into_iter()
            .zip(w)
        {
            f.put(name, v);
        }
        f.instant("measured_at", at).put("account", account);
        p.plant(MYVITALS_APP, loc, RecordKind::Weight, f, &[PhiCategory::HealthCondition, PhiCategory::ProvisionOfHealthcare]);
    }

    for _ in 0..mv.env_rows {
        let at = next_time(&mut p.rng);
        let (h, t, l) = (p.value(20.0, 80.0), p.value(15.0, 30.0), p.rng.gen_range(0..1000) as f64);
        conn.execute(
            "INSERT INTO TB_TemperatureHumidity (Humidity, Temperature, Lighting, MeasureTime) VALUES (?1, ?2, ?3, ?4)",
            params![h, t, l, at],
        )?;
        let loc = sqlite_locator(pkg, MYVITALS_DB, "TB_TemperatureHumidity", conn.last_insert_rowid());
        let mut f = Fields::default();
        f.put("humidity", h).put("temperature", t).put("lighting_level", l).instant("measured_at", at);
        p.plant(MYVITALS_APP, loc, RecordKind::Environment, f, &[PhiCategory::ProvisionOfHealthcare]);
    }

    for i in 0..mv.user_rows {
        let (name, email) = p.email();
        let email = if i == 0 { account.to_owned() } else { email };
        let birthday = p.birthday();
        let tz = *TIMEZONES.choose(&mut p.rng).unwrap_or(&"America/Chicago");
        conn.execute(
            "INSERT INTO TB_Userinfo (Name, Birthday, TimeZone, Email) VALUES (?1, ?2, ?3, ?4)",
            params![name, birthday, tz, email],
        )?;
        let loc = sqlite_locator(pkg, MYVITALS_DB, "TB_Userinfo", conn.last_insert_rowid());
        let mut f = Fields::default();
        f.put("name", &name).put("date_of_birth", &birthday).put("timezone_location", tz).put("email", &email);
        p.plant(
            MYVITALS_APP,
            loc,
            RecordKind::UserProfile,
            f,
            &[PhiCategory::Name, PhiCategory::Address, PhiCategory::DateOfBirth],
        );
    }
    Ok(health)
}

/// Keys in the order the app writes them.
fn credential_entries(c: &CredentialSpec) -> Vec<(String, String)> {
    let a = &c.account;
    let mut out = Vec::new();
    if let Some(v) = c.is_online {
        out.push((format!("{a}_user_is_online"), format!("<boolean name=\"{}_user_is_online\" value=\"{v}\" />", xml_escape(a))));
    }
    let strings = [
        ("_user_refresh_token", &c.refresh_token),
        ("_user_access_token", &c.access_token),
        ("_user_password", &c.password),
        ("_user_region_host_info", &c.region_host),
    ];
    for (suffix, value) in strings {
        if let Some(v) = value {
            out.push((
                format!("{a}{suffix}"),
                format!("<string name=\"{}{suffix}\">{}</string>", xml_escape(a), xml_escape(v)),
            ));
        }
    }
    if let Some(v) = c.region_flag {
        out.push((format!("{a}_user_region_flag"), format!("<int name=\"{}_user_region_flag\" value=\"{v}\" />", xml_escape(a))));
    }
    out
}

fn credential_xml(c: &CredentialSpec) -> String {
    let mut xml = String::from("<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n");
    for (_, element) in credential_entries(c) {
        xml.push_str("    ");
        xml.push_str(&element);
        xml.push('\n');
    }
    xml.push_str("</map>\n");
    xml
}

fn plant_credential(p: &mut Planter, c: &CredentialSpec) {
    let recognized: Vec<String> = credential_entries(c)
        .into_iter()
        .map(|(k, _)| k)
        .filter(|k| !k.ends_with("_user_region_flag"))
        .collect();
    let anchor = if c.password.is_some() { format!("{}_user_password", c.account) } else {
        match recognized.first() {
            Some(k) => k.clone(),
            None => return plant_unclaimed_account(p, c),
        }
    };
    let mut f = Fields::default();
    f.put("account", &c.account);
    for (name, value) in [
        ("password_plaintext", &c.password),
        ("refresh_token", &c.refresh_token),
        ("access_token", &c.access_token),
        ("region_host", &c.region_host),
    ] {
        if let Some(v) = value {
            f.put(name, v.trim());
        }
    }
    if let Some(v) = c.is_online {
        f.put("is_online_flag", v);
    }
    p.plant(MYVITALS_APP, xml_locator(MYVITALS_PACKAGE, MYVITALS_XML, &anchor), RecordKind::Credential, f, &[]);
}

/// Without any credential key the parser leaves the file to the raw sweep,
/// which finds the account address inside the first key name.
fn plant_unclaimed_account(p: &mut Planter, c: &CredentialSpec) {
    let xml = credential_xml(c);
    let Some(offset) = xml.find(&xml_escape(&c.account)) else {
        return;
    };
    let mut f = Fields::default();
    f.put("pattern", "email");
    f.put("text", &c.account);
    let locator = SourceLocator {
        package_name: MYVITALS_PACKAGE.to_owned(),
        relative_path: MYVITALS_XML.to_owned(),
        container: ContainerKind::RawBytes,
        detail: format!("@{offset}"),
    };
    p.plant(MYVITALS_APP, locator, RecordKind::RawHit, f, &[]);
}

/// Returns whether any health reading was planted.
fn plant_healthmate(conn: &Connection, p: &mut Planter, h: &super::spec::HealthMateSpec) -> Result<bool, FixtureError> {
    let pkg = HEALTHMATE_PACKAGE;
    let mut devices = h.devices.clone();
    let mut used: BTreeSet<i64> = devices.iter().map(|d| d.id).collect();
    let mut synthetic = Vec::new();
    for _ in 0..h.device_rows {
        let mut id = p.rng.gen_range(1_000_000..10_000_000);
        while !used.insert(id) {
            id = p.rng.gen_range(1_000_000..10_000_000);
        }
        let assoc: i64 = p.rng.gen_range(SECONDS_START..SECONDS_END) * 1000;
        let last_use = assoc + p.rng.gen_range(86_400_000..30 * 86_400_000);
        let modified = assoc + p.rng.gen_range(0..=(last_use - assoc));
        let mac = format!(
            "00:24:e4:{:02x}:{:02x}:{:02x}",
            p.rng.gen::<u8>(),
            p.rng.gen::<u8>(),
            p.rng.gen::<u8>()
        );
        let timezone = if p.rng.gen_bool(0.5) { Some(TIMEZONES.choose(&mut p.rng).unwrap_or(&"Asia/Tokyo").to_string()) } else { None };
        synthetic.push(super::spec::DeviceRow {
            id,
            association_date: assoc,
            last_use_date: last_use,
            modified_date: modified,
            mac_address: mac,
            firmware: p.rng.gen_range(100..2000),
            timezone,
            battery: p.rng.gen_range(0..=100),
            device_type: p.rng.gen_range(1..=4),
            model: p.rng.gen_range(1..=100),
        });
    }
    synthetic.append(&mut devices);
    for d in &synthetic {
        conn.execute(
            "INSERT INTO devices (id, associationDate, lastUseDate, modifiedDate, macAddress, firmware, timezone, battery, type, model) \
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)",
            params![
                d.id,
                d.association_date,
                d.last_use_date,
                d.modified_date,
                d.mac_address,
                d.firmware,
                d.timezone,
                d.battery,
                d.device_type,
                d.model
            ],
        )?;
        let loc = sqlite_locator(pkg, HEALTHMATE_DB, "devices", conn.last_insert_rowid());
        let mut f = Fields::default();
        f.put("id", d.id)
            .instant("association_date", d.association_date)
            .instant("last_use_date", d.last_use_date)
            .instant("modified_date", d.modified_date)
            .put("mac_address", d.mac_address.to_lowercase())
            .put("firmware", d.firmware)
            .put("battery_pct", d.battery)
            .put("device_type", d.device_type)
            .put("device_model", d.model);
        if let Some(tz) = &d.timezone {
            f.put("timezone", tz);
        }
        p.plant(HEALTHMATE_APP, loc, RecordKind::DeviceRegistration, f, &[PhiCategory::ProvisionOfHealthcare]);
    }

    let device_ids: Vec<i64> = synthetic.iter().map(|d| d.id).collect();
    let mut date: i64 = p.rng.gen_range(SECONDS_START..SECONDS_END) * 1000 + p.rng.gen_range(0..1000);
    let mut health = false;
    for i in 0..(h.measure_rows + h.unmapped_measure_rows) {
        date += p.rng.gen_range(60_000..86_400_000);
        let device_ref = if !device_ids.is_empty() && p.rng.gen_bool(0.7) { device_ids.choose(&mut p.rng).copied() } else { None };
        let (code, name, value) = if i < h.measure_rows {
            let (code, name, lo, hi) = MEASURE_CODES[p.rng.gen_range(0..MEASURE_CODES.len())];
            (code, Some(name), p.value(lo, hi))
        } else {
            (p.rng.gen_range(900..1000), None, p.value(1.0, 100.0))
        };
        conn.execute(
            "INSERT INTO measure (type, value, date, deviceid) VALUES (?1, ?2, ?3, ?4)",
            params![code, value, date, device_ref],
        )?;
        let loc = sqlite_locator(pkg, HEALTHMATE_DB, "measure", conn.last_insert_rowid());
        let mut f = Fields::default();
        match name {
            Some(name) => {
                health = true;
                f.put("measurement", name).put("value", value).instant("measured_at", date);
                if let Some(d) = device_ref {
                    f.put("device_ref", d);
                }
                let kind = match name {
                    "systolic" | "diastolic" | "pulse" => RecordKind::BloodPressure,
                    _ => RecordKind::Weight,
                };
                p.plant(HEALTHMATE_APP, loc, kind, f, &[PhiCategory::HealthCondition, PhiCategory::ProvisionOfHealthcare]);
            }
            None => {
                f.put("pattern", "unmapped-measure-code")
                    .put("text", format!("type {code} value {value}"))
                    .put("measure_code", code)
                    .instant("measured_at", date);
                p.plant(HEALTHMATE_APP, loc, RecordKind::RawHit, f, &[]);
            }
        }
    }

    for _ in 0..h.user_rows {
        let (name, email) = p.email();
        let birthday = p.birthday();
        let gender = if p.rng.gen_bool(0.5) { "female" } else { "male" };
        conn.execute(
            "INSERT INTO users (name, gender, birthday, email) VALUES (?1, ?2, ?3, ?4)",
            params![name, gender, birthday, email],
        )?;
        let loc = sqlite_locator(pkg, HEALTHMATE_DB, "users", conn.last_insert_rowid());
        let mut f = Fields::default();
        f.put("name", &name).put("gender", gender).put("birthday", &birthday).put("email", &email);
        p.plant(HEALTHMATE_APP, loc, RecordKind::UserProfile, f, &[PhiCategory::Name, PhiCategory::DateOfBirth]);
    }
    Ok(health)
}
