//! The hand-written reader against rusqlite on the same files.

use ephiscan_core::sqlite::{Database, SqliteError, Value};
use proptest::prelude::*;
use rusqlite::types::ValueRef;
use rusqlite::Connection;

fn build(setup: impl FnOnce(&Connection)) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.db");
    {
        let conn = Connection::open(&path).unwrap();
        conn.pragma_update(None, "journal_mode", "DELETE").unwrap();
        setup(&conn);
    }
    std::fs::read(path).unwrap()
}

fn oracle_rows(bytes: &[u8], sql: &str) -> Vec<Vec<Value>> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.db");
    std::fs::write(&path, bytes).unwrap();
    let conn = Connection::open(&path).unwrap();
    let mut stmt = conn.prepare(sql).unwrap();
    let n = stmt.column_count();
    let rows = stmt
        .query_map([], |r| {
            Ok((0..n)
                .map(|i| match r.get_ref(i).unwrap() {
                    ValueRef::Null => Value::Null,
                    ValueRef::Integer(v) => Value::Integer(v),
                    ValueRef::Real(v) => Value::Real(v),
                    ValueRef::Text(t) => Value::Text(String::from_utf8(t.to_vec()).unwrap()),
                    ValueRef::Blob(b) => Value::Blob(b.to_vec()),
                })
                .collect())
        })
        .unwrap();
    rows.map(Result::unwrap).collect()
}

fn ours(bytes: &[u8], table: &str) -> Vec<Vec<Value>> {
    let db = Database::open(bytes).unwrap();
    let schema = db.table(table).unwrap().clone();
    db.rows(&schema).unwrap().into_iter().map(|r| r.values).collect()
}

#[derive(Debug, Clone)]
enum Cell {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl rusqlite::ToSql for Cell {
    fn to_sql(&self) -> rusqlite::Result<rusqlite::types::ToSqlOutput<'_>> {
        Ok(match self {
            Cell::Null => rusqlite::types::Null.to_sql()?,
            Cell::Int(v) => v.to_sql()?,
            Cell::Real(v) => v.to_sql()?,
            Cell::Text(v) => v.to_sql()?,
            Cell::Blob(v) => v.to_sql()?,
        })
    }
}

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![
        Just(Cell::Null),
        any::<i64>().prop_map(Cell::Int),
        prop_oneof![Just(0i64), Just(1), -200i64..200].prop_map(Cell::Int),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(Cell::Real),
        ".{0,40}".prop_map(Cell::Text),
        // Long enough to spill onto overflow pages.
        (1000usize..6000).prop_map(|n| Cell::Text("x".repeat(n))),
        proptest::collection::vec(any::<u8>(), 0..3000).prop_map(Cell::Blob),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rows_match_rusqlite(
        rows in proptest::collection::vec(proptest::collection::vec(cell(), 3), 0..60),
        page_size in prop_oneof![Just(512u32), Just(1024), Just(4096), Just(65536)],
    ) {
        let bytes = build(|c| {
            c.pragma_update(None, "page_size", page_size).unwrap();
            c.execute_batch("CREATE TABLE t (id INTEGER PRIMARY KEY, a, b TEXT, c BLOB)").unwrap();
            for r in &rows {
                c.execute("INSERT INTO t (a, b, c) VALUES (?1, ?2, ?3)", rusqlite::params![r[0], r[1], r[2]]).unwrap();
            }
        });
        prop_assert_eq!(ours(&bytes, "t"), oracle_rows(&bytes, "SELECT id, a, b, c FROM t ORDER BY rowid"));
    }
}

#[test]
fn deleted_rows_and_vacuum() {
    let setup = |vacuum: bool| {
        build(move |c| {
            c.execute_batch("CREATE TABLE t (id INTEGER PRIMARY KEY, v TEXT)").unwrap();
            for i in 0..2000 {
                c.execute("INSERT INTO t (v) VALUES (?1)", [format!("value {i} {}", "y".repeat(i % 300))]).unwrap();
            }
            c.execute("DELETE FROM t WHERE id % 3 = 0", []).unwrap();
            if vacuum {
                c.execute_batch("VACUUM").unwrap();
            }
        })
    };
    for vacuum in [false, true] {
        let bytes = setup(vacuum);
        assert_eq!(ours(&bytes, "t"), oracle_rows(&bytes, "SELECT id, v FROM t ORDER BY rowid"));
    }
}

#[test]
fn added_columns_and_case_insensitive_names() {
    let bytes = build(|c| {
        c.execute_batch(
            "CREATE TABLE \"Mixed_Case\" (Sys INTEGER, Dia INTEGER);
             INSERT INTO Mixed_Case VALUES (120, 80);
             ALTER TABLE Mixed_Case ADD COLUMN Note TEXT;
             INSERT INTO Mixed_Case VALUES (130, 85, 'later');",
        )
        .unwrap();
    });
    let db = Database::open(&bytes).unwrap();
    let t = db.table("mixed_case").unwrap();
    assert_eq!(t.column_index("NOTE"), Some(2));
    assert_eq!(ours(&bytes, "MIXED_CASE"), oracle_rows(&bytes, "SELECT Sys, Dia, Note FROM Mixed_Case ORDER BY rowid"));
}

#[test]
fn utf16_databases() {
    for enc in ["UTF-16le", "UTF-16be"] {
        let bytes = build(|c| {
            c.pragma_update(None, "encoding", enc).unwrap();
            c.execute_batch("CREATE TABLE t (s TEXT); INSERT INTO t VALUES ('Müller ✓'), ('plain');").unwrap();
        });
        assert_eq!(ours(&bytes, "t"), oracle_rows(&bytes, "SELECT s FROM t ORDER BY rowid"));
    }
}

#[test]
fn without_rowid_is_reported_not_misread() {
    let bytes = build(|c| {
        c.execute_batch("CREATE TABLE k (a TEXT PRIMARY KEY, b) WITHOUT ROWID; INSERT INTO k VALUES ('x', 1);")
            .unwrap();
    });
    let db = Database::open(&bytes).unwrap();
    let t = db.table("k").unwrap().clone();
    assert!(matches!(db.rows(&t), Err(SqliteError::Unsupported(_))));
}

#[test]
fn rejects_non_sqlite_and_truncated_input() {
    assert!(matches!(Database::open(&[0x8a; 8192]), Err(SqliteError::NotSqlite)));
    let bytes = build(|c| {
        c.execute_batch("CREATE TABLE t (v); INSERT INTO t VALUES (1);").unwrap();
    });
    assert!(Database::open(&bytes[..60]).is_err());
    // Cut mid-file: either an error or fewer rows, never a panic.
    let cut = &bytes[..bytes.len() / 2 + 1];
    if let Ok(db) = Database::open(cut) {
        if let Some(t) = db.table("t").cloned() {
            let _ = db.rows(&t);
        }
    }
}
