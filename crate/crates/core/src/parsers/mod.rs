//! Per-application artifact parsers and the plumbing they share.

pub mod codemap;
pub mod glucosmart;
pub mod healthmate;
pub mod myvitals;

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::{AppDataRoot, Evidence};
use crate::model::{normalize_timestamp, ArtifactRecord, ContainerKind, EpochInstant, Payload, SourceLocator};
use crate::prefs::MalformedXml;
use crate::sqlite::{Database, Row, SqliteError, TableSchema, Value};
use crate::time::UtcInstant;

use self::codemap::MeasureCodeMap;

/// Inputs every parser needs besides the bytes themselves.
#[derive(Debug, Clone)]
pub struct ParseContext<'a> {
    pub package_name: &'a str,
    pub relative_path: &'a str,
    pub recovered_at: UtcInstant,
}

impl ParseContext<'_> {
    pub fn locator(&self, container: ContainerKind, detail: String) -> SourceLocator {
        SourceLocator {
            package_name: self.package_name.to_owned(),
            relative_path: self.relative_path.to_owned(),
            container,
            detail,
        }
    }

    pub fn record(&self, payload: Payload, locator: SourceLocator) -> ArtifactRecord {
        ArtifactRecord::new(payload, locator, self.recovered_at)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// Header magic absent: the file is likely encrypted.
    NotSqlite,
    Corrupt(SqliteError),
    MissingTable(&'static str),
    MissingColumn { table: &'static str, column: &'static str },
    MalformedXml(String),
}

impl From<SqliteError> for ParseError {
    fn from(e: SqliteError) -> Self {
        match e {
            SqliteError::NotSqlite => ParseError::NotSqlite,
            other => ParseError::Corrupt(other),
        }
    }
}

impl From<MalformedXml> for ParseError {
    fn from(e: MalformedXml) -> Self {
        ParseError::MalformedXml(e.0)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::NotSqlite => f.write_str("not a SQLite database (header magic absent, possibly encrypted)"),
            ParseError::Corrupt(e) => write!(f, "{e}"),
            ParseError::MissingTable(t) => write!(f, "table {t} not present"),
            ParseError::MissingColumn { table, column } => write!(f, "table {table} has no column {column}"),
            ParseError::MalformedXml(msg) => write!(f, "malformed XML: {msg}"),
        }
    }
}

/// A row that was read but not turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedRow {
    pub locator: SourceLocator,
    pub reason: String,
}

/// Records from one table plus the rows that were skipped as malformed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableParse {
    pub records: Vec<ArtifactRecord>,
    pub skipped: Vec<SkippedRow>,
}

/// Preference entries a structured parser did not consume; the PHI engine
/// sweeps their values for raw patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Leftover {
    pub locator: SourceLocator,
    pub text: String,
}

/// Everything one parser recovered from one application root.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AppParse {
    pub records: Vec<ArtifactRecord>,
    pub skipped: Vec<SkippedRow>,
    pub warnings: Vec<String>,
    /// Files fully handled by the parser; excluded from the raw sweep.
    pub claimed: BTreeSet<String>,
    pub leftovers: Vec<Leftover>,
}

impl AppParse {
    pub fn absorb(&mut self, table: TableParse) {
        self.records.extend(table.records);
        self.skipped.extend(table.skipped);
    }

    /// Merges a table parse, turning a table-level failure into a warning.
    pub fn absorb_result(&mut self, path: &str, result: Result<TableParse, ParseError>) {
        match result {
            Ok(t) => self.absorb(t),
            Err(e) => self.warnings.push(format!("{path}: {e}")),
        }
    }
}

pub struct ParserOptions<'a> {
    pub recovered_at: UtcInstant,
    pub code_map: &'a MeasureCodeMap,
}

/// An application-specific artifact parser.
pub trait AppParser: Sync {
    /// Stable identifier, e.g. `ihealth-myvitals`.
    fn id(&self) -> &'static str;
    /// Application name as shown in reports.
    fn app_name(&self) -> &'static str;
    /// The folder (and artifact) this parser recognizes.
    fn signature(&self) -> &'static str;
    fn detect(&self, root: &AppDataRoot, evidence: &dyn Evidence) -> bool;
    fn parse(&self, root: &AppDataRoot, evidence: &dyn Evidence, options: &ParserOptions<'_>) -> AppParse;
}

pub static BUILTIN_PARSERS: [&dyn AppParser; 3] = [
    &myvitals::MyVitalsParser,
    &glucosmart::GlucoSmartParser,
    &healthmate::HealthMateParser,
];

pub fn builtin_parsers() -> &'static [&'static dyn AppParser] {
    &BUILTIN_PARSERS
}

pub fn parser_by_id(id: &str) -> Option<&'static dyn AppParser> {
    BUILTIN_PARSERS.iter().copied().find(|p| p.id() == id)
}

/// First file beneath `dir` whose final path segment is `file_name`.
pub(crate) fn find_file<'e>(evidence: &'e dyn Evidence, dir: &str, file_name: &str) -> Option<&'e str> {
    evidence
        .files_under(dir)
        .into_iter()
        .find(|p| p.rsplit('/').next() == Some(file_name))
}

/// Resolved column positions for one table.
pub(crate) struct BoundTable<'s> {
    pub table: &'static str,
    pub schema: &'s TableSchema,
    pub columns: Vec<usize>,
}

pub(crate) fn bind_table<'s>(
    db: &'s Database<'_>,
    table: &'static str,
    columns: &[&'static str],
) -> Result<BoundTable<'s>, ParseError> {
    let schema = db.table(table).ok_or(ParseError::MissingTable(table))?;
    let columns = columns
        .iter()
        .map(|c| schema.column_index(c).ok_or(ParseError::MissingColumn { table, column: c }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundTable { table, schema, columns })
}

/// Row accessors that explain why a value is unusable.
pub(crate) struct RowView<'r> {
    row: &'r Row,
    columns: &'r [usize],
    names: &'r [&'static str],
}

impl<'r> RowView<'r> {
    pub fn new(row: &'r Row, columns: &'r [usize], names: &'r [&'static str]) -> Self {
        RowView { row, columns, names }
    }

    fn value(&self, i: usize) -> &Value {
        &self.row.values[self.columns[i]]
    }

    pub fn int(&self, i: usize) -> Result<i64, String> {
        match self.value(i) {
            Value::Integer(v) => Ok(*v),
            Value::Null => Err(format!("{} is NULL", self.names[i])),
            Value::Real(r) if libm::trunc(*r) == *r && libm::fabs(*r) < 9.0e15 => Ok(*r as i64),
            _ => Err(format!("{} is not an integer", self.names[i])),
        }
    }

    pub fn real(&self, i: usize) -> Result<f64, String> {
        match self.value(i) {
            Value::Real(v) if v.is_finite() => Ok(*v),
            Value::Integer(v) => Ok(*v as f64),
            Value::Null => Err(format!("{} is NULL", self.names[i])),
            _ => Err(format!("{} is not numeric", self.names[i])),
        }
    }

    pub fn opt_text(&self, i: usize) -> Result<Option<String>, String> {
        match self.value(i) {
            Value::Null => Ok(None),
            Value::Text(s) => Ok(Some(s.clone())),
            Value::Integer(v) => Ok(Some(v.to_string())),
            _ => Err(format!("{} is not text", self.names[i])),
        }
    }

    pub fn text(&self, i: usize) -> Result<String, String> {
        self.opt_text(i)?.ok_or_else(|| format!("{} is NULL", self.names[i]))
    }

    pub fn instant(&self, i: usize) -> Result<EpochInstant, String> {
        let raw = self.int(i)?;
        normalize_timestamp(raw).map_err(|e| format!("{}: {e}", self.names[i]))
    }
}

/// Reads every row of `table`, handing each to `build`. Rows for which `build`
/// fails are tallied as skipped, never fatal.
pub(crate) fn parse_rows<F>(
    db: &Database<'_>,
    ctx: &ParseContext<'_>,
    table: &'static str,
    names: &'static [&'static str],
    mut build: F,
) -> Result<TableParse, ParseError>
where
    F: FnMut(&RowView<'_>) -> Result<Payload, String>,
{
    let bound = bind_table(db, table, names)?;
    let rows = db.rows(bound.schema)?;
    let mut out = TableParse::default();
    for row in &rows {
        let locator = ctx.locator(ContainerKind::SqliteTable, format!("{}:{}", bound.table, row.rowid));
        let view = RowView::new(row, &bound.columns, names);
        match build(&view) {
            Ok(payload) => out.records.push(ctx.record(payload, locator)),
            Err(reason) => out.skipped.push(SkippedRow { locator, reason }),
        }
    }
    Ok(out)
}

pub(crate) fn check(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.to_owned())
    }
}
