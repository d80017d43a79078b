//! Read-only SQLite-3 file reader over an in-memory byte slice.
//!
//! Only what artifact parsing needs: the schema table, rowid table b-trees,
//! overflow chains and the record format. The main database file is read on its
//! own; WAL and rollback-journal sidecars are never consulted.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub const HEADER_MAGIC: &[u8; 16] = b"SQLite format 3\0";

const PAGE_INTERIOR_TABLE: u8 = 0x05;
const PAGE_LEAF_TABLE: u8 = 0x0d;
const MAX_TREE_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SqliteError {
    /// The 16-byte magic is missing; the file may be encrypted or not a database at all.
    NotSqlite,
    Corrupt(&'static str),
    /// `WITHOUT ROWID` tables are stored as index b-trees, which this reader skips.
    Unsupported(&'static str),
}

impl fmt::Display for SqliteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqliteError::NotSqlite => f.write_str("SQLite header magic absent (possibly encrypted)"),
            SqliteError::Corrupt(what) => write!(f, "corrupt SQLite file: {what}"),
            SqliteError::Unsupported(what) => write!(f, "unsupported SQLite feature: {what}"),
        }
    }
}

pub fn has_magic(bytes: &[u8]) -> bool {
    bytes.len() >= HEADER_MAGIC.len() && &bytes[..HEADER_MAGIC.len()] == HEADER_MAGIC
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub rowid: i64,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub decl_type: String,
    pub rowid_alias: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub root_page: u32,
    pub columns: Vec<Column>,
    pub without_rowid: bool,
}

impl TableSchema {
    /// Column position, matched ASCII case-insensitively like SQLite does.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextEncoding {
    Utf8,
    Utf16Le,
    Utf16Be,
}

pub struct Database<'a> {
    bytes: &'a [u8],
    page_size: usize,
    usable_size: usize,
    encoding: TextEncoding,
    tables: Vec<TableSchema>,
}

impl<'a> Database<'a> {
    pub fn open(bytes: &'a [u8]) -> Result<Self, SqliteError> {
        if !has_magic(bytes) {
            return Err(SqliteError::NotSqlite);
        }
        if bytes.len() < 100 {
            return Err(SqliteError::Corrupt("truncated header"));
        }
        let page_size = match u16::from_be_bytes([bytes[16], bytes[17]]) {
            1 => 65_536,
            n if n >= 512 && n.is_power_of_two() => n as usize,
            _ => return Err(SqliteError::Corrupt("invalid page size")),
        };
        let reserved = bytes[20] as usize;
        if reserved >= page_size - 480 {
            return Err(SqliteError::Corrupt("reserved space too large"));
        }
        let encoding = match u32::from_be_bytes([bytes[56], bytes[57], bytes[58], bytes[59]]) {
            0 | 1 => TextEncoding::Utf8,
            2 => TextEncoding::Utf16Le,
            3 => TextEncoding::Utf16Be,
            _ => return Err(SqliteError::Corrupt("unknown text encoding")),
        };
        let mut db = Database {
            bytes,
            page_size,
            usable_size: page_size - reserved,
            encoding,
            tables: Vec::new(),
        };
        db.tables = db.load_schema()?;
        Ok(db)
    }

    pub fn tables(&self) -> &[TableSchema] {
        &self.tables
    }

    /// Table lookup by name, ASCII case-insensitive.
    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// All rows in rowid order. Values are aligned to the declared columns: short
    /// records (columns added later by `ALTER TABLE`) are padded with NULL and an
    /// `INTEGER PRIMARY KEY` column reads back as the rowid.
    pub fn rows(&self, table: &TableSchema) -> Result<Vec<Row>, SqliteError> {
        if table.without_rowid {
            return Err(SqliteError::Unsupported("WITHOUT ROWID table"));
        }
        let mut raw = Vec::new();
        let mut visited = BTreeSet::new();
        self.walk_table(table.root_page, 0, &mut visited, &mut raw)?;
        let mut rows = Vec::with_capacity(raw.len());
        for (rowid, payload) in raw {
            let mut values = self.decode_record(&payload)?;
            if values.len() < table.columns.len() {
                values.resize(table.columns.len(), Value::Null);
            }
            for (i, col) in table.columns.iter().enumerate() {
                if col.rowid_alias && values[i].is_null() {
                    values[i] = Value::Integer(rowid);
                }
            }
            rows.push(Row { rowid, values });
        }
        Ok(rows)
    }

    fn load_schema(&self) -> Result<Vec<TableSchema>, SqliteError> {
        let mut raw = Vec::new();
        let mut visited = BTreeSet::new();
        self.walk_table(1, 0, &mut visited, &mut raw)?;
        let mut tables = Vec::new();
        for (_, payload) in raw {
            let values = self.decode_record(&payload)?;
            let text = |i: usize| match values.get(i) {
                Some(Value::Text(s)) => Some(s.as_str()),
                _ => None,
            };
            if text(0) != Some("table") {
                continue;
            }
            let Some(name) = text(1) else { continue };
            let root_page = match values.get(3) {
                Some(Value::Integer(n)) if *n > 0 && *n <= u32::MAX as i64 => *n as u32,
                // virtual tables have root page 0 and no storage of their own
                _ => continue,
            };
            let sql = text(4).unwrap_or("");
            let (columns, without_rowid) = parse_create_table(sql);
            tables.push(TableSchema { name: name.to_owned(), root_page, columns, without_rowid });
        }
        Ok(tables)
    }

    fn page(&self, number: u32) -> Result<&'a [u8], SqliteError> {
        if number == 0 {
            return Err(SqliteError::Corrupt("page number zero"));
        }
        let start = (number as usize - 1)
            .checked_mul(self.page_size)
            .ok_or(SqliteError::Corrupt("page offset overflow"))?;
        let end = start + self.page_size;
        self.bytes
            .get(start..end)
            .ok_or(SqliteError::Corrupt("page beyond end of file"))
    }

    fn walk_table(
        &self,
        page_no: u32,
        depth: usize,
        visited: &mut BTreeSet<u32>,
        out: &mut Vec<(i64, Vec<u8>)>,
    ) -> Result<(), SqliteError> {
        if depth > MAX_TREE_DEPTH {
            return Err(SqliteError::Corrupt("b-tree too deep"));
        }
        if !visited.insert(page_no) {
            return Err(SqliteError::Corrupt("b-tree page cycle"));
        }
        let page = self.page(page_no)?;
        let hdr = if page_no == 1 { 100 } else { 0 };
        let kind = *page.get(hdr).ok_or(SqliteError::Corrupt("empty page"))?;
        let n_cells = read_u16(page, hdr + 3)? as usize;
        let header_len = match kind {
            PAGE_LEAF_TABLE => 8,
            PAGE_INTERIOR_TABLE => 12,
            _ => return Err(SqliteError::Corrupt("expected a table b-tree page")),
        };
        let ptrs = hdr + header_len;
        for i in 0..n_cells {
            let cell = read_u16(page, ptrs + 2 * i)? as usize;
            if cell >= self.usable_size {
                return Err(SqliteError::Corrupt("cell pointer out of range"));
            }
            if kind == PAGE_INTERIOR_TABLE {
                let child = read_u32(page, cell)?;
                self.walk_table(child, depth + 1, visited, out)?;
            } else {
                out.push(self.read_leaf_cell(page, cell)?);
            }
        }
        if kind == PAGE_INTERIOR_TABLE {
            let right = read_u32(page, hdr + 8)?;
            self.walk_table(right, depth + 1, visited, out)?;
        }
        Ok(())
    }

    fn read_leaf_cell(&self, page: &[u8], offset: usize) -> Result<(i64, Vec<u8>), SqliteError> {
        let (payload_len, n1) = read_varint(page, offset)?;
        let (rowid, n2) = read_varint(page, offset + n1)?;
        let payload_len = usize::try_from(payload_len)
            .ok()
            .filter(|&p| p <= self.bytes.len())
            .ok_or(SqliteError::Corrupt("payload larger than file"))?;
        let start = offset + n1 + n2;
        let usable = self.usable_size;
        let max_local = usable - 35;
        let local = if payload_len <= max_local {
            payload_len
        } else {
            let min_local = (usable - 12) * 32 / 255 - 23;
            let k = min_local + (payload_len - min_local) % (usable - 4);
            if k <= max_local {
                k
            } else {
                min_local
            }
        };
        let mut payload = Vec::with_capacity(payload_len);
        payload.extend_from_slice(
            page.get(start..start + local)
                .ok_or(SqliteError::Corrupt("cell payload out of range"))?,
        );
        if local < payload_len {
            let mut next = read_u32(page, start + local)?;
            let mut seen = BTreeSet::new();
            while payload.len() < payload_len {
                if next == 0 || !seen.insert(next) {
                    return Err(SqliteError::Corrupt("broken overflow chain"));
                }
                let ov = self.page(next)?;
                next = read_u32(ov, 0)?;
                let take = (payload_len - payload.len()).min(usable - 4);
                payload.extend_from_slice(&ov[4..4 + take]);
            }
        }
        Ok((rowid as i64, payload))
    }

    fn decode_record(&self, payload: &[u8]) -> Result<Vec<Value>, SqliteError> {
        let (header_len, mut pos) = read_varint(payload, 0)?;
        let header_len = header_len as usize;
        if header_len > payload.len() || header_len < pos {
            return Err(SqliteError::Corrupt("record header length"));
        }
        let mut serials = Vec::new();
        while pos < header_len {
            let (st, n) = read_varint(payload, pos)?;
            serials.push(st);
            pos += n;
        }
        let mut body = header_len;
        let mut values = Vec::with_capacity(serials.len());
        for st in serials {
            let (value, len) = self.decode_value(st, payload, body)?;
            values.push(value);
            body += len;
        }
        Ok(values)
    }

    fn decode_value(&self, serial: u64, buf: &[u8], at: usize) -> Result<(Value, usize), SqliteError> {
        let int = |n: usize| -> Result<(Value, usize), SqliteError> {
            let b = buf.get(at..at + n).ok_or(SqliteError::Corrupt("record body truncated"))?;
            let mut v: i64 = if b[0] & 0x80 != 0 { -1 } else { 0 };
            for &byte in b {
                v = (v << 8) | byte as i64;
            }
            Ok((Value::Integer(v), n))
        };
        match serial {
            0 => Ok((Value::Null, 0)),
            1 => int(1),
            2 => int(2),
            3 => int(3),
            4 => int(4),
            5 => int(6),
            6 => int(8),
            7 => {
                let b = buf.get(at..at + 8).ok_or(SqliteError::Corrupt("record body truncated"))?;
                let mut arr = [0u8; 8];
                arr.copy_from_slice(b);
                Ok((Value::Real(f64::from_be_bytes(arr)), 8))
            }
            8 => Ok((Value::Integer(0), 0)),
            9 => Ok((Value::Integer(1), 0)),
            10 | 11 => Err(SqliteError::Corrupt("reserved serial type")),
            n => {
                let len = ((n - 12) / 2) as usize;
                let b = buf
                    .get(at..at.checked_add(len).ok_or(SqliteError::Corrupt("length overflow"))?)
                    .ok_or(SqliteError::Corrupt("record body truncated"))?;
                if n % 2 == 0 {
                    Ok((Value::Blob(b.to_vec()), len))
                } else {
                    Ok((Value::Text(self.decode_text(b)), len))
                }
            }
        }
    }

    fn decode_text(&self, b: &[u8]) -> String {
        match self.encoding {
            TextEncoding::Utf8 => String::from_utf8_lossy(b).into_owned(),
            TextEncoding::Utf16Le | TextEncoding::Utf16Be => {
                let units = b.chunks_exact(2).map(|c| match self.encoding {
                    TextEncoding::Utf16Le => u16::from_le_bytes([c[0], c[1]]),
                    _ => u16::from_be_bytes([c[0], c[1]]),
                });
                char::decode_utf16(units)
                    .map(|r| r.unwrap_or(char::REPLACEMENT_CHARACTER))
                    .collect()
            }
        }
    }
}

fn read_u16(buf: &[u8], at: usize) -> Result<u16, SqliteError> {
    buf.get(at..at + 2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .ok_or(SqliteError::Corrupt("short read"))
}

fn read_u32(buf: &[u8], at: usize) -> Result<u32, SqliteError> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(SqliteError::Corrupt("short read"))
}

/// SQLite big-endian varint: up to 8 bytes of 7 bits, a 9th byte contributes all 8.
pub fn read_varint(buf: &[u8], at: usize) -> Result<(u64, usize), SqliteError> {
    let mut v: u64 = 0;
    for i in 0..9 {
        let b = *buf.get(at + i).ok_or(SqliteError::Corrupt("varint truncated"))?;
        if i == 8 {
            return Ok(((v << 8) | b as u64, 9));
        }
        v = (v << 7) | (b & 0x7f) as u64;
        if b & 0x80 == 0 {
            return Ok((v, i + 1));
        }
    }
    unreachable!()
}

const TABLE_CONSTRAINT_WORDS: [&str; 5] = ["CONSTRAINT", "PRIMARY", "UNIQUE", "CHECK", "FOREIGN"];
const COLUMN_CONSTRAINT_WORDS: [&str; 10] = [
    "CONSTRAINT", "PRIMARY", "NOT", "NULL", "UNIQUE", "CHECK", "DEFAULT", "COLLATE", "REFERENCES",
    "GENERATED",
];

/// Column list of a `CREATE TABLE` statement plus its `WITHOUT ROWID` flag.
/// `CREATE TABLE ... AS SELECT` has no column list and yields no columns.
pub fn parse_create_table(sql: &str) -> (Vec<Column>, bool) {
    let Some(open) = sql.find('(') else {
        return (Vec::new(), false);
    };
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut close = None;
    let mut parts = Vec::new();
    let mut part_start = open + 1;
    for (i, ch) in sql.char_indices().skip_while(|(i, _)| *i < open) {
        if let Some(q) = quote {
            if ch == q {
                quote = None;
            }
            continue;
        }
        match ch {
            '"' | '`' | '\'' => quote = Some(ch),
            '[' => quote = Some(']'),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    parts.push(&sql[part_start..i]);
                    close = Some(i);
                    break;
                }
            }
            ',' if depth == 1 => {
                parts.push(&sql[part_start..i]);
                part_start = i + 1;
            }
            _ => {}
        }
    }
    let without_rowid = close
        .map(|c| {
            let tail: String = sql[c + 1..].chars().filter(|c| !c.is_whitespace()).collect();
            tail.to_ascii_uppercase().contains("WITHOUTROWID")
        })
        .unwrap_or(false);

    let mut columns: Vec<Column> = Vec::new();
    let mut table_pk: Option<Vec<String>> = None;
    for part in parts {
        let def = part.trim();
        if def.is_empty() {
            continue;
        }
        let first_word = def
            .split(|c: char| c.is_whitespace() || c == '(')
            .next()
            .unwrap_or("")
            .to_ascii_uppercase();
        if TABLE_CONSTRAINT_WORDS.contains(&first_word.as_str()) {
            let upper = def.to_ascii_uppercase();
            if let Some(pk) = upper.find("PRIMARY KEY") {
                if let (Some(a), Some(b)) = (def[pk..].find('('), def[pk..].find(')')) {
                    table_pk = Some(
                        def[pk + a + 1..pk + b]
                            .split(',')
                            .map(|s| unquote(s.split_whitespace().next().unwrap_or("")))
                            .collect(),
                    );
                }
            }
            continue;
        }
        let (name, rest) = split_identifier(def);
        let mut type_words = Vec::new();
        for word in rest.split_whitespace() {
            let upper = word.to_ascii_uppercase();
            if COLUMN_CONSTRAINT_WORDS.contains(&upper.as_str()) {
                break;
            }
            type_words.push(word);
        }
        let decl_type = type_words.join(" ");
        let upper_rest = rest.to_ascii_uppercase();
        let rowid_alias = decl_type.eq_ignore_ascii_case("INTEGER")
            && upper_rest.contains("PRIMARY KEY")
            && !upper_rest.contains("PRIMARY KEY DESC");
        columns.push(Column { name, decl_type, rowid_alias });
    }
    if let Some(pk) = table_pk {
        if let [only] = pk.as_slice() {
            if let Some(col) = columns.iter_mut().find(|c| c.name.eq_ignore_ascii_case(only)) {
                col.rowid_alias = col.decl_type.eq_ignore_ascii_case("INTEGER");
            }
        }
    }
    if without_rowid {
        for c in &mut columns {
            c.rowid_alias = false;
        }
    }
    (columns, without_rowid)
}

fn split_identifier(def: &str) -> (String, &str) {
    let mut chars = def.char_indices();
    let Some((_, first)) = chars.next() else {
        return (String::new(), "");
    };
    let closing = match first {
        '"' => Some('"'),
        '`' => Some('`'),
        '\'' => Some('\''),
        '[' => Some(']'),
        _ => None,
    };
    match closing {
        Some(q) => {
            let mut name = String::new();
            let bytes: Vec<(usize, char)> = def.char_indices().skip(1).collect();
            let mut i = 0;
            while i < bytes.len() {
                let (idx, c) = bytes[i];
                if c == q {
                    // doubled quote is an escaped quote character
                    if q != ']' && bytes.get(i + 1).map(|x| x.1) == Some(q) {
                        name.push(q);
                        i += 2;
                        continue;
                    }
                    return (name, &def[idx + c.len_utf8()..]);
                }
                name.push(c);
                i += 1;
            }
            (name, "")
        }
        None => {
            let end = def.find(char::is_whitespace).unwrap_or(def.len());
            (def[..end].to_owned(), &def[end..])
        }
    }
}

fn unquote(s: &str) -> String {
    split_identifier(s).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varints() {
        assert_eq!(read_varint(&[0x05], 0).unwrap(), (5, 1));
        assert_eq!(read_varint(&[0x81, 0x00], 0).unwrap(), (128, 2));
        assert_eq!(read_varint(&[0xff; 9], 0).unwrap(), (u64::MAX, 9));
        assert!(read_varint(&[0x81], 0).is_err());
    }

    #[test]
    fn create_table_columns() {
        let (cols, wr) = parse_create_table(
            "CREATE TABLE TB_BPResult (id INTEGER PRIMARY KEY AUTOINCREMENT, Sys INTEGER NOT NULL, \"Dia\" INTEGER, [Note] TEXT DEFAULT 'a,b', CHECK (Sys > 0))",
        );
        assert!(!wr);
        let names: Vec<&str> = cols.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["id", "Sys", "Dia", "Note"]);
        assert!(cols[0].rowid_alias);
        assert!(!cols[1].rowid_alias);
        assert_eq!(cols[3].decl_type, "TEXT");
    }

    #[test]
    fn table_level_primary_key_alias() {
        let (cols, _) = parse_create_table("CREATE TABLE t (a INTEGER, b TEXT, PRIMARY KEY (a))");
        assert!(cols[0].rowid_alias);
        let (cols, wr) = parse_create_table("CREATE TABLE t (a INTEGER PRIMARY KEY, b) WITHOUT ROWID");
        assert!(wr);
        assert!(!cols[0].rowid_alias);
        assert_eq!(cols[1].decl_type, "");
    }

    #[test]
    fn rejects_non_sqlite() {
        assert!(matches!(Database::open(b"not a database at all"), Err(SqliteError::NotSqlite)));
        assert!(matches!(Database::open(&[]), Err(SqliteError::NotSqlite)));
        let mut short = HEADER_MAGIC.to_vec();
        short.extend_from_slice(&[0; 20]);
        assert!(matches!(Database::open(&short), Err(SqliteError::Corrupt(_))));
    }
}
