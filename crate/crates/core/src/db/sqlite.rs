//! Read-only SQLite access through a private copy of the evidence file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use crate::error::{Error, Result};
use crate::model::RawValue;

/// Journal side files copied along with the database.
const SIDE_FILES: [&str; 3] = ["-wal", "-shm", "-journal"];

/// An open connection to a temporary copy. The evidence file itself is
/// never opened by SQLite.
pub struct DbCopy {
    conn: Connection,
    display_path: String,
    _dir: TempDir,
}

impl DbCopy {
    pub fn open(path: &Path, display_path: &str) -> Result<DbCopy> {
        let open_err = |reason: String| Error::DbOpen {
            path: display_path.to_string(),
            reason,
        };
        let dir = tempfile::tempdir().map_err(|e| open_err(e.to_string()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "evidence.db".to_string());
        let copy = dir.path().join(&name);
        fs::copy(path, &copy).map_err(|e| open_err(e.to_string()))?;
        for suffix in SIDE_FILES {
            let side = path.with_file_name(format!("{name}{suffix}"));
            if side.is_file() {
                fs::copy(&side, dir.path().join(format!("{name}{suffix}")))
                    .map_err(|e| open_err(e.to_string()))?;
            }
        }
        let conn = Connection::open_with_flags(
            &copy,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )
        .map_err(|e| open_err(e.to_string()))?;
        // Forces the header to be read so corrupt files fail here.
        conn.query_row("SELECT count(*) FROM sqlite_master", [], |r| r.get::<_, i64>(0))
            .map_err(|e| open_err(e.to_string()))?;
        Ok(DbCopy {
            conn,
            display_path: display_path.to_string(),
            _dir: dir,
        })
    }

    pub fn display_path(&self) -> &str {
        &self.display_path
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn table_names(&self) -> Result<Vec<String>> {
        let mut stmt = self
            .conn
            .prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' \
                 AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY name",
            )
            .map_err(|e| self.err(e))?;
        let names = stmt
            .query_map([], |r| r.get::<_, String>(0))
            .map_err(|e| self.err(e))?
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(e))?;
        Ok(names)
    }

    pub fn columns(&self, table: &str) -> rusqlite::Result<Vec<ColumnInfo>> {
        let mut stmt = self
            .conn
            .prepare(&format!("PRAGMA table_info({})", quote_ident(table)))?;
        let cols = stmt
            .query_map([], |r| {
                Ok(ColumnInfo {
                    name: r.get(1)?,
                    decl_type: r.get::<_, Option<String>>(2)?.unwrap_or_default(),
                })
            })?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        Ok(cols)
    }

    pub fn row_count(&self, table: &str) -> rusqlite::Result<u64> {
        self.conn.query_row(
            &format!("SELECT count(*) FROM {}", quote_ident(table)),
            [],
            |r| r.get::<_, i64>(0).map(|n| n as u64),
        )
    }

    /// All rows of `table` in rowid order. Tables without a rowid are read
    /// in storage order and get no rowid.
    pub fn rows(&self, table: &str) -> rusqlite::Result<Vec<Row>> {
        let ident = quote_ident(table);
        match self.rows_with(&format!("SELECT rowid, * FROM {ident} ORDER BY rowid"), true) {
            Ok(rows) => Ok(rows),
            Err(_) => self.rows_with(&format!("SELECT * FROM {ident}"), false),
        }
    }

    fn rows_with(&self, sql: &str, has_rowid: bool) -> rusqlite::Result<Vec<Row>> {
        let mut stmt = self.conn.prepare(sql)?;
        let names: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
        let skip = usize::from(has_rowid);
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        while let Some(r) = rows.next()? {
            let rowid = if has_rowid { r.get::<_, Option<i64>>(0)? } else { None };
            let mut cells = Vec::with_capacity(names.len() - skip);
            for (i, name) in names.iter().enumerate().skip(skip) {
                cells.push((name.clone(), raw_value(r.get_ref(i)?)));
            }
            out.push(Row { rowid, cells });
        }
        Ok(out)
    }

    fn err(&self, e: rusqlite::Error) -> Error {
        Error::DbOpen {
            path: self.display_path.clone(),
            reason: e.to_string(),
        }
    }
}

pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn raw_value(v: ValueRef<'_>) -> RawValue {
    match v {
        ValueRef::Null => RawValue::Null,
        ValueRef::Integer(i) => RawValue::Integer(i),
        ValueRef::Real(r) => RawValue::Real(r),
        ValueRef::Text(t) => RawValue::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => RawValue::Blob(hex::encode(b)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub decl_type: String,
}

impl ColumnInfo {
    /// SQLite affinity rule for INTEGER.
    pub fn is_integer(&self) -> bool {
        self.decl_type.to_ascii_uppercase().contains("INT")
    }

    /// SQLite affinity rule for TEXT.
    pub fn is_text(&self) -> bool {
        let t = self.decl_type.to_ascii_uppercase();
        !t.contains("INT") && (t.contains("CHAR") || t.contains("CLOB") || t.contains("TEXT"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub rowid: Option<i64>,
    pub cells: Vec<(String, RawValue)>,
}

impl Row {
    /// Cell by column name, ASCII case-insensitive.
    pub fn get(&self, column: &str) -> Option<&RawValue> {
        self.cells
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(column))
            .map(|(_, v)| v)
    }

    pub fn text(&self, column: &str) -> Option<String> {
        self.get(column).and_then(RawValue::as_nonempty_text)
    }

    pub fn fields(&self) -> BTreeMap<String, RawValue> {
        self.cells.iter().cloned().collect()
    }

    pub fn locator(&self, table: &str, index: usize) -> String {
        match self.rowid {
            Some(id) => format!("{table}:rowid={id}"),
            None => format!("{table}:row={index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableInfo {
    pub name: String,
    pub columns: Vec<ColumnInfo>,
    pub row_count: u64,
}

impl TableInfo {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// Enumerates user tables with their columns and row counts. Tables that
/// cannot be read are reported in the returned warnings.
pub fn read_tables(db: &DbCopy) -> Result<(Vec<TableInfo>, Vec<String>)> {
    let mut tables = Vec::new();
    let mut warnings = Vec::new();
    for name in db.table_names()? {
        let columns = match db.columns(&name) {
            Ok(c) => c,
            Err(e) => {
                warnings.push(format!("{}: table {name}: {e}", db.display_path()));
                continue;
            }
        };
        let row_count = match db.row_count(&name) {
            Ok(n) => n,
            Err(e) => {
                warnings.push(format!("{}: table {name} unreadable: {e}", db.display_path()));
                0
            }
        };
        tables.push(TableInfo {
            name,
            columns,
            row_count,
        });
    }
    Ok((tables, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupt_file_is_a_db_open_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.db");
        let mut bytes = b"SQLite format 3\0".to_vec();
        bytes.extend(std::iter::repeat_n(0xAB, 200));
        fs::write(&p, &bytes).unwrap();
        match DbCopy::open(&p, "x/bad.db") {
            Err(Error::DbOpen { path, .. }) => assert_eq!(path, "x/bad.db"),
            other => panic!("expected DbOpen, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn tables_columns_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.db");
        {
            let c = Connection::open(&p).unwrap();
            c.execute_batch(
                "CREATE TABLE t (a INTEGER, \"we\"\"ird\" TEXT);
                 INSERT INTO t VALUES (1, 'x'), (2, NULL), (3, 'z');
                 CREATE TABLE empty (q BLOB);",
            )
            .unwrap();
        }
        let before = fs::read(&p).unwrap();
        let db = DbCopy::open(&p, "t.db").unwrap();
        let (tables, warnings) = read_tables(&db).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(tables.len(), 2);
        let t = tables.iter().find(|t| t.name == "t").unwrap();
        assert_eq!(t.row_count, 3);
        assert_eq!(t.column_names(), vec!["a".to_string(), "we\"ird".to_string()]);
        let rows = db.rows("t").unwrap();
        assert_eq!(rows[1].get("WE\"IRD"), Some(&RawValue::Null));
        assert_eq!(rows[2].rowid, Some(3));
        drop(db);
        assert_eq!(fs::read(&p).unwrap(), before);
    }

    #[test]
    fn zero_user_tables() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.db");
        Connection::open(&p)
            .unwrap()
            .execute_batch("PRAGMA user_version = 1;")
            .unwrap();
        let db = DbCopy::open(&p, "e.db").unwrap();
        assert!(read_tables(&db).unwrap().0.is_empty());
    }
}
