//! Best-effort extraction from databases without a known layout.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::Result;
use crate::model::{
    AppId, ArtifactSource, Artifacts, ChatMessage, Direction, EmailRecord, FileKind, Heuristic,
    MediaUrl, MessageBody, MessageFlag, RawValue,
};
use crate::patterns;

use super::cells;
use super::sqlite::{read_tables, ColumnInfo, DbCopy, Row, TableInfo};

const BODY_NAMES: [&str; 3] = ["message", "body", "text"];
const TIME_NAMES: [&str; 4] = ["time", "date", "stamp", "created"];
const SENDER_NAMES: [&str; 3] = ["from", "sender", "author"];
const THREAD_NAMES: [&str; 3] = ["thread", "chat", "conversation"];

fn name_has(col: &ColumnInfo, needles: &[&str]) -> bool {
    let n = col.name.to_ascii_lowercase();
    needles.iter().any(|k| n.contains(k))
}

/// First non-null value in a column, used when the declared type is blank.
fn first_value<'r>(rows: &'r [Row], column: &str) -> Option<&'r RawValue> {
    rows.iter().filter_map(|r| r.get(column)).find(|v| !v.is_null())
}

fn text_like(col: &ColumnInfo, rows: &[Row]) -> bool {
    col.is_text()
        || (col.decl_type.is_empty()
            && matches!(first_value(rows, &col.name), Some(RawValue::Text(_))))
}

fn integer_like(col: &ColumnInfo, rows: &[Row]) -> bool {
    col.is_integer()
        || (col.decl_type.is_empty()
            && matches!(first_value(rows, &col.name), Some(RawValue::Integer(_))))
}

/// Column layout of a message-like table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageColumns {
    pub body: String,
    pub time: String,
    pub sender: Option<String>,
    pub thread: Option<String>,
}

/// A table is a message candidate when it has a text column named like a
/// body and an integer column named like a timestamp.
pub fn message_columns(table: &TableInfo, rows: &[Row]) -> Option<MessageColumns> {
    let body = table
        .columns
        .iter()
        .find(|c| name_has(c, &BODY_NAMES) && text_like(c, rows))?;
    let time = table
        .columns
        .iter()
        .find(|c| name_has(c, &TIME_NAMES) && integer_like(c, rows))?;
    let other = |needles: &[&str]| {
        table
            .columns
            .iter()
            .find(|c| c.name != body.name && c.name != time.name && name_has(c, needles))
            .map(|c| c.name.clone())
    };
    Some(MessageColumns {
        body: body.name.clone(),
        time: time.name.clone(),
        sender: other(&SENDER_NAMES),
        thread: other(&THREAD_NAMES),
    })
}

/// Sweeps the given tables of an already open database.
pub(crate) fn sweep_tables(
    app: AppId,
    db: &DbCopy,
    tables: &[&TableInfo],
    rel_path: &str,
) -> Artifacts {
    let mut out = Artifacts::default();
    let base = ArtifactSource::file(rel_path, FileKind::SqliteDb);
    for table in tables {
        let rows = match db.rows(&table.name) {
            Ok(r) => r,
            Err(e) => {
                out.warnings
                    .push(format!("{rel_path}: table {} unreadable: {e}", table.name));
                continue;
            }
        };
        let layout = message_columns(table, &rows);
        for (idx, row) in rows.iter().enumerate() {
            let locator = row.locator(&table.name, idx);
            let source = base.with_record(&locator);
            if let Some(layout) = &layout {
                sweep_message(app, row, layout, &locator, &source, &mut out);
            }
            for (column, value) in &row.cells {
                let RawValue::Text(text) = value else { continue };
                for m in patterns::url().find_iter(text) {
                    out.media_urls.push(MediaUrl {
                        app,
                        url: m.as_str().to_string(),
                        table: table.name.clone(),
                        column: column.clone(),
                        in_message_table: layout.is_some(),
                        source: source.clone(),
                    });
                }
                for m in patterns::email().find_iter(text) {
                    out.emails.push(EmailRecord {
                        app,
                        address: m.as_str().to_string(),
                        source: source.clone(),
                    });
                }
            }
        }
    }
    if !out.messages.is_empty() || !out.media_urls.is_empty() || !out.emails.is_empty() {
        out.heuristics.insert(Heuristic::GenericSweep);
    }
    out
}

fn sweep_message(
    app: AppId,
    row: &Row,
    layout: &MessageColumns,
    locator: &str,
    source: &ArtifactSource,
    out: &mut Artifacts,
) {
    let Some(body) = row.text(&layout.body) else {
        return;
    };
    let mut c = cells::Cells {
        row,
        locator: locator.to_string(),
        out,
    };
    let Some((sent_at, time_unit)) = c.time(&layout.time) else {
        return;
    };
    let message_id = match row.rowid {
        Some(id) => id.to_string(),
        None => locator.to_string(),
    };
    out.messages.push(ChatMessage {
        app,
        message_id,
        sender_id: layout.sender.as_deref().and_then(|s| row.text(s)),
        recipient_id: None,
        peer_id: None,
        thread_id: layout.thread.as_deref().and_then(|s| row.text(s)),
        sent_at,
        time_unit,
        body: MessageBody::Text(body),
        direction: Direction::Unknown,
        unread: None,
        failed: None,
        flags: BTreeSet::from([MessageFlag::Heuristic]),
        source: source.clone(),
    });
}

/// Opens `path` and sweeps every user table.
pub fn generic_sweep(app: AppId, path: &Path, rel_path: &str) -> Result<Artifacts> {
    let db = DbCopy::open(path, rel_path)?;
    let (tables, warnings) = read_tables(&db)?;
    let refs: Vec<&TableInfo> = tables.iter().collect();
    let mut out = sweep_tables(app, &db, &refs, rel_path);
    out.warnings.splice(0..0, warnings);
    Ok(out)
}
