//! SQLite extraction: known layouts first, a pattern sweep for the rest.

mod cells;
pub mod extract;
pub mod schema;
pub mod sqlite;
pub mod sweep;

pub use extract::{extract_normalized, DbExtraction};
pub use schema::{match_table, ColumnRole, TableMatch, TableSpec};
pub use sqlite::{read_tables, DbCopy, TableInfo};
pub use sweep::generic_sweep;
