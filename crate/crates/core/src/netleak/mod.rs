//! Captured HTTP traffic: ingestion, leak detection, and the per-app
//! exposure matrix.

pub mod detect;
pub mod ingest;
pub mod matrix;

pub use detect::{detect_leaks, Evidence, LeakCategory, LeakFinding, Part, Severity};
pub use ingest::{ingest_transactions, HttpTransaction, Ingested};
pub use matrix::{build_leak_matrix, MatrixRow};
