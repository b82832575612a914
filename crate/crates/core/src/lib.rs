pub mod cache;
pub mod correlate;
pub mod db;
pub mod digest;
pub mod epoch;
pub mod error;
pub mod forge;
pub mod model;
pub mod netleak;
pub mod patterns;
pub mod pipeline;
pub mod prefs;
pub mod registry;
pub mod report;
pub mod scan;
pub mod token;

pub use error::{Error, Result};
