use std::collections::BTreeMap;
use std::io::BufRead;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{AppId, Instant};

/// One normalized HTTP exchange. `index` is its position among the
/// accepted lines of the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpTransaction {
    pub index: usize,
    pub at: Instant,
    pub method: String,
    pub url: String,
    pub request_headers: BTreeMap<String, String>,
    pub request_body: Vec<u8>,
    pub response_status: u16,
    pub response_headers: BTreeMap<String, String>,
    pub response_body: Vec<u8>,
    pub tls: bool,
    pub app_hint: Option<AppId>,
}

impl HttpTransaction {
    pub fn app(&self) -> AppId {
        self.app_hint.unwrap_or(AppId::Unknown)
    }
}

#[derive(Deserialize)]
struct Line {
    ts: f64,
    method: String,
    url: String,
    tls: bool,
    #[serde(default)]
    req_headers: BTreeMap<String, String>,
    #[serde(default)]
    req_body_b64: String,
    status: u16,
    #[serde(default)]
    resp_headers: BTreeMap<String, String>,
    #[serde(default)]
    resp_body_b64: String,
    #[serde(default)]
    app: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ingested {
    pub transactions: Vec<HttpTransaction>,
    /// One entry per rejected line.
    pub warnings: Vec<String>,
}

fn instant(ts: f64) -> Option<Instant> {
    if !ts.is_finite() || ts < 0.0 {
        return None;
    }
    let secs = ts.floor();
    let nanos = ((ts - secs) * 1e9).round().min(999_999_999.0) as u32;
    DateTime::<Utc>::from_timestamp(secs as i64, nanos)
}

fn convert(line: Line, index: usize) -> std::result::Result<HttpTransaction, String> {
    url::Url::parse(&line.url).map_err(|e| format!("bad url: {e}"))?;
    let decode = |field: &str, s: &str| {
        STANDARD
            .decode(s.trim())
            .map_err(|e| format!("bad {field}: {e}"))
    };
    Ok(HttpTransaction {
        index,
        at: instant(line.ts).ok_or_else(|| format!("bad ts {}", line.ts))?,
        method: line.method,
        url: line.url,
        request_headers: line.req_headers,
        request_body: decode("req_body_b64", &line.req_body_b64)?,
        response_status: line.status,
        response_headers: line.resp_headers,
        response_body: decode("resp_body_b64", &line.resp_body_b64)?,
        tls: line.tls,
        app_hint: line
            .app
            .map(|a| AppId::from_name(&a).unwrap_or(AppId::Unknown)),
    })
}

/// Reads NDJSON transactions. Blank lines are ignored; malformed lines are
/// skipped with one warning each; order is preserved.
pub fn ingest_transactions(reader: impl BufRead) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::Ingest)?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Line>(&line)
            .map_err(|e| e.to_string())
            .and_then(|l| convert(l, out.transactions.len()));
        match parsed {
            Ok(tx) => out.transactions.push(tx),
            Err(reason) => out
                .warnings
                .push(format!("transaction log line {}: skipped ({reason})", n + 1)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = r#"{"ts":1403136000.5,"method":"GET","url":"http://a.example/x","tls":false,"status":200,"resp_body_b64":"aGk=","app":"Meet Me"}"#;

    #[test]
    fn one_line() {
        let got = ingest_transactions(OK.as_bytes()).unwrap();
        assert_eq!(got.transactions.len(), 1);
        let t = &got.transactions[0];
        assert_eq!(t.response_body, b"hi");
        assert!(t.request_body.is_empty());
        assert_eq!(t.app_hint, Some(AppId::MeetMe));
        assert_eq!(t.at.timestamp_subsec_millis(), 500);
    }

    #[test]
    fn empty_stream() {
        let got = ingest_transactions(&b""[..]).unwrap();
        assert!(got.transactions.is_empty() && got.warnings.is_empty());
    }

    #[test]
    fn malformed_lines_counted() {
        let log = format!(
            "{OK}\n{OK}\n{{not json\n{}\n{}\n{OK}\n",
            OK.replace("http://a.example/x", "not a url"),
            OK.replace("aGk=", "***"),
        );
        let got = ingest_transactions(log.as_bytes()).unwrap();
        assert_eq!(got.transactions.len(), 3);
        assert_eq!(got.warnings.len(), 3);
        assert_eq!(got.transactions[2].index, 2);
    }

    #[test]
    fn unreadable_stream() {
        struct Broken;
        impl std::io::Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("gone"))
            }
        }
        let r = ingest_transactions(std::io::BufReader::new(Broken));
        assert!(matches!(r, Err(Error::Ingest(_))));
    }
}
