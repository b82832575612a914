//! Rule-based PII detection over HTTP transactions.
//!
//! Header offsets refer to the canonical rendering produced by
//! [`render_headers`]: `Name: value\r\n` per header in key order.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::bytes::Regex;
use serde::{Deserialize, Serialize};

use crate::cache::image_format;
use crate::model::{AppId, AuthToken, ImageFormat};
use crate::token::encode_component;

use super::ingest::HttpTransaction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LeakCategory {
    PlaintextMessage,
    PlaintextImage,
    /// Image URL carried in a plaintext body.
    PlaintextImageLink,
    ExactLocation,
    CoarseLocation,
    EmailAddress,
    TokenInTransit,
    LocationInFilename,
}

impl LeakCategory {
    pub const ALL: [LeakCategory; 8] = [
        LeakCategory::PlaintextMessage,
        LeakCategory::PlaintextImage,
        LeakCategory::PlaintextImageLink,
        LeakCategory::ExactLocation,
        LeakCategory::CoarseLocation,
        LeakCategory::EmailAddress,
        LeakCategory::TokenInTransit,
        LeakCategory::LocationInFilename,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Url,
    RequestHeaders,
    RequestBody,
    ResponseHeaders,
    ResponseBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Evidence {
    pub transaction: usize,
    pub part: Part,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LeakFinding {
    pub category: LeakCategory,
    pub severity: Severity,
    pub app: AppId,
    pub evidence: Evidence,
    pub description: String,
    /// Coarse-location facets seen: `country`, `state`, `suburb`, `distance`.
    pub facets: BTreeSet<String>,
}

macro_rules! bytes_regex {
    ($name:ident, $re:expr) => {
        fn $name() -> &'static Regex {
            static RE: OnceLock<Regex> = OnceLock::new();
            RE.get_or_init(|| Regex::new($re).expect("valid regex"))
        }
    };
}

bytes_regex!(decimal_re, r"[-+]?[0-9]{1,3}\.[0-9]{4,}");
bytes_regex!(message_key_re, r#"(?i)"(?:message|text|body|msg)"\s*:\s*"|(?:^|&)(?:message|text|body|msg)=[^&]"#);
bytes_regex!(
    coarse_re,
    r#"(?i)"(country|state|region|suburb|city|distance)"\s*:|<(country|state|region|suburb|city|distance)>|(?:^|[?&])(country|state|region|suburb|city|distance)="#
);
bytes_regex!(email_re, r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}");
bytes_regex!(
    image_url_re,
    r#"(?i)https?://[^\s"'<>\x00-\x1f]+\.(?:jpe?g|png|webp|gif)\b"#
);

const CHAT_PATH_FRAGMENTS: [&str; 4] = ["/chat", "/message", "/conversation", "/inbox"];
const PAIR_WINDOW: usize = 40;
const MIN_TOKEN_LEN: usize = 8;

pub fn render_headers(headers: &BTreeMap<String, String>) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, v) in headers {
        out.extend_from_slice(k.as_bytes());
        out.extend_from_slice(b": ");
        out.extend_from_slice(v.as_bytes());
        out.extend_from_slice(b"\r\n");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Decimal {
    start: usize,
    end: usize,
    value: f64,
    key: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Lat,
    Lon,
}

fn key_before(hay: &[u8], start: usize) -> Option<Axis> {
    let from = start.saturating_sub(16);
    let ctx = hay[from..start].to_ascii_lowercase();
    let last = |needle: &[u8]| ctx.windows(needle.len()).rposition(|w| w == needle);
    let lat = last(b"lat");
    let lon = last(b"lon").max(last(b"lng"));
    match (lat, lon) {
        (Some(a), Some(o)) => Some(if a > o { Axis::Lat } else { Axis::Lon }),
        (Some(_), None) => Some(Axis::Lat),
        (None, Some(_)) => Some(Axis::Lon),
        (None, None) => None,
    }
}

/// Signed decimals with 4+ fraction digits that are not a fragment of a
/// longer number.
fn decimals(hay: &[u8]) -> Vec<Decimal> {
    decimal_re()
        .find_iter(hay)
        .filter(|m| {
            let before_ok = m.start() == 0 || {
                let b = hay[m.start() - 1];
                !(b.is_ascii_digit() || b == b'.')
            };
            let after_ok = !(hay.get(m.end()) == Some(&b'.')
                && hay.get(m.end() + 1).is_some_and(u8::is_ascii_digit));
            before_ok && after_ok
        })
        .filter_map(|m| {
            let value = std::str::from_utf8(m.as_bytes()).ok()?.parse().ok()?;
            Some(Decimal {
                start: m.start(),
                end: m.end(),
                value,
                key: key_before(hay, m.start()),
            })
        })
        .collect()
}

/// First in-range latitude/longitude pair: adjacent decimals within
/// [`PAIR_WINDOW`] bytes, or a keyed lat and lon anywhere in `hay`.
/// Returns the covering span.
pub fn coordinate_pair(hay: &[u8]) -> Option<(usize, usize)> {
    let ds = decimals(hay);
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            let (a, b) = (ds[i], ds[j]);
            let keyed = matches!(
                (a.key, b.key),
                (Some(Axis::Lat), Some(Axis::Lon)) | (Some(Axis::Lon), Some(Axis::Lat))
            );
            let adjacent = j == i + 1 && b.start - a.end <= PAIR_WINDOW;
            if !(keyed || adjacent) {
                continue;
            }
            let (lat, lon) = if a.key == Some(Axis::Lon) && b.key == Some(Axis::Lat) {
                (b.value, a.value)
            } else {
                (a.value, b.value)
            };
            if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
                return Some((a.start, b.end - a.start));
            }
        }
    }
    None
}

fn coarse_facets(hay: &[u8]) -> (BTreeSet<String>, Option<(usize, usize)>) {
    let mut facets = BTreeSet::new();
    let mut first = None;
    for caps in coarse_re().captures_iter(hay) {
        let whole = caps.get(0).expect("group 0");
        first.get_or_insert((whole.start(), whole.len()));
        let name = (1..=3)
            .find_map(|i| caps.get(i))
            .map(|m| m.as_bytes().to_ascii_lowercase())
            .unwrap_or_default();
        let facet = match name.as_slice() {
            b"region" | b"state" => "state",
            b"city" | b"suburb" => "suburb",
            b"country" => "country",
            _ => "distance",
        };
        facets.insert(facet.to_string());
    }
    (facets, first)
}

struct Parts<'t> {
    url: &'t [u8],
    /// Offset of the query (after `?`) inside the URL, if any.
    query_at: Option<usize>,
    req_headers: Vec<u8>,
    req_body: &'t [u8],
    resp_headers: Vec<u8>,
    resp_body: &'t [u8],
}

impl<'t> Parts<'t> {
    fn new(tx: &'t HttpTransaction) -> Self {
        let query_at = tx.url.find('?').map(|i| i + 1);
        Parts {
            url: tx.url.as_bytes(),
            query_at,
            req_headers: render_headers(&tx.request_headers),
            req_body: &tx.request_body,
            resp_headers: render_headers(&tx.response_headers),
            resp_body: &tx.response_body,
        }
    }

    fn bodies(&self) -> [(Part, &[u8]); 2] {
        [(Part::RequestBody, self.req_body), (Part::ResponseBody, self.resp_body)]
    }

    fn all(&self) -> [(Part, &[u8]); 5] {
        [
            (Part::Url, self.url),
            (Part::RequestHeaders, &self.req_headers),
            (Part::RequestBody, self.req_body),
            (Part::ResponseHeaders, &self.resp_headers),
            (Part::ResponseBody, self.resp_body),
        ]
    }

    /// URL query plus both bodies, with offsets adjusted to the URL.
    fn query_and_bodies(&self) -> Vec<(Part, usize, &[u8])> {
        let mut v = Vec::new();
        if let Some(q) = self.query_at {
            v.push((Part::Url, q, &self.url[q..]));
        }
        for (p, b) in self.bodies() {
            v.push((p, 0, b));
        }
        v
    }
}

struct Detector<'a> {
    tx: &'a HttpTransaction,
    out: Vec<LeakFinding>,
}

impl<'a> Detector<'a> {
    fn emit(&mut self, category: LeakCategory, severity: Severity, part: Part, span: (usize, usize), description: String) {
        self.emit_with(category, severity, self.tx.app(), part, span, description, BTreeSet::new());
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_with(
        &mut self,
        category: LeakCategory,
        severity: Severity,
        app: AppId,
        part: Part,
        (offset, len): (usize, usize),
        description: String,
        facets: BTreeSet<String>,
    ) {
        self.out.push(LeakFinding {
            category,
            severity,
            app,
            evidence: Evidence {
                transaction: self.tx.index,
                part,
                offset,
                len,
            },
            description,
            facets,
        });
    }
}

fn find_bytes(hay: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    hay.windows(needle.len()).position(|w| w == needle)
}

fn detect_one(tx: &HttpTransaction, tokens: &[&AuthToken]) -> Vec<LeakFinding> {
    let parts = Parts::new(tx);
    let mut d = Detector { tx, out: Vec::new() };
    let plain = !tx.tls;

    if plain {
        let path = url::Url::parse(&tx.url)
            .map(|u| u.path().to_ascii_lowercase())
            .unwrap_or_default();
        let path_hit = CHAT_PATH_FRAGMENTS.iter().find(|f| path.contains(*f)).and_then(|f| {
            tx.url.to_ascii_lowercase().find(f).map(|at| (at, f.len()))
        });
        let key_hit = parts
            .bodies()
            .into_iter()
            .find_map(|(p, b)| message_key_re().find(b).map(|m| (p, (m.start(), m.len()))));
        if let Some(span) = path_hit {
            d.emit(LeakCategory::PlaintextMessage, Severity::High, Part::Url, span,
                "chat endpoint requested without TLS".into());
        } else if let Some((p, span)) = key_hit {
            d.emit(LeakCategory::PlaintextMessage, Severity::High, p, span,
                "message payload field sent without TLS".into());
        }

        if image_format(parts.resp_body) != ImageFormat::Unknown {
            d.emit(LeakCategory::PlaintextImage, Severity::High, Part::ResponseBody,
                (0, parts.resp_body.len()), "image bytes returned without TLS".into());
        }

        if let Some((p, m)) = parts
            .bodies()
            .into_iter()
            .find_map(|(p, b)| image_url_re().find(b).map(|m| (p, m)))
        {
            d.emit(LeakCategory::PlaintextImageLink, Severity::Medium, p, (m.start(), m.len()),
                "image URL carried in a plaintext body".into());
        }
    }

    let exact = parts
        .query_and_bodies()
        .into_iter()
        .find_map(|(p, base, hay)| coordinate_pair(hay).map(|(o, l)| (p, (base + o, l))));
    if let Some((p, span)) = exact {
        let (sev, how) = if plain { (Severity::High, "without TLS") } else { (Severity::Medium, "over TLS") };
        d.emit(LeakCategory::ExactLocation, sev, p, span, format!("latitude/longitude pair sent {how}"));
    }

    let mut facets = BTreeSet::new();
    let mut coarse_span = None;
    for (p, base, hay) in parts.query_and_bodies() {
        let (f, span) = coarse_facets(hay);
        if let Some((o, l)) = span {
            coarse_span.get_or_insert((p, (base + o, l)));
        }
        facets.extend(f);
    }
    if let Some((p, span)) = coarse_span {
        let sev = if plain { Severity::Medium } else { Severity::Info };
        let list: Vec<&str> = facets.iter().map(String::as_str).collect();
        let desc = format!("coarse location fields ({}) sent", list.join(", "));
        d.emit_with(LeakCategory::CoarseLocation, sev, tx.app(), p, span, desc, facets);
    }

    if let Ok(u) = url::Url::parse(&tx.url) {
        let path = u.path();
        let seg_start = path.rfind('/').map_or(0, |i| i + 1);
        let segment = &path[seg_start..];
        if let Some((o, l)) = coordinate_pair(segment.as_bytes()) {
            let base = tx.url.find(path).unwrap_or(0) + seg_start;
            d.emit(LeakCategory::LocationInFilename, Severity::High, Part::Url, (base + o, l),
                "coordinates embedded in a requested file name".into());
        }
    }

    if plain {
        if let Some((p, m)) = parts
            .all()
            .into_iter()
            .find_map(|(p, b)| email_re().find(b).map(|m| (p, m)))
        {
            d.emit(LeakCategory::EmailAddress, Severity::Medium, p, (m.start(), m.len()),
                "email address sent without TLS".into());
        }
    }

    'tokens: for t in tokens {
        let raw = t.token.as_bytes();
        let encoded = encode_component(&t.token);
        for (p, hay) in parts.all() {
            let at = find_bytes(hay, raw)
                .map(|o| (o, raw.len()))
                .or_else(|| (p == Part::Url).then(|| find_bytes(hay, encoded.as_bytes()).map(|o| (o, encoded.len()))).flatten());
            if let Some(span) = at {
                let sev = if plain { Severity::Medium } else { Severity::Info };
                let app = tx.app_hint.unwrap_or(t.app);
                d.emit_with(LeakCategory::TokenInTransit, sev, app, p, span,
                    format!("{} recovered on the device appears in traffic", t.provider.label()),
                    BTreeSet::new());
                break 'tokens;
            }
        }
    }

    d.out
}

/// Applies every rule to every transaction. At most one finding per
/// (transaction, category); output is ordered by transaction then category.
pub fn detect_leaks(transactions: &[HttpTransaction], known_tokens: &[AuthToken]) -> Vec<LeakFinding> {
    let tokens: Vec<&AuthToken> = known_tokens
        .iter()
        .filter(|t| t.token.len() >= MIN_TOKEN_LEN)
        .collect();
    let mut out: Vec<LeakFinding> = transactions.iter().flat_map(|tx| detect_one(tx, &tokens)).collect();
    out.sort_by_key(|a| (a.evidence.transaction, a.category));
    out
}
