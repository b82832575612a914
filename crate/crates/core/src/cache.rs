//! Image and request caches: Picasso pairs, volley JSON, carved blobs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::digest::sha256_hex;
use crate::epoch::{normalize_epoch, parse_epoch_text};
use crate::error::{Error, Result};
use crate::model::{
    AppId, ArtifactSource, CachedImage, CarvedMessagePreview, FileKind, ImageCache, ImageFormat,
    Instant, VolleyMatchEvent,
};
use crate::patterns;

pub fn image_format(bytes: &[u8]) -> ImageFormat {
    match crate::scan::classify_file("", bytes.get(..16).unwrap_or(bytes)) {
        FileKind::Jpeg => ImageFormat::Jpeg,
        FileKind::Png => ImageFormat::Png,
        FileKind::WebP => ImageFormat::WebP,
        _ => ImageFormat::Unknown,
    }
}

pub fn image_file_kind(format: ImageFormat) -> FileKind {
    match format {
        ImageFormat::Jpeg => FileKind::Jpeg,
        ImageFormat::Png => FileKind::Png,
        ImageFormat::WebP => FileKind::WebP,
        ImageFormat::Unknown => FileKind::Opaque,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PicassoEntry {
    pub meta_path: String,
    pub image_path: String,
    pub request_url: String,
    pub image: CachedImage,
}

/// Request-target of the first line starting with `GET `.
pub fn picasso_request_url(meta: &[u8]) -> Result<String> {
    let text = String::from_utf8_lossy(meta);
    text.lines()
        .find_map(|line| line.strip_prefix("GET "))
        .and_then(|rest| rest.split_whitespace().next())
        .map(str::to_string)
        .ok_or_else(|| Error::CacheParse("no GET request line in Picasso metadata".to_string()))
}

pub fn parse_picasso_pair(
    app: AppId,
    meta_path: &str,
    image_path: &str,
    meta: &[u8],
    image: &[u8],
) -> Result<PicassoEntry> {
    let request_url = picasso_request_url(meta)?;
    let format = image_format(image);
    Ok(PicassoEntry {
        meta_path: meta_path.to_string(),
        image_path: image_path.to_string(),
        image: CachedImage {
            app,
            origin_url: Some(request_url.clone()),
            content_hash: sha256_hex(image),
            format,
            cache: ImageCache::Picasso,
            bytes_ref: ArtifactSource::file(image_path, image_file_kind(format)),
        },
        request_url,
    })
}

/// A cached image with no recorded origin.
pub fn plain_image(app: AppId, path: &str, bytes: &[u8], cache: ImageCache) -> CachedImage {
    let format = image_format(bytes);
    CachedImage {
        app,
        origin_url: None,
        content_hash: sha256_hex(bytes),
        format,
        cache,
        bytes_ref: ArtifactSource::file(path, image_file_kind(format)),
    }
}

const MATCH_ID_KEYS: [&str; 2] = ["match_id", "matchId"];
const MATCHED_KEYS: [&str; 2] = ["matched", "is_match"];
const DATE_KEYS: [&str; 3] = ["date", "created_date", "occurred_at"];

fn json_instant(v: &Value) -> Option<Instant> {
    match v {
        Value::Number(n) => n.as_i64().and_then(|i| normalize_epoch(i).ok()).map(|t| t.0),
        Value::String(s) => parse_epoch_text(s).ok().map(|t| t.0),
        _ => None,
    }
}

fn collect_events(v: &Value, app: AppId, source: &ArtifactSource, out: &mut Vec<VolleyMatchEvent>) {
    match v {
        Value::Object(map) => {
            let id = MATCH_ID_KEYS.iter().find_map(|k| match map.get(*k) {
                Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                _ => None,
            });
            if let Some(match_id) = id {
                out.push(VolleyMatchEvent {
                    app,
                    match_id,
                    matched: MATCHED_KEYS.iter().find_map(|k| map.get(*k)?.as_bool()),
                    occurred_at: DATE_KEYS.iter().find_map(|k| json_instant(map.get(*k)?)),
                    source: source.clone(),
                });
            }
            for child in map.values() {
                collect_events(child, app, source, out);
            }
        }
        Value::Array(items) => {
            for child in items {
                collect_events(child, app, source, out);
            }
        }
        _ => {}
    }
}

/// Scans to every `{` and parses the JSON value starting there, skipping
/// binary entry headers. Events come out in file order.
pub fn parse_volley_match_cache(
    bytes: &[u8],
    app: AppId,
    source: &ArtifactSource,
) -> (Vec<VolleyMatchEvent>, Vec<String>) {
    let mut events = Vec::new();
    let mut found_json = false;
    let mut pos = 0;
    while let Some(off) = bytes[pos..].iter().position(|&b| b == b'{') {
        let start = pos + off;
        let mut stream = serde_json::Deserializer::from_slice(&bytes[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(value)) => {
                found_json = true;
                let at = source.with_range(start as u64, stream.byte_offset() as u64);
                collect_events(&value, app, &at, &mut events);
                pos = start + stream.byte_offset();
            }
            _ => pos = start + 1,
        }
    }
    let mut warnings = Vec::new();
    if !found_json && !bytes.is_empty() {
        warnings.push(format!("{}: no JSON found in cache entry", source.file_path));
    }
    (events, warnings)
}

/// Adjacency rules for string carving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarveGrammar {
    /// Minimum printable characters in a run.
    pub min_run: usize,
    /// Maximum bytes between consecutive runs of one record.
    pub max_gap: usize,
}

impl Default for CarveGrammar {
    fn default() -> Self {
        CarveGrammar {
            min_run: 3,
            max_gap: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringRun {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

fn utf8_len(lead: u8) -> usize {
    match lead {
        0x00..=0x7F => 1,
        0xC2..=0xDF => 2,
        0xE0..=0xEF => 3,
        0xF0..=0xF4 => 4,
        _ => 0,
    }
}

/// Maximal runs of printable UTF-8 with at least `min_run` characters.
pub fn printable_runs(bytes: &[u8], min_run: usize) -> Vec<StringRun> {
    let mut runs = Vec::new();
    let mut cur: Option<(usize, String)> = None;
    let mut pos = 0;
    let mut flush = |cur: &mut Option<(usize, String)>, end: usize| {
        if let Some((start, text)) = cur.take() {
            if text.chars().count() >= min_run {
                runs.push(StringRun { start, end, text });
            }
        }
    };
    while pos < bytes.len() {
        let n = utf8_len(bytes[pos]);
        let ch = (n > 0 && pos + n <= bytes.len())
            .then(|| std::str::from_utf8(&bytes[pos..pos + n]).ok())
            .flatten()
            .and_then(|s| s.chars().next())
            .filter(|c| !c.is_control());
        match ch {
            Some(c) => {
                cur.get_or_insert_with(|| (pos, String::new())).1.push(c);
                pos += n;
            }
            None => {
                flush(&mut cur, pos);
                pos += 1;
            }
        }
    }
    flush(&mut cur, pos);
    runs
}

fn is_url_run(run: &StringRun) -> bool {
    patterns::url()
        .find(&run.text)
        .is_some_and(|m| m.start() == 0 && m.end() == run.text.len())
}

/// Groups runs into `username, picture URL, last message, suburb` records
/// anchored on the URL run. Only complete records are emitted, in offset
/// order, each with the byte range it spans.
pub fn carve_string_records(
    bytes: &[u8],
    grammar: &CarveGrammar,
    app: AppId,
    source: &ArtifactSource,
) -> Vec<CarvedMessagePreview> {
    let runs = printable_runs(bytes, grammar.min_run);
    let mut out = Vec::new();
    let mut next_free = 0;
    let mut i = 1;
    while i + 2 < runs.len() {
        let window = &runs[i - 1..=i + 2];
        let shaped = i > next_free
            && is_url_run(&window[1])
            && !is_url_run(&window[0])
            && !is_url_run(&window[2])
            && !is_url_run(&window[3])
            && window.windows(2).all(|w| w[1].start - w[0].end <= grammar.max_gap);
        if shaped {
            let (start, end) = (window[0].start, window[3].end);
            out.push(CarvedMessagePreview {
                app,
                username: window[0].text.clone(),
                profile_pic_url: window[1].text.clone(),
                last_message: window[2].text.clone(),
                location_suburb: window[3].text.clone(),
                source: source.with_range(start as u64, (end - start) as u64),
            });
            next_free = i + 3;
            i += 4;
        } else {
            i += 1;
        }
    }
    out
}
