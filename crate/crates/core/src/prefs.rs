//! Android `shared_prefs` XML parsing and per-app key catalogs.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::epoch::normalize_epoch;
use crate::error::{Error, Result};
use crate::model::{
    ActivityMarker, AppId, ArtifactSource, AuthProvider, AuthToken, Heuristic, LocationFix,
    LocationOrigin, LocationPrecision, MarkerKind, Subject,
};
use crate::patterns;

/// Facebook SDK preference files that carry the access token.
pub const FACEBOOK_TOKEN_FILES: [&str; 2] = [
    "com.facebook.SharedPreferencesTokenCachingStrategy.DEFAULT_KEY.xml",
    "com.facebook.AuthorizationClient.WebViewAuthHandler.TOKEN_STORE_KEY.xml",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefType {
    String,
    Int,
    Long,
    Boolean,
    Float,
}

impl PrefType {
    fn from_tag(tag: &[u8]) -> Option<PrefType> {
        match tag {
            b"string" => Some(PrefType::String),
            b"int" => Some(PrefType::Int),
            b"long" => Some(PrefType::Long),
            b"boolean" => Some(PrefType::Boolean),
            b"float" => Some(PrefType::Float),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrefValue {
    Str(String),
    Int(i64),
    Bool(bool),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefEntry {
    pub ty: PrefType,
    /// Value exactly as written in the file (after XML unescaping).
    pub raw: String,
    pub value: PrefValue,
}

impl PrefEntry {
    pub fn as_str(&self) -> Option<&str> {
        match &self.value {
            PrefValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match &self.value {
            PrefValue::Int(i) => Some(*i),
            PrefValue::Str(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match &self.value {
            PrefValue::Float(f) => Some(*f),
            PrefValue::Int(i) => Some(*i as f64),
            PrefValue::Str(s) => s.trim().parse().ok(),
            PrefValue::Bool(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefsDocument {
    pub source: ArtifactSource,
    pub entries: BTreeMap<String, PrefEntry>,
    pub warnings: Vec<String>,
}

impl PrefsDocument {
    pub fn file_name(&self) -> &str {
        self.source
            .file_path
            .rsplit('/')
            .next()
            .unwrap_or_default()
    }
}

fn parse_error<R>(reader: &Reader<R>, reason: impl Into<String>) -> Error {
    Error::PrefsParse {
        offset: reader.buffer_position(),
        reason: reason.into(),
    }
}

fn attr(reader: &Reader<&[u8]>, e: &BytesStart<'_>, key: &[u8]) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| parse_error(reader, err.to_string()))?;
        if a.key.as_ref() == key {
            let v = a
                .unescape_value()
                .map_err(|err| parse_error(reader, err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn typed_value(reader: &Reader<&[u8]>, ty: PrefType, raw: &str) -> Result<PrefValue> {
    let bad = || parse_error(reader, format!("invalid {ty:?} value {raw:?}"));
    Ok(match ty {
        PrefType::String => PrefValue::Str(raw.to_string()),
        PrefType::Int | PrefType::Long => PrefValue::Int(raw.trim().parse().map_err(|_| bad())?),
        PrefType::Float => PrefValue::Float(raw.trim().parse().map_err(|_| bad())?),
        PrefType::Boolean => match raw.trim() {
            "true" => PrefValue::Bool(true),
            "false" => PrefValue::Bool(false),
            _ => return Err(bad()),
        },
    })
}

/// Parses the standard `<map>` dialect. Every typed child of the root map
/// becomes one entry; other children are skipped with a warning.
pub fn parse_prefs_xml(bytes: &[u8], source: ArtifactSource) -> Result<PrefsDocument> {
    let mut reader = Reader::from_reader(bytes);
    let mut entries = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut in_map = false;
    let mut closed = false;
    // (key, accumulated text) of the <string> element being read.
    let mut open_string: Option<(String, String)> = None;

    let insert = |entries: &mut BTreeMap<String, PrefEntry>,
                      warnings: &mut Vec<String>,
                      key: String,
                      entry: PrefEntry| {
        match entries.entry(key) {
            Entry::Occupied(o) => warnings.push(format!("duplicate key {:?}, first value kept", o.key())),
            Entry::Vacant(v) => {
                v.insert(entry);
            }
        }
    };

    loop {
        let event = reader
            .read_event()
            .map_err(|e| parse_error(&reader, e.to_string()))?;
        match event {
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Start(e) | Event::Empty(e) if closed => {
                let _ = e;
                return Err(parse_error(&reader, "content after root element"));
            }
            Event::Start(e) if !in_map => {
                if e.name().as_ref() != b"map" {
                    return Err(parse_error(&reader, "root element is not <map>"));
                }
                in_map = true;
            }
            Event::Empty(e) if !in_map => {
                if e.name().as_ref() != b"map" {
                    return Err(parse_error(&reader, "root element is not <map>"));
                }
                closed = true;
            }
            Event::Start(e) => {
                if open_string.is_some() {
                    return Err(parse_error(&reader, "element nested inside <string>"));
                }
                let tag = e.name().as_ref().to_vec();
                let name = attr(&reader, &e, b"name")?;
                match (PrefType::from_tag(&tag), name) {
                    (Some(PrefType::String), Some(name)) => open_string = Some((name, String::new())),
                    (Some(ty), Some(name)) => {
                        let raw = attr(&reader, &e, b"value")?
                            .ok_or_else(|| parse_error(&reader, "missing value attribute"))?;
                        let value = typed_value(&reader, ty, &raw)?;
                        reader
                            .read_to_end(e.name())
                            .map_err(|err| parse_error(&reader, err.to_string()))?;
                        insert(&mut entries, &mut warnings, name, PrefEntry { ty, raw, value });
                    }
                    (Some(_), None) => return Err(parse_error(&reader, "missing name attribute")),
                    (None, name) => {
                        warnings.push(format!(
                            "skipped <{}> entry {:?}",
                            String::from_utf8_lossy(&tag),
                            name.unwrap_or_default()
                        ));
                        reader
                            .read_to_end(e.name())
                            .map_err(|err| parse_error(&reader, err.to_string()))?;
                    }
                }
            }
            Event::Empty(e) => {
                let tag = e.name().as_ref().to_vec();
                let name = attr(&reader, &e, b"name")?;
                match (PrefType::from_tag(&tag), name) {
                    (Some(PrefType::String), Some(name)) => insert(
                        &mut entries,
                        &mut warnings,
                        name,
                        PrefEntry {
                            ty: PrefType::String,
                            raw: String::new(),
                            value: PrefValue::Str(String::new()),
                        },
                    ),
                    (Some(ty), Some(name)) => {
                        let raw = attr(&reader, &e, b"value")?
                            .ok_or_else(|| parse_error(&reader, "missing value attribute"))?;
                        let value = typed_value(&reader, ty, &raw)?;
                        insert(&mut entries, &mut warnings, name, PrefEntry { ty, raw, value });
                    }
                    (Some(_), None) => return Err(parse_error(&reader, "missing name attribute")),
                    (None, name) => warnings.push(format!(
                        "skipped <{}> entry {:?}",
                        String::from_utf8_lossy(&tag),
                        name.unwrap_or_default()
                    )),
                }
            }
            Event::Text(t) => {
                if let Some((_, text)) = open_string.as_mut() {
                    let unescaped = t
                        .unescape()
                        .map_err(|err| parse_error(&reader, err.to_string()))?;
                    text.push_str(&unescaped);
                } else if !t.iter().all(|b| b.is_ascii_whitespace()) {
                    return Err(parse_error(&reader, "unexpected text"));
                }
            }
            Event::CData(c) => match open_string.as_mut() {
                Some((_, text)) => text.push_str(&String::from_utf8_lossy(&c)),
                None => return Err(parse_error(&reader, "unexpected CDATA")),
            },
            Event::End(e) => {
                if let Some((name, text)) = open_string.take() {
                    if e.name().as_ref() != b"string" {
                        return Err(parse_error(&reader, "mismatched end tag"));
                    }
                    let entry = PrefEntry {
                        ty: PrefType::String,
                        raw: text.clone(),
                        value: PrefValue::Str(text),
                    };
                    insert(&mut entries, &mut warnings, name, entry);
                } else if e.name().as_ref() == b"map" && in_map {
                    in_map = false;
                    closed = true;
                } else {
                    return Err(parse_error(&reader, "unexpected end tag"));
                }
            }
        }
    }
    if !closed {
        return Err(parse_error(&reader, "document has no complete <map> root"));
    }
    Ok(PrefsDocument {
        source,
        entries,
        warnings,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrefsExtraction {
    pub tokens: Vec<AuthToken>,
    pub locations: Vec<LocationFix>,
    pub emails: Vec<String>,
    pub last_active: Option<ActivityMarker>,
    pub owner_id: Option<String>,
    pub heuristics: BTreeSet<Heuristic>,
    pub warnings: Vec<String>,
}

impl PrefsExtraction {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
            && self.locations.is_empty()
            && self.emails.is_empty()
            && self.last_active.is_none()
            && self.owner_id.is_none()
    }
}

fn norm_key(key: &str) -> String {
    key.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

const OWNER_KEYS: [&str; 6] = [
    "userid",
    "profileid",
    "myid",
    "ownerid",
    "myuserid",
    "currentuserid",
];

/// Which provider a token-like key in an app-native prefs file belongs to.
fn native_token_provider(app: AppId, file: &str, key: &str) -> Option<AuthProvider> {
    let k = norm_key(key);
    match (app, file) {
        (AppId::Grindr, "Rules.xml") => Some(AuthProvider::Grindr),
        (AppId::Tinder, "SP.xml") if k.contains("facebook") || k.contains("fb") => {
            Some(AuthProvider::Facebook)
        }
        (AppId::Tinder, "SP.xml") => Some(AuthProvider::Tinder),
        (AppId::Skout, "LOGIN_PREFS.xml") => Some(AuthProvider::Facebook),
        (AppId::MiuMeet, _) => Some(AuthProvider::MiuMeet),
        _ => None,
    }
}

/// Pulls tokens, emails, coordinates and activity times out of one prefs
/// document. Pure in `(doc, app)`.
pub fn extract_known_prefs(doc: &PrefsDocument, app: AppId) -> PrefsExtraction {
    let mut out = PrefsExtraction::default();
    let mut consumed: BTreeSet<&str> = BTreeSet::new();
    let file = doc.file_name();

    if FACEBOOK_TOKEN_FILES.contains(&file) {
        let mut best: Option<(&str, &str)> = None;
        for (key, entry) in &doc.entries {
            if !key.to_ascii_lowercase().contains("token") {
                continue;
            }
            consumed.insert(key);
            if let Some(value) = entry.as_str().filter(|v| !v.is_empty()) {
                if best.is_none_or(|(_, b)| value.len() > b.len()) {
                    best = Some((key, value));
                }
            }
        }
        let expiry = doc
            .entries
            .iter()
            .find(|(k, _)| k.to_ascii_lowercase().contains("expir"))
            .and_then(|(k, e)| {
                consumed.insert(k);
                e.as_i64().and_then(|raw| normalize_epoch(raw).ok())
            })
            .map(|(at, _)| at);
        if let Some((key, value)) = best {
            out.heuristics.insert(Heuristic::FacebookTokenKeyMatch);
            out.tokens.push(AuthToken {
                provider: AuthProvider::Facebook,
                app,
                token: value.to_string(),
                source: doc.source.with_record(format!("key={key}")),
                expiry_hint: expiry,
            });
        }
    } else if app != AppId::Unknown {
        extract_app_native(doc, app, file, &mut out, &mut consumed);
    }

    let unknown = doc
        .entries
        .keys()
        .filter(|k| !consumed.contains(k.as_str()))
        .count();
    if unknown > 0 {
        out.warnings
            .push(format!("{}: {unknown} unrecognized keys ignored", doc.source.file_path));
    }
    out
}

fn extract_app_native<'d>(
    doc: &'d PrefsDocument,
    app: AppId,
    file: &str,
    out: &mut PrefsExtraction,
    consumed: &mut BTreeSet<&'d str>,
) {
    let mut lat: Option<(&str, f64)> = None;
    let mut lon: Option<(&str, f64)> = None;

    for (key, entry) in &doc.entries {
        let k = norm_key(key);

        if OWNER_KEYS.contains(&k.as_str()) {
            if let Some(id) = entry.as_str().map(str::to_string).or_else(|| {
                entry.as_i64().map(|i| i.to_string())
            }) {
                if !id.is_empty() && out.owner_id.is_none() {
                    out.owner_id = Some(id);
                    out.heuristics.insert(Heuristic::OwnerIdKeyMatch);
                    consumed.insert(key);
                    continue;
                }
            }
        }

        if k.contains("token") {
            if let (Some(provider), Some(value)) = (
                native_token_provider(app, file, key),
                entry.as_str().filter(|v| !v.is_empty()),
            ) {
                if provider == AuthProvider::Facebook {
                    out.heuristics.insert(Heuristic::FacebookTokenKeyMatch);
                }
                out.tokens.push(AuthToken {
                    provider,
                    app,
                    token: value.to_string(),
                    source: doc.source.with_record(format!("key={key}")),
                    expiry_hint: None,
                });
                consumed.insert(key);
                continue;
            }
        }

        if app == AppId::Grindr && k.contains("session") {
            out.warnings.push(format!(
                "{}: session id present under {key:?}, not modeled",
                doc.source.file_path
            ));
            consumed.insert(key);
            continue;
        }

        let marker_kind = if k.contains("lastactive") {
            Some(MarkerKind::LastActive)
        } else if k.contains("lastsenttime") {
            Some(MarkerKind::LocationLastSent)
        } else {
            None
        };
        if let Some(kind) = marker_kind {
            consumed.insert(key);
            match entry.as_i64().map(normalize_epoch) {
                Some(Ok((at, time_unit))) => {
                    out.last_active = Some(ActivityMarker {
                        app,
                        kind,
                        at,
                        time_unit,
                        source: doc.source.with_record(format!("key={key}")),
                    });
                }
                _ => out.warnings.push(format!(
                    "{}: {key:?} is not a usable epoch: {:?}",
                    doc.source.file_path, entry.raw
                )),
            }
            continue;
        }

        if let Some(value) = entry.as_str().filter(|v| patterns::email_exact().is_match(v)) {
            out.emails.push(value.to_string());
            consumed.insert(key);
            continue;
        }

        if entry.ty != crate::prefs::PrefType::Boolean {
            if let Some(v) = entry.as_f64() {
                if k.contains("lat") && (-90.0..=90.0).contains(&v) && lat.is_none() {
                    lat = Some((key, v));
                    continue;
                }
                if (k.contains("lon") || k.contains("lng"))
                    && (-180.0..=180.0).contains(&v)
                    && lon.is_none()
                {
                    lon = Some((key, v));
                    continue;
                }
            }
        }
    }

    if let (Some((lat_key, lat)), Some((lon_key, lon))) = (lat, lon) {
        consumed.insert(lat_key);
        consumed.insert(lon_key);
        out.heuristics.insert(Heuristic::LatLonKeyMatch);
        out.locations.push(LocationFix {
            app,
            precision: LocationPrecision::Exact { lat, lon },
            at: None,
            subject: Subject::Owner,
            origin: LocationOrigin::Prefs,
            source: doc
                .source
                .with_record(format!("keys={lat_key},{lon_key}")),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FileKind, TimeUnit};

    fn src(name: &str) -> ArtifactSource {
        ArtifactSource::file(format!("data/data/pkg/shared_prefs/{name}"), FileKind::PrefsXml)
    }

    fn parse(name: &str, xml: &str) -> PrefsDocument {
        parse_prefs_xml(xml.as_bytes(), src(name)).unwrap()
    }

    #[test]
    fn single_string_entry() {
        let doc = parse("a.xml", r#"<map><string name="email">a@b.c</string></map>"#);
        assert_eq!(doc.entries.len(), 1);
        let e = &doc.entries["email"];
        assert_eq!(e.ty, PrefType::String);
        assert_eq!(e.raw, "a@b.c");
    }

    #[test]
    fn empty_map() {
        assert!(parse("a.xml", "<map/>").entries.is_empty());
        assert!(parse("a.xml", "<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n</map>\n")
            .entries
            .is_empty());
    }

    #[test]
    fn typed_entries_and_escapes() {
        let doc = parse(
            "a.xml",
            r#"<?xml version='1.0' encoding='utf-8' standalone='yes' ?>
<map>
    <string name="s">a &amp; b &lt;c&gt;</string>
    <int name="i" value="-3" />
    <long name="l" value="1403136000000" />
    <boolean name="b" value="true" />
    <float name="f" value="1.5" />
    <string name="empty"></string>
    <string name="empty2" />
    <set name="ignored"><string>x</string></set>
</map>"#,
        );
        assert_eq!(doc.entries.len(), 7);
        assert_eq!(doc.entries["s"].raw, "a & b <c>");
        assert_eq!(doc.entries["i"].value, PrefValue::Int(-3));
        assert_eq!(doc.entries["l"].value, PrefValue::Int(1_403_136_000_000));
        assert_eq!(doc.entries["b"].value, PrefValue::Bool(true));
        assert_eq!(doc.entries["f"].value, PrefValue::Float(1.5));
        assert_eq!(doc.entries["empty"].raw, "");
        assert_eq!(doc.entries["empty2"].raw, "");
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let err = parse_prefs_xml(b"<map><string name=\"a\">x</strin></map>", src("a.xml"))
            .unwrap_err();
        match err {
            Error::PrefsParse { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_prefs_xml(b"<map><int name=\"a\" value=\"x\"/></map>", src("a.xml")).is_err());
        assert!(parse_prefs_xml(b"<other/>", src("a.xml")).is_err());
        assert!(parse_prefs_xml(b"<map>", src("a.xml")).is_err());
        assert!(parse_prefs_xml(b"", src("a.xml")).is_err());
    }

    #[test]
    fn tinder_sp_xml_typed_entries() {
        let doc = parse(
            "SP.xml",
            r#"<map><string name="auth_token">tt-123</string><float name="last_lat" value="-34.9285" /><float name="last_lon" value="138.6007" /></map>"#,
        );
        assert_eq!(doc.entries.len(), 3);
        let out = extract_known_prefs(&doc, AppId::Tinder);
        assert_eq!(out.tokens.len(), 1);
        assert_eq!(out.tokens[0].provider, AuthProvider::Tinder);
        assert_eq!(out.locations.len(), 1);
        assert_eq!(
            out.locations[0].precision,
            LocationPrecision::Exact { lat: -34.9285, lon: 138.6007 }
        );
        assert_eq!(out.locations[0].subject, Subject::Owner);
        assert!(out.heuristics.contains(&Heuristic::LatLonKeyMatch));
    }

    #[test]
    fn grindr_rules_xml() {
        let doc = parse(
            "Rules.xml",
            r#"<map><string name="grindr_token">gt-abc</string><string name="session_id">s1</string><long name="last_active_time" value="1403136000000" /><string name="email">someone@example.com</string></map>"#,
        );
        let out = extract_known_prefs(&doc, AppId::Grindr);
        assert_eq!(out.tokens.len(), 1);
        assert_eq!(out.tokens[0].provider, AuthProvider::Grindr);
        assert_eq!(out.tokens[0].source.file_path, doc.source.file_path);
        assert_eq!(out.emails, vec!["someone@example.com".to_string()]);
        let marker = out.last_active.unwrap();
        assert_eq!(marker.kind, MarkerKind::LastActive);
        assert_eq!(marker.at, normalize_epoch(1_403_136_000_000).unwrap().0);
        assert_eq!(marker.time_unit, TimeUnit::Milliseconds);
        assert!(out.warnings.iter().any(|w| w.contains("session")));
    }

    #[test]
    fn skout_location_last_sent_time() {
        let doc = parse(
            "LOCATION_PREFS.xml",
            r#"<map><long name="LOCATION_LAST_SENT_TIME" value="1403136000" /></map>"#,
        );
        let out = extract_known_prefs(&doc, AppId::Skout);
        let marker = out.last_active.unwrap();
        assert_eq!((marker.at, marker.time_unit), normalize_epoch(1_403_136_000).unwrap());
        assert_eq!(marker.kind, MarkerKind::LocationLastSent);
    }

    #[test]
    fn empty_document_yields_nothing() {
        let doc = parse("Rules.xml", "<map/>");
        let out = extract_known_prefs(&doc, AppId::Grindr);
        assert!(out.is_empty());
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn facebook_file_longest_token_wins_for_any_app() {
        let doc = parse(
            FACEBOOK_TOKEN_FILES[0],
            r#"<map><string name="com.facebook.TokenCachingStrategy.Token">CAAXlonger</string><string name="other_token">CAA</string><long name="com.facebook.TokenCachingStrategy.ExpirationDate" value="1403136000000" /><string name="misc">x</string></map>"#,
        );
        for app in [AppId::Unknown, AppId::Badoo] {
            let out = extract_known_prefs(&doc, app);
            assert_eq!(out.tokens.len(), 1);
            assert_eq!(out.tokens[0].token, "CAAXlonger");
            assert_eq!(out.tokens[0].provider, AuthProvider::Facebook);
            assert_eq!(
                out.tokens[0].expiry_hint,
                Some(normalize_epoch(1_403_136_000_000).unwrap().0)
            );
            assert_eq!(out.warnings.len(), 1, "misc is counted as unknown");
        }
    }

    #[test]
    fn unknown_app_ignores_native_rules() {
        let doc = parse("SP.xml", r#"<map><string name="auth_token">x</string></map>"#);
        let out = extract_known_prefs(&doc, AppId::Unknown);
        assert!(out.tokens.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn out_of_range_coordinates_are_not_locations() {
        let doc = parse(
            "SP.xml",
            r#"<map><float name="lat" value="123.5" /><float name="lon" value="10.0" /></map>"#,
        );
        assert!(extract_known_prefs(&doc, AppId::Tinder).locations.is_empty());
    }

    #[test]
    fn extraction_is_idempotent() {
        let doc = parse(
            "SP.xml",
            r#"<map><string name="facebook_token">f</string><string name="user_id">u1</string></map>"#,
        );
        let a = extract_known_prefs(&doc, AppId::Tinder);
        let b = extract_known_prefs(&doc, AppId::Tinder);
        assert_eq!(a, b);
        assert_eq!(a.owner_id.as_deref(), Some("u1"));
        assert_eq!(a.tokens[0].provider, AuthProvider::Facebook);
    }
}
