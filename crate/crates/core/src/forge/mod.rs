//! Deterministic synthetic evidence: directory trees, databases, prefs,
//! caches and transaction logs, together with the ground truth an
//! extractor must reproduce.

mod apps;
mod netlog;
pub mod words;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate};
use regex::Regex;
use rusqlite::types::Value;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use crate::correlate::{link_profile_images, LinkVia};
use crate::db::schema::{create_table_sql, TableSpec};
use crate::error::{Error, IoContext, Result};
use crate::model::{
    AppId, AuthToken, CachedImage, CarvedMessagePreview, ChatMessage, EvidenceBundle, Instant, LocationFix,
    MatchRecord, MediaRecord, MediaUrl, ProfileRecord, RawValue, VolleyMatchEvent,
};
use crate::netleak::LeakCategory;
use crate::registry::DOCUMENTED_PACKAGES;

pub use netlog::{forge_transaction_log, ForgedLog, PlantedLeak};

/// Seconds; all forged activity falls in the month after this instant.
pub const BASE_EPOCH: i64 = 1_401_580_800;

/// Evidence-tree path of the forged transaction log.
pub const HTTP_LOG_PATH: &str = "capture/http_log.ndjson";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppCounts {
    pub profiles: usize,
    pub messages: usize,
    pub matches: usize,
    pub images: usize,
    pub location_fixes: usize,
    pub previews: usize,
    pub tokens: usize,
    pub emails: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Malformed {
    pub prefs: bool,
    pub database: bool,
    pub cache: bool,
    pub netlog: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakPlan {
    pub app: String,
    pub category: LeakCategory,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeSpec {
    pub seed: u64,
    /// Keyed by app name, e.g. `"Grindr"` or `"Meet Me"`.
    pub apps: BTreeMap<String, AppCounts>,
    pub leaks: Vec<LeakPlan>,
    pub decoys: usize,
    pub inject_malformed: Malformed,
    /// Regular expressions no forged value may match.
    pub deny_patterns: Vec<String>,
}

impl ForgeSpec {
    pub fn from_json(text: &str) -> Result<ForgeSpec> {
        serde_json::from_str(text).map_err(|e| Error::Forge(format!("invalid spec: {e}")))
    }

    /// Apps in the spec, resolved and in [`AppId`] order.
    pub fn resolved_apps(&self) -> Result<BTreeMap<AppId, AppCounts>> {
        self.apps
            .iter()
            .map(|(name, counts)| {
                AppId::from_name(name)
                    .filter(|a| *a != AppId::Unknown)
                    .map(|a| (a, counts.clone()))
                    .ok_or_else(|| Error::Forge(format!("unknown app {name:?}")))
            })
            .collect()
    }

    /// Seed 42 with every app populated and one planted leak per cell the
    /// summary matrix expects from network traffic.
    pub fn canonical() -> ForgeSpec {
        let counts = |profiles, messages, matches, images, location_fixes, previews, emails| AppCounts {
            profiles,
            messages,
            matches,
            images,
            location_fixes,
            previews,
            tokens: 1,
            emails,
        };
        let apps = [
            ("Badoo", counts(0, 0, 0, 2, 0, 2, 0)),
            ("Grindr", counts(3, 5, 0, 3, 0, 0, 1)),
            ("Skout", counts(2, 4, 0, 0, 0, 0, 0)),
            ("Tinder", counts(2, 6, 2, 2, 3, 0, 0)),
            ("Meet Me", counts(0, 3, 0, 2, 0, 0, 0)),
            ("Jaumo", counts(2, 0, 0, 0, 0, 0, 0)),
            ("FullCircle", counts(0, 0, 0, 0, 0, 0, 0)),
            ("MiuMeet", counts(0, 0, 0, 0, 0, 0, 0)),
        ]
        .into_iter()
        .map(|(n, c)| (n.to_string(), c))
        .collect();
        use LeakCategory::*;
        let leaks = [
            ("Grindr", ExactLocation),
            ("Tinder", ExactLocation),
            ("Skout", CoarseLocation),
            ("Skout", PlaintextImageLink),
            ("Jaumo", LocationInFilename),
            ("FullCircle", PlaintextMessage),
            ("FullCircle", PlaintextImage),
            ("FullCircle", EmailAddress),
            ("FullCircle", CoarseLocation),
            ("MiuMeet", PlaintextMessage),
            ("MiuMeet", PlaintextImageLink),
            ("MiuMeet", ExactLocation),
            ("MiuMeet", CoarseLocation),
            ("MiuMeet", EmailAddress),
            ("MiuMeet", TokenInTransit),
        ]
        .into_iter()
        .map(|(app, category)| LeakPlan {
            app: app.to_string(),
            category,
            count: 1,
        })
        .collect();
        ForgeSpec {
            seed: 42,
            apps,
            leaks,
            decoys: 20,
            ..ForgeSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgedTable {
    pub app: AppId,
    pub db_path: String,
    pub table: String,
    pub columns: Vec<String>,
    pub row_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgedImageLink {
    pub app: AppId,
    pub profile_id: String,
    pub content_hash: String,
    pub origin_url: String,
    pub via: LinkVia,
}

/// Ground truth for one forged corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForgeManifest {
    pub seed: u64,
    /// `(app, package_path)` for each created install.
    pub installs: Vec<(AppId, String)>,
    pub owners: BTreeMap<AppId, String>,
    pub messages: Vec<ChatMessage>,
    pub profiles: Vec<ProfileRecord>,
    pub matches: Vec<MatchRecord>,
    pub tokens: Vec<AuthToken>,
    pub images: Vec<CachedImage>,
    pub image_links: Vec<ForgedImageLink>,
    pub media: Vec<MediaRecord>,
    pub media_urls: Vec<MediaUrl>,
    pub locations: Vec<LocationFix>,
    pub volley_events: Vec<VolleyMatchEvent>,
    pub previews: Vec<CarvedMessagePreview>,
    pub emails: Vec<String>,
    pub tables: Vec<ForgedTable>,
    /// Files written deliberately broken.
    pub malformed: Vec<String>,
    pub http_log: Option<String>,
    pub planted_leaks: Vec<PlantedLeak>,
}

pub(crate) fn package_of(app: AppId) -> &'static str {
    DOCUMENTED_PACKAGES
        .iter()
        .find(|(_, a)| *a == app)
        .map(|(p, _)| *p)
        .unwrap_or(match app {
            AppId::MeetMe => "com.myyearbook.m",
            AppId::Jaumo => "com.jaumo",
            AppId::FullCircle => "com.fullcircle.android",
            AppId::MiuMeet => "com.miumeet.android",
            _ => "unknown.app",
        })
}

/// Stream ids: one per app and purpose, plus one for the network log.
pub(crate) fn stream(app: AppId, purpose: u64) -> u64 {
    let idx = AppId::KNOWN.iter().position(|a| *a == app).unwrap_or(8) as u64;
    idx * 16 + purpose
}

pub(crate) const CORPUS: u64 = 0;
pub(crate) const TOKENS: u64 = 1;
pub(crate) const NETLOG_STREAM: u64 = 1 << 20;

pub(crate) fn secs(s: i64) -> Instant {
    DateTime::from_timestamp(s, 0).expect("forged times are in range")
}

pub(crate) fn millis(ms: i64) -> Instant {
    DateTime::from_timestamp_millis(ms).expect("forged times are in range")
}

pub(crate) fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid forged date")
}

pub(crate) fn text(s: impl Into<String>) -> RawValue {
    RawValue::Text(s.into())
}

/// One row in schema column order; unset columns are NULL.
pub(crate) fn spec_row(spec: &TableSpec, values: &[(&str, RawValue)]) -> Vec<(String, RawValue)> {
    for (name, _) in values {
        debug_assert!(spec.columns.iter().any(|c| c.name == *name), "{}.{name}", spec.name);
    }
    spec.columns
        .iter()
        .map(|c| {
            let v = values
                .iter()
                .find(|(n, _)| *n == c.name)
                .map(|(_, v)| v.clone())
                .unwrap_or(RawValue::Null);
            (c.name.to_string(), v)
        })
        .collect()
}

pub(crate) fn fields(row: &[(String, RawValue)]) -> BTreeMap<String, RawValue> {
    row.iter().cloned().collect()
}

fn sql_value(v: &RawValue) -> Value {
    match v {
        RawValue::Null => Value::Null,
        RawValue::Integer(i) => Value::Integer(*i),
        RawValue::Real(r) => Value::Real(*r),
        RawValue::Text(s) => Value::Text(s.clone()),
        RawValue::Blob(h) => Value::Blob(hex::decode(h).unwrap_or_default()),
    }
}

pub(crate) struct DbTable {
    pub name: String,
    pub create: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<(String, RawValue)>>,
}

impl DbTable {
    pub fn from_spec(spec: &TableSpec, rows: Vec<Vec<(String, RawValue)>>) -> DbTable {
        DbTable {
            name: spec.name.to_string(),
            create: create_table_sql(spec),
            columns: if spec.columns.is_empty() {
                vec!["id".to_string()]
            } else {
                spec.columns.iter().map(|c| c.name.to_string()).collect()
            },
            rows,
        }
    }

    pub fn custom(name: &str, columns: &[(&str, &str)], rows: Vec<Vec<(String, RawValue)>>) -> DbTable {
        let decl: Vec<String> = columns.iter().map(|(n, t)| format!("\"{n}\" {t}")).collect();
        DbTable {
            name: name.to_string(),
            create: format!("CREATE TABLE \"{name}\" ({})", decl.join(", ")),
            columns: columns.iter().map(|(n, _)| n.to_string()).collect(),
            rows,
        }
    }
}

/// Writes files under the output root and records what it wrote.
pub(crate) struct Tree<'a> {
    pub root: &'a Path,
    pub manifest: ForgeManifest,
}

impl Tree<'_> {
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).at(parent)?;
        }
        fs::write(&path, bytes).at(&path)
    }

    pub fn mkdir(&mut self, rel: &str) -> Result<()> {
        let path = self.root.join(rel);
        fs::create_dir_all(&path).at(&path)
    }

    pub fn write_db(&mut self, app: AppId, rel: &str, tables: &[DbTable]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).at(parent)?;
        }
        let forge_err = |e: rusqlite::Error| Error::Forge(format!("{rel}: {e}"));
        let mut conn = Connection::open(&path).map_err(forge_err)?;
        let tx = conn.transaction().map_err(forge_err)?;
        for t in tables {
            tx.execute_batch(&t.create).map_err(forge_err)?;
            let marks = vec!["?"; t.columns.len()].join(", ");
            let cols: Vec<String> = t.columns.iter().map(|c| format!("\"{c}\"")).collect();
            let sql = format!("INSERT INTO \"{}\" ({}) VALUES ({marks})", t.name, cols.join(", "));
            for row in &t.rows {
                let vals: Vec<Value> = row.iter().map(|(_, v)| sql_value(v)).collect();
                tx.execute(&sql, rusqlite::params_from_iter(vals)).map_err(forge_err)?;
            }
            self.manifest.tables.push(ForgedTable {
                app,
                db_path: rel.to_string(),
                table: t.name.clone(),
                columns: t.columns.clone(),
                row_count: t.rows.len(),
            });
        }
        tx.commit().map_err(forge_err)?;
        conn.close().map_err(|(_, e)| forge_err(e))
    }
}

pub(crate) enum Pref<'a> {
    Str(&'a str, String),
    Long(&'a str, i64),
    Float(&'a str, String),
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub(crate) fn prefs_xml(entries: &[Pref<'_>]) -> Vec<u8> {
    let mut s = String::from("<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n");
    for e in entries {
        let line = match e {
            Pref::Str(k, v) => format!("    <string name=\"{}\">{}</string>\n", xml_escape(k), xml_escape(v)),
            Pref::Long(k, v) => format!("    <long name=\"{}\" value=\"{v}\" />\n", xml_escape(k)),
            Pref::Float(k, v) => format!("    <float name=\"{}\" value=\"{v}\" />\n", xml_escape(k)),
        };
        s.push_str(&line);
    }
    s.push_str("</map>\n");
    s.into_bytes()
}

fn compile_deny(patterns: &[String]) -> Result<Vec<Regex>> {
    patterns
        .iter()
        .map(|p| Regex::new(p).map_err(|e| Error::Forge(format!("bad deny pattern {p:?}: {e}"))))
        .collect()
}

fn denied_file(root: &Path, deny: &[Regex]) -> Result<Option<(String, String)>> {
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Forge(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let bytes = fs::read(entry.path()).at(entry.path())?;
        let text = String::from_utf8_lossy(&bytes);
        for re in deny {
            if let Some(m) = re.find(&text) {
                let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
                return Ok(Some((rel.to_string_lossy().into_owned(), m.as_str().to_string())));
            }
        }
    }
    Ok(None)
}

fn clear_dir(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.is_dir() {
            fs::remove_dir_all(&path).at(&path)?;
        } else {
            fs::remove_file(&path).at(&path)?;
        }
    }
    Ok(())
}

/// Writes the corpus described by `spec` into the empty directory
/// `outdir` (created if missing) and returns its ground truth.
pub fn forge_corpus(spec: &ForgeSpec, outdir: &Path) -> Result<ForgeManifest> {
    let apps = spec.resolved_apps()?;
    let deny = compile_deny(&spec.deny_patterns)?;
    if outdir.exists() {
        let mut it = fs::read_dir(outdir).at(outdir)?;
        if it.next().is_some() {
            return Err(Error::Forge(format!("output directory {} is not empty", outdir.display())));
        }
    } else {
        fs::create_dir_all(outdir).at(outdir)?;
    }

    let mut tree = Tree {
        root: outdir,
        manifest: ForgeManifest {
            seed: spec.seed,
            ..ForgeManifest::default()
        },
    };
    let result = (|| {
        tree.mkdir("data/data")?;
        for (app, counts) in &apps {
            apps::forge_app(&mut tree, spec.seed, *app, counts)?;
        }
        if let Some((&first, _)) = apps.iter().next() {
            apps::inject_malformed(&mut tree, spec.seed, first, &spec.inject_malformed)?;
        }
        if !spec.leaks.is_empty() || spec.decoys > 0 {
            let log = forge_transaction_log(spec)?;
            tree.write(HTTP_LOG_PATH, &log.ndjson)?;
            tree.manifest.http_log = Some(HTTP_LOG_PATH.to_string());
            tree.manifest.planted_leaks = log.planted;
        }
        if let Some((file, value)) = denied_file(outdir, &deny)? {
            return Err(Error::Forge(format!("{file}: forged value {value:?} matches a deny pattern")));
        }
        Ok(())
    })();
    if let Err(e) = result {
        let _ = clear_dir(outdir);
        return Err(e);
    }
    Ok(tree.manifest)
}

fn sorted_json<T: Serialize>(items: &[T]) -> Vec<String> {
    let mut v: Vec<String> = items
        .iter()
        .map(|i| serde_json::to_value(i).map(|v| v.to_string()).unwrap_or_default())
        .collect();
    v.sort();
    v
}

fn diff_set<T: Serialize>(out: &mut Vec<String>, what: &str, expected: &[T], actual: &[T]) {
    let (e, a) = (sorted_json(expected), sorted_json(actual));
    let missing = e.iter().filter(|x| !a.contains(x)).count();
    let extra = a.iter().filter(|x| !e.contains(x)).count();
    if missing > 0 || extra > 0 || e.len() != a.len() {
        out.push(format!("{what}: expected {}, extracted {}, {missing} missing, {extra} unexpected", e.len(), a.len()));
    }
}

/// Differences between forged ground truth and what extraction recovered.
/// Empty means exact agreement.
pub fn diff_manifest(manifest: &ForgeManifest, bundle: &EvidenceBundle) -> Vec<String> {
    let a = &bundle.artifacts;
    let mut out = Vec::new();
    let installs: Vec<(AppId, String)> =
        bundle.installs.iter().map(|i| (i.app, i.package_path.clone())).collect();
    diff_set(&mut out, "installs", &manifest.installs, &installs);
    if manifest.owners != bundle.owners {
        out.push(format!("owners: expected {:?}, extracted {:?}", manifest.owners, bundle.owners));
    }
    diff_set(&mut out, "messages", &manifest.messages, &a.messages);
    diff_set(&mut out, "profiles", &manifest.profiles, &a.profiles);
    diff_set(&mut out, "matches", &manifest.matches, &a.matches);
    diff_set(&mut out, "tokens", &manifest.tokens, &a.tokens);
    diff_set(&mut out, "images", &manifest.images, &a.images);
    diff_set(&mut out, "media", &manifest.media, &a.media);
    diff_set(&mut out, "media_urls", &manifest.media_urls, &a.media_urls);
    diff_set(&mut out, "locations", &manifest.locations, &a.locations);
    diff_set(&mut out, "volley_events", &manifest.volley_events, &a.volley_events);
    diff_set(&mut out, "previews", &manifest.previews, &a.previews);
    let emails: Vec<String> = a.emails.iter().map(|e| e.address.clone()).collect();
    let missing: Vec<&String> = manifest.emails.iter().filter(|e| !emails.contains(e)).collect();
    if !missing.is_empty() {
        out.push(format!("emails: {} forged addresses not recovered", missing.len()));
    }
    let links: Vec<ForgedImageLink> = link_profile_images(bundle)
        .into_iter()
        .map(|l| ForgedImageLink {
            app: l.app,
            profile_id: l.profile_id,
            content_hash: l.content_hash,
            origin_url: l.origin_url,
            via: l.via,
        })
        .collect();
    diff_set(&mut out, "image_links", &manifest.image_links, &links);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_round_trip() {
        let spec = ForgeSpec::canonical();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(ForgeSpec::from_json(&text).unwrap(), spec);
        let minimal = ForgeSpec::from_json(r#"{"seed":1,"apps":{"grindr":{"profiles":1}}}"#).unwrap();
        assert_eq!(minimal.resolved_apps().unwrap()[&AppId::Grindr].profiles, 1);
        assert!(ForgeSpec::from_json(r#"{"seed":1,"bogus":1}"#).is_err());
        let bad = ForgeSpec::from_json(r#"{"apps":{"Nope":{}}}"#).unwrap();
        assert!(matches!(bad.resolved_apps(), Err(Error::Forge(_))));
    }

    #[test]
    fn non_empty_outdir_refused() {
        let d = tempfile::tempdir().unwrap();
        fs::write(d.path().join("x"), b"1").unwrap();
        assert!(matches!(forge_corpus(&ForgeSpec::canonical(), d.path()), Err(Error::Forge(_))));
    }

    #[test]
    fn deny_pattern_refuses_and_cleans_up() {
        let d = tempfile::tempdir().unwrap();
        let mut spec = ForgeSpec::canonical();
        spec.deny_patterns = vec![r"@example\.org".to_string()];
        assert!(matches!(forge_corpus(&spec, d.path()), Err(Error::Forge(_))));
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 0);
    }

    #[test]
    fn prefs_escaping() {
        let xml = prefs_xml(&[Pref::Str("a", "x & <y>".into()), Pref::Long("b", 5)]);
        let doc = crate::prefs::parse_prefs_xml(
            &xml,
            crate::model::ArtifactSource::file("p.xml", crate::model::FileKind::PrefsXml),
        )
        .unwrap();
        assert_eq!(doc.entries["a"].raw, "x & <y>");
        assert_eq!(doc.entries["b"].raw, "5");
    }

    #[test]
    fn canonical_round_trip_is_exact() {
        let d = tempfile::tempdir().unwrap();
        let manifest = forge_corpus(&ForgeSpec::canonical(), d.path()).unwrap();
        let bundle = crate::pipeline::build_bundle(d.path(), &Default::default()).unwrap();
        assert_eq!(diff_manifest(&manifest, &bundle), Vec::<String>::new());
        let unexpected: Vec<&String> =
            bundle.artifacts.warnings.iter().filter(|w| !w.contains("not modeled")).collect();
        assert!(unexpected.is_empty(), "{unexpected:?}");
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = forge_corpus(&ForgeSpec::canonical(), a.path()).unwrap();
        let mb = forge_corpus(&ForgeSpec::canonical(), b.path()).unwrap();
        assert_eq!(ma, mb);
        let ha = crate::report::evidence_root_hash(a.path()).unwrap();
        let hb = crate::report::evidence_root_hash(b.path()).unwrap();
        assert_eq!(ha, hb);
    }

    #[test]
    fn zero_counts_give_empty_bundle() {
        let d = tempfile::tempdir().unwrap();
        let spec = ForgeSpec::from_json(r#"{"seed":3,"apps":{"Tinder":{},"Grindr":{}}}"#).unwrap();
        forge_corpus(&spec, d.path()).unwrap();
        let bundle = crate::pipeline::build_bundle(d.path(), &Default::default()).unwrap();
        assert_eq!(bundle.installs.len(), 2);
        assert!(bundle.artifacts.messages.is_empty() && bundle.artifacts.profiles.is_empty());
    }
}
