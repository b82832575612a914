//! Normalization of tables that match a known layout.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::model::{
    AppId, ArtifactSource, Artifacts, ChatMessage, DeviceIdentifier, Direction, FileKind,
    Heuristic, LocationFix, LocationOrigin, LocationPrecision, MatchRecord, MediaKind,
    MediaRecord, MessageBody, MessageFlag, ProfileOrigin, ProfileRecord, RawRow, SocialProvider,
    Subject,
};

use super::cells::Cells;
use super::schema::{match_table, TableMatch, BADOO_EXPECTED_EMPTY_DB};
use super::sqlite::{read_tables, DbCopy, Row, TableInfo};
use super::sweep::sweep_tables;

/// Everything one database contributed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DbExtraction {
    pub tables: Vec<TableInfo>,
    pub table_matches: Vec<TableMatch>,
    /// Owner profile id established from the database itself.
    pub owner_id: Option<String>,
    pub artifacts: Artifacts,
}

/// Reads one database. Tables matching a known layout for `app` are
/// normalized; everything else goes through the generic sweep.
/// `owner_hint` is the owner id recovered elsewhere (prefs), if any.
pub fn extract_normalized(
    app: AppId,
    path: &Path,
    rel_path: &str,
    owner_hint: Option<&str>,
) -> Result<DbExtraction> {
    let db = DbCopy::open(path, rel_path)?;
    let (tables, warnings) = read_tables(&db)?;
    let mut out = DbExtraction {
        artifacts: Artifacts {
            warnings,
            ..Artifacts::default()
        },
        ..DbExtraction::default()
    };
    let file_name = rel_path.rsplit('/').next().unwrap_or(rel_path);
    if app == AppId::Badoo && file_name == BADOO_EXPECTED_EMPTY_DB {
        for t in tables.iter().filter(|t| t.row_count > 0) {
            out.artifacts.warnings.push(format!(
                "{rel_path}: expected empty, table {} holds {} rows",
                t.name, t.row_count
            ));
        }
    }

    let mut known: BTreeMap<&'static str, (&TableInfo, Vec<Row>)> = BTreeMap::new();
    let mut unknown: Vec<&TableInfo> = Vec::new();
    for t in &tables {
        let m = match_table(app, &t.name, &t.column_names());
        match m.matched_spec {
            Some(spec) => match db.rows(&t.name) {
                Ok(rows) => {
                    known.insert(spec.name, (t, rows));
                }
                Err(e) => out
                    .artifacts
                    .warnings
                    .push(format!("{rel_path}: table {} unreadable: {e}", t.name)),
            },
            None => {
                if m.column_overlap > 0.0 {
                    out.artifacts.warnings.push(format!(
                        "{rel_path}: table {} matches by name only ({:.0}% of known columns), swept generically",
                        t.name,
                        m.column_overlap * 100.0
                    ));
                }
                unknown.push(t);
            }
        }
        out.table_matches.push(m);
    }

    let base = ArtifactSource::file(rel_path, FileKind::SqliteDb);
    let mut ctx = Ctx {
        app,
        base,
        owner: owner_hint.map(str::to_string),
        out: Artifacts::default(),
    };
    match app {
        AppId::Grindr => ctx.grindr(&mut known),
        AppId::Skout => ctx.skout(&mut known),
        AppId::Tinder => ctx.tinder(&mut known),
        _ => {}
    }
    for (name, (_, rows)) in known {
        ctx.raw_rows(name, &rows);
    }
    out.owner_id = if app == AppId::Grindr { ctx.owner.clone() } else { None };
    out.artifacts.absorb(ctx.out);
    if !unknown.is_empty() {
        let swept = sweep_tables(app, &db, &unknown, rel_path);
        out.artifacts.absorb(swept);
    }
    out.tables = tables;
    Ok(out)
}

fn cells<'a>(
    base: &ArtifactSource,
    out: &'a mut Artifacts,
    table: &str,
    idx: usize,
    row: &'a Row,
) -> (Cells<'a>, ArtifactSource) {
    let locator = row.locator(table, idx);
    let source = base.with_record(&locator);
    let locator = format!("{}:{}", base.file_path, locator);
    (Cells { row, locator, out }, source)
}

type Known<'t> = BTreeMap<&'static str, (&'t TableInfo, Vec<Row>)>;

struct Ctx {
    app: AppId,
    base: ArtifactSource,
    owner: Option<String>,
    out: Artifacts,
}

impl Ctx {
    fn direction(&self, sender: Option<&str>) -> Direction {
        match (&self.owner, sender) {
            (Some(owner), Some(s)) if owner == s => Direction::Outbound,
            (Some(_), Some(_)) => Direction::Inbound,
            _ => Direction::Unknown,
        }
    }

    /// The participant that is not the owner, once the owner is known.
    fn peer(&self, sender: Option<&str>, recipient: Option<&str>) -> Option<String> {
        let owner = self.owner.as_deref()?;
        match (sender, recipient) {
            (Some(s), Some(r)) if s == owner => Some(r.to_string()),
            (Some(s), Some(r)) if r == owner => Some(s.to_string()),
            _ => None,
        }
    }

    fn keep_raw(&mut self, table: &str, row: &Row, source: ArtifactSource) {
        self.out.raw_rows.push(RawRow {
            app: self.app,
            table: table.to_string(),
            fields: row.fields(),
            source,
        });
    }

    fn raw_rows(&mut self, table: &str, rows: &[Row]) {
        for (idx, row) in rows.iter().enumerate() {
            let source = self.base.with_record(row.locator(table, idx));
            self.keep_raw(table, row, source);
        }
    }

    fn profile(&self, profile_id: String, source: ArtifactSource, row: &Row) -> ProfileRecord {
        ProfileRecord {
            app: self.app,
            is_owner: self.owner.as_deref() == Some(profile_id.as_str()),
            profile_id,
            origin: ProfileOrigin::AppUser,
            display_name: None,
            birth_date: None,
            age: None,
            social_ids: BTreeMap::new(),
            image_hash: None,
            image_url: None,
            last_seen: None,
            last_message_at: None,
            distance_m: None,
            raw_fields: row.fields(),
            source,
        }
    }

    fn grindr(&mut self, known: &mut Known<'_>) {
        if let Some((_, rows)) = known.remove("profile") {
            if self.owner.is_none() {
                self.owner = rows
                    .iter()
                    .find(|r| r.get("isCurrent").and_then(|v| v.as_bool()) == Some(true))
                    .and_then(|r| r.text("profileID"));
            }
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "profile", idx, row);
                let Some(id) = c.text("profileID") else {
                    c.out.warnings.push(format!("{}: no profileID", c.locator));
                    self.keep_raw("profile", row, source);
                    continue;
                };
                let display_name = c.text("displayName");
                let birth_date = c.date("birthdate");
                let age = c.i64("age");
                let image_hash = c.text("profileImageHash");
                let last_seen = c.time("lastSeen").map(|t| t.0);
                c.time("headlineDate");
                let mut social_ids = BTreeMap::new();
                for (col, provider) in [
                    ("facebookID", SocialProvider::Facebook),
                    ("twitterID", SocialProvider::Twitter),
                    ("instagramID", SocialProvider::Instagram),
                ] {
                    if let Some(v) = c.text(col) {
                        social_ids.insert(provider, v);
                    }
                }
                let mut p = self.profile(id, source, row);
                p.display_name = display_name;
                p.birth_date = birth_date;
                p.age = age;
                p.image_hash = image_hash;
                p.last_seen = last_seen;
                p.social_ids = social_ids;
                self.out.profiles.push(p);
            }
        }

        let mut gallery_ids = BTreeSet::new();
        let mut gallery_hashes = BTreeSet::new();
        if let Some((_, rows)) = known.get("imageGallery") {
            for row in rows {
                gallery_ids.extend(row.text("messageID"));
                gallery_hashes.extend(row.text("mediaHash"));
            }
        }

        if let Some((_, rows)) = known.remove("chat") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "chat", idx, row);
                let Some((sent_at, time_unit)) = c.time("Timestamp") else {
                    c.out.warnings.push(format!("{}: message without usable Timestamp", c.locator));
                    self.keep_raw("chat", row, source);
                    continue;
                };
                let message_id = c.text("messageID").unwrap_or_else(|| idx.to_string());
                let sender = c.text("Source");
                let recipient = c.text("Target");
                let unread = c.bool("Unread");
                let failed = c.bool("Failed");
                let text = c.text("Body").unwrap_or_default();
                let is_media = gallery_ids.contains(&message_id) || gallery_hashes.contains(&text);
                if is_media {
                    self.out.heuristics.insert(Heuristic::GalleryMediaBody);
                }
                self.out.messages.push(ChatMessage {
                    app: self.app,
                    message_id,
                    direction: self.direction(sender.as_deref()),
                    peer_id: self.peer(sender.as_deref(), recipient.as_deref()),
                    sender_id: sender,
                    recipient_id: recipient,
                    thread_id: None,
                    sent_at,
                    time_unit,
                    body: if is_media { MessageBody::Media(text) } else { MessageBody::Text(text) },
                    unread,
                    failed,
                    flags: BTreeSet::new(),
                    source,
                });
            }
        }
        if let Some((_, rows)) = known.remove("blocks") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "blocks", idx, row);
                c.time("timeStamp");
                self.keep_raw("blocks", row, source);
            }
        }
    }

    fn skout(&mut self, known: &mut Known<'_>) {
        if let Some((_, rows)) = known.remove("skoutUsersTable") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "skoutUsersTable", idx, row);
                let Some(id) = c.text("userID") else {
                    c.out.warnings.push(format!("{}: no userID", c.locator));
                    self.keep_raw("skoutUsersTable", row, source);
                    continue;
                };
                let display_name = c.text("userName");
                let image_url = c.text("picUrl");
                let last_message_at = c.time("lastMessageTimestamp").map(|t| t.0);
                let mut p = self.profile(id, source, row);
                p.display_name = display_name;
                p.image_url = image_url;
                p.last_message_at = last_message_at;
                self.out.profiles.push(p);
            }
        }
        if let Some((_, rows)) = known.remove("skoutMessages") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "skoutMessages", idx, row);
                let Some((sent_at, time_unit)) = c.time("Timestamp") else {
                    c.out.warnings.push(format!("{}: message without usable Timestamp", c.locator));
                    self.keep_raw("skoutMessages", row, source);
                    continue;
                };
                let message_id = c.text("messageID").unwrap_or_else(|| idx.to_string());
                let sender = c.text("fromUserID");
                let recipient = c.text("toUserID");
                let thread_id = c.text("chatID");
                let kind = c.text("Type").unwrap_or_default().to_ascii_lowercase();
                let text = c.text("Message").unwrap_or_default();
                let mut flags = BTreeSet::new();
                if kind == "rich" {
                    flags.insert(MessageFlag::AdminOrigin);
                }
                self.out.messages.push(ChatMessage {
                    app: self.app,
                    message_id,
                    direction: self.direction(sender.as_deref()),
                    peer_id: self.peer(sender.as_deref(), recipient.as_deref()),
                    sender_id: sender,
                    recipient_id: recipient,
                    thread_id,
                    sent_at,
                    time_unit,
                    body: if kind == "picture" { MessageBody::Media(text) } else { MessageBody::Text(text) },
                    unread: None,
                    failed: None,
                    flags,
                    source,
                });
            }
        }
    }

    fn tinder(&mut self, known: &mut Known<'_>) {
        if let Some((_, rows)) = known.remove("matches") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "matches", idx, row);
                let (Some(match_id), Some(counterpart)) = (c.text("Id"), c.text("User_id")) else {
                    c.out.warnings.push(format!("{}: match without Id/User_id", c.locator));
                    self.keep_raw("matches", row, source);
                    continue;
                };
                let Some((created_at, _)) = c.time("Created") else {
                    c.out.warnings.push(format!("{}: match without usable Created", c.locator));
                    self.keep_raw("matches", row, source);
                    continue;
                };
                let last_activity = c.time("Last_activity").map(|t| t.0);
                if last_activity.is_some_and(|l| l < created_at) {
                    c.out
                        .warnings
                        .push(format!("{}: Last_activity precedes Created", c.locator));
                }
                let m = MatchRecord {
                    app: self.app,
                    match_id,
                    counterpart_user_id: counterpart,
                    counterpart_name: c.text("User_name"),
                    created_at,
                    last_activity,
                    viewed: c.bool("Viewed"),
                    raw_fields: row.fields(),
                    source,
                };
                self.out.matches.push(m);
            }
        }
        if let Some((_, rows)) = known.remove("messages") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "messages", idx, row);
                let Some((sent_at, time_unit)) = c.time("Created") else {
                    c.out.warnings.push(format!("{}: message without usable Created", c.locator));
                    self.keep_raw("messages", row, source);
                    continue;
                };
                let m = ChatMessage {
                    app: self.app,
                    message_id: row.rowid.map_or_else(|| idx.to_string(), |r| r.to_string()),
                    sender_id: None,
                    recipient_id: None,
                    peer_id: c.text("User_id"),
                    thread_id: c.text("Match_id"),
                    sent_at,
                    time_unit,
                    body: MessageBody::Text(c.text("Text").unwrap_or_default()),
                    direction: Direction::Unknown,
                    unread: c.bool("Viewed").map(|v| !v),
                    failed: c.bool("Has_error"),
                    flags: BTreeSet::new(),
                    source,
                };
                self.out.messages.push(m);
            }
        }
        if let Some((_, rows)) = known.remove("facebook_friends") {
            for (idx, row) in rows.iter().enumerate() {
                let (c, source) = cells(&self.base, &mut self.out, "facebook_friends", idx, row);
                let Some(id) = c.text("Id") else {
                    c.out.warnings.push(format!("{}: friend without Id", c.locator));
                    self.keep_raw("facebook_friends", row, source);
                    continue;
                };
                let display_name = c.text("Name");
                let image_url = c.text("Avatar_url");
                let mut p = self.profile(id.clone(), source, row);
                p.origin = ProfileOrigin::FacebookFriend;
                p.is_owner = false;
                p.display_name = display_name;
                p.image_url = image_url;
                p.social_ids.insert(SocialProvider::Facebook, id);
                self.out.profiles.push(p);
            }
        }
        if let Some((_, rows)) = known.remove("Analytic_Events") {
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, "Analytic_Events", idx, row);
                let at = c.time("timestamp").map(|t| t.0);
                let params = c.text("Params").map(|p| parse_params(&p)).unwrap_or_default();
                self.analytics(&params, at, &source);
                self.keep_raw("Analytic_Events", row, source);
            }
        }
        for (table, kind) in [
            ("moments", MediaKind::Moment),
            ("photos", MediaKind::Photo),
            ("photo_moments", MediaKind::PhotoMoment),
        ] {
            let Some((info, rows)) = known.remove(table) else { continue };
            let url_cols: Vec<&str> = super::schema::table_spec(AppId::Tinder, table)
                .map(|s| {
                    s.columns
                        .iter()
                        .filter(|c| c.role == super::ColumnRole::Url)
                        .map(|c| c.name)
                        .collect()
                })
                .unwrap_or_default();
            let _ = info;
            for (idx, row) in rows.iter().enumerate() {
                let (mut c, source) = cells(&self.base, &mut self.out, table, idx, row);
                let Some(media_id) = c.text("Id") else {
                    c.out.warnings.push(format!("{}: media without Id", c.locator));
                    self.keep_raw(table, row, source);
                    continue;
                };
                let created_at = c.time("Created").map(|t| t.0);
                let urls = url_cols.iter().filter_map(|col| c.text(col)).collect();
                let rec = MediaRecord {
                    app: self.app,
                    kind,
                    media_id,
                    owner_user_id: c.text("User_id"),
                    created_at,
                    text: if kind == MediaKind::Moment { c.text("Text") } else { None },
                    urls,
                    raw_fields: row.fields(),
                    source,
                };
                self.out.media.push(rec);
            }
        }
    }

    fn analytics(&mut self, params: &[(String, String)], at: Option<crate::model::Instant>, source: &ArtifactSource) {
        let find = |pred: &dyn Fn(&str) -> bool| {
            params
                .iter()
                .find(|(k, _)| pred(&k.to_ascii_lowercase()))
                .and_then(|(_, v)| v.trim().parse::<f64>().ok())
        };
        let lat = find(&|k| k.contains("lat"));
        let lon = find(&|k| k.contains("lon") || k.contains("lng"));
        if let (Some(lat), Some(lon)) = (lat, lon) {
            if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
                self.out.heuristics.insert(Heuristic::LatLonKeyMatch);
                self.out.locations.push(LocationFix {
                    app: self.app,
                    precision: LocationPrecision::Exact { lat, lon },
                    at,
                    subject: Subject::Owner,
                    origin: LocationOrigin::Analytics,
                    source: source.clone(),
                });
            }
        }
        for (k, v) in params {
            let norm: String = k
                .chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase();
            if DEVICE_KEYS.contains(&norm.as_str()) && !v.is_empty() {
                self.out.device_ids.push(DeviceIdentifier {
                    app: self.app,
                    name: k.clone(),
                    value: v.clone(),
                    source: source.clone(),
                });
            }
        }
    }
}

const DEVICE_KEYS: [&str; 5] = ["deviceid", "userid", "networktype", "androidid", "advertisingid"];

/// Event parameters: a JSON object, else `k=v` pairs split on `&`, `,` or `;`.
pub fn parse_params(text: &str) -> Vec<(String, String)> {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(text) {
        return map
            .into_iter()
            .map(|(k, v)| {
                let v = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, v)
            })
            .collect();
    }
    text.split(['&', ',', ';'])
        .filter_map(|pair| {
            let (k, v) = pair.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}
