//! Per-app corpus generators. Each writes its files and appends the exact
//! records extraction must recover.

use std::collections::{BTreeMap, BTreeSet};

use crate::correlate::LinkVia;
use crate::db::schema::{schema_for, table_spec, BADOO_EXPECTED_EMPTY_DB};
use crate::digest::sha256_hex;
use crate::error::Result;
use crate::model::{
    AppId, ArtifactSource, AuthProvider, AuthToken, CachedImage, CarvedMessagePreview,
    ChatMessage, Direction, FileKind, ImageCache, ImageFormat, LocationFix, LocationOrigin,
    LocationPrecision, MatchRecord, MediaKind, MediaRecord, MediaUrl, MessageBody, MessageFlag,
    ProfileOrigin, ProfileRecord, RawValue, SocialProvider, Subject, TimeUnit, VolleyMatchEvent,
};
use crate::prefs::FACEBOOK_TOKEN_FILES;

use super::words::{Gen, FIRST_NAMES, LAST_NAMES, SUBURBS};
use super::{
    date, fields, millis, package_of, prefs_xml, secs, spec_row, stream, text, AppCounts,
    DbTable, ForgedImageLink, Malformed, Pref, Tree, BASE_EPOCH, CORPUS, TOKENS,
};

type Row = Vec<(String, RawValue)>;

/// A credential the forge plants in an app's preferences.
#[derive(Debug, Clone)]
pub(crate) struct TokenDef {
    pub provider: AuthProvider,
    pub file: &'static str,
    pub key: &'static str,
    pub value: String,
    pub expiry_ms: Option<i64>,
}

const FB_TOKEN_KEY: &str = "com.facebook.TokenCachingStrategy.Token";

/// Credentials for `app`, primary first. Drawn from a dedicated stream so
/// the transaction log can plant the same values.
pub(crate) fn app_tokens(seed: u64, app: AppId) -> Vec<TokenDef> {
    let mut g = Gen::new(seed, stream(app, TOKENS));
    let fb = |g: &mut Gen, file| TokenDef {
        provider: AuthProvider::Facebook,
        file,
        key: if file == FACEBOOK_TOKEN_FILES[0] { FB_TOKEN_KEY } else { "fb_access_token" },
        value: format!("CAAC{}", g.alnum(150)),
        expiry_ms: (file == FACEBOOK_TOKEN_FILES[0]).then_some((BASE_EPOCH + 60 * 86_400) * 1000),
    };
    match app {
        AppId::Grindr => vec![TokenDef {
            provider: AuthProvider::Grindr,
            file: "Rules.xml",
            key: "grindr_token",
            value: g.alnum(40),
            expiry_ms: None,
        }],
        AppId::Tinder => {
            let native = TokenDef {
                provider: AuthProvider::Tinder,
                file: "SP.xml",
                key: "auth_token",
                value: g.uuid(),
                expiry_ms: None,
            };
            let mut f = fb(&mut g, "SP.xml");
            f.key = "facebook_token";
            vec![native, f]
        }
        AppId::Skout => vec![fb(&mut g, "LOGIN_PREFS.xml")],
        AppId::MiuMeet => vec![TokenDef {
            provider: AuthProvider::MiuMeet,
            file: "miumeet_session.xml",
            key: "auth_token",
            value: g.alnum(32),
            expiry_ms: None,
        }],
        _ => vec![fb(&mut g, FACEBOOK_TOKEN_FILES[0])],
    }
}

pub(crate) fn prefs_path(app: AppId, file: &str) -> String {
    format!("data/data/{}/shared_prefs/{file}", package_of(app))
}

pub(crate) fn token_record(app: AppId, t: &TokenDef) -> AuthToken {
    AuthToken {
        provider: t.provider,
        app,
        token: t.value.clone(),
        source: ArtifactSource::file(prefs_path(app, t.file), FileKind::PrefsXml)
            .with_record(format!("key={}", t.key)),
        expiry_hint: t.expiry_ms.map(millis),
    }
}

fn jpeg(g: &mut Gen) -> Vec<u8> {
    let mut b = vec![0xFF, 0xD8, 0xFF, 0xE0];
    b.extend(g.high_bytes(48));
    b.extend([0xFF, 0xD9]);
    b
}

fn email(g: &mut Gen) -> String {
    format!("{}.{}@example.org", g.pick(FIRST_NAMES), g.pick(LAST_NAMES))
}

/// Monotone clock for one app's activity.
struct Clock(i64);

impl Clock {
    fn tick(&mut self, g: &mut Gen) -> i64 {
        self.0 += g.range(60, 7_200);
        self.0
    }

    fn tick_ms(&mut self, g: &mut Gen) -> i64 {
        self.tick(g) * 1000 + g.range(0, 1000)
    }
}

struct Ctx<'t, 'r> {
    tree: &'t mut Tree<'r>,
    g: Gen,
    app: AppId,
    pkg: String,
    clock: Clock,
}

impl Ctx<'_, '_> {
    fn db_source(&self, db: &str) -> ArtifactSource {
        ArtifactSource::file(format!("{}/databases/{db}", self.pkg), FileKind::SqliteDb)
    }

    fn write_tokens(&mut self, seed: u64, counts: &AppCounts, extra: Vec<Pref<'static>>, file: &str) -> Result<()> {
        let tokens: Vec<TokenDef> = if counts.tokens > 0 { app_tokens(seed, self.app) } else { Vec::new() };
        let mut entries = extra;
        for t in tokens.iter().filter(|t| t.file == file) {
            entries.push(Pref::Str(t.key, t.value.clone()));
            self.tree.manifest.tokens.push(token_record(self.app, t));
        }
        if entries.is_empty() {
            return Ok(());
        }
        self.tree.write(&prefs_path(self.app, file), &prefs_xml(&entries))
    }

    fn facebook_file(&mut self, seed: u64, counts: &AppCounts) -> Result<()> {
        if counts.tokens == 0 {
            return Ok(());
        }
        let t = &app_tokens(seed, self.app)[0];
        let entries = vec![
            Pref::Str(FB_TOKEN_KEY, t.value.clone()),
            Pref::Long("com.facebook.TokenCachingStrategy.ExpirationDate", t.expiry_ms.unwrap_or(0)),
            Pref::Long("com.facebook.TokenCachingStrategy.LastRefreshDate", BASE_EPOCH * 1000),
            Pref::Str("com.facebook.TokenCachingStrategy.ApplicationId", self.g.digits(15)),
        ];
        self.tree.manifest.tokens.push(token_record(self.app, t));
        self.tree.write(&prefs_path(self.app, t.file), &prefs_xml(&entries))
    }

    fn picasso(&mut self, url: &str) -> Result<CachedImage> {
        let key = self.g.hex(32);
        let dir = format!("{}/cache/Picasso-cache", self.pkg);
        let bytes = jpeg(&mut self.g);
        let host = url.split('/').nth(2).unwrap_or_default();
        let meta = format!(
            "GET {url} HTTP/1.1\r\nHost: {host}\r\n\r\nHTTP/1.1 200 OK\r\nContent-Type: image/jpeg\r\nContent-Length: {}\r\n",
            bytes.len()
        );
        let image_path = format!("{dir}/{key}.i");
        self.tree.write(&format!("{dir}/{key}.o"), meta.as_bytes())?;
        self.tree.write(&image_path, &bytes)?;
        let img = CachedImage {
            app: self.app,
            origin_url: Some(url.to_string()),
            content_hash: sha256_hex(&bytes),
            format: ImageFormat::Jpeg,
            cache: ImageCache::Picasso,
            bytes_ref: ArtifactSource::file(image_path, FileKind::Jpeg),
        };
        self.tree.manifest.images.push(img.clone());
        Ok(img)
    }

    fn plain_image(&mut self, dir: &str, cache: ImageCache, ext: &str) -> Result<()> {
        let path = format!("{}/cache/{dir}/{}{ext}", self.pkg, self.g.hex(16));
        let bytes = jpeg(&mut self.g);
        self.tree.write(&path, &bytes)?;
        self.tree.manifest.images.push(CachedImage {
            app: self.app,
            origin_url: None,
            content_hash: sha256_hex(&bytes),
            format: ImageFormat::Jpeg,
            cache,
            bytes_ref: ArtifactSource::file(path, FileKind::Jpeg),
        });
        Ok(())
    }

    fn unique_ids(&mut self, n: usize, make: impl Fn(&mut Gen) -> String) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        while out.len() < n {
            let id = make(&mut self.g);
            if seen.insert(id.clone()) {
                out.push(id);
            }
        }
        out
    }
}

fn blank_profile(app: AppId, id: &str, row: &Row, source: ArtifactSource) -> ProfileRecord {
    ProfileRecord {
        app,
        profile_id: id.to_string(),
        origin: ProfileOrigin::AppUser,
        is_owner: false,
        display_name: None,
        birth_date: None,
        age: None,
        social_ids: BTreeMap::new(),
        image_hash: None,
        image_url: None,
        last_seen: None,
        last_message_at: None,
        distance_m: None,
        raw_fields: fields(row),
        source,
    }
}

fn any(c: &AppCounts) -> bool {
    c.profiles + c.messages + c.matches + c.images + c.location_fixes + c.previews + c.tokens + c.emails > 0
}

pub(crate) fn forge_app(tree: &mut Tree<'_>, seed: u64, app: AppId, counts: &AppCounts) -> Result<()> {
    let pkg = format!("data/data/{}", package_of(app));
    tree.mkdir(&pkg)?;
    tree.manifest.installs.push((app, pkg.clone()));
    if !any(counts) {
        return Ok(());
    }
    let mut g = Gen::new(seed, stream(app, CORPUS));
    let start = BASE_EPOCH + g.range(0, 86_400);
    let mut cx = Ctx {
        tree,
        g,
        app,
        pkg,
        clock: Clock(start),
    };
    match app {
        AppId::Grindr => grindr(&mut cx, seed, counts),
        AppId::Skout => skout(&mut cx, seed, counts),
        AppId::Tinder => tinder(&mut cx, seed, counts),
        AppId::Badoo => badoo(&mut cx, seed, counts),
        AppId::MeetMe => meetme(&mut cx, seed, counts),
        AppId::Jaumo => jaumo(&mut cx, seed, counts),
        AppId::FullCircle => cx.facebook_file(seed, counts),
        AppId::MiuMeet => cx.write_tokens(seed, counts, Vec::new(), "miumeet_session.xml"),
        AppId::Unknown => Ok(()),
    }
}

fn grindr(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::Grindr;
    let mut extra = Vec::new();
    if c.tokens > 0 || c.emails > 0 {
        extra.push(Pref::Str("session_id", cx.g.hex(32)));
        extra.push(Pref::Long("last_active_time", cx.clock.tick_ms(&mut cx.g)));
    }
    if c.emails > 0 {
        let address = email(&mut cx.g);
        extra.push(Pref::Str("email", address.clone()));
        cx.tree.manifest.emails.push(address);
    }
    cx.write_tokens(seed, c, extra, "Rules.xml")?;

    if c.profiles == 0 && c.messages == 0 {
        return Ok(());
    }
    let src = cx.db_source("grindr.db");
    let mut tables: BTreeMap<&str, Vec<Row>> = BTreeMap::new();
    let ids = cx.unique_ids(c.profiles + 1, |g| g.digits(8));
    let owner = ids[0].clone();
    cx.tree.manifest.owners.insert(app, owner.clone());

    let spec = table_spec(app, "profile").expect("grindr profile spec");
    let with_image = c.images.min(c.profiles);
    let mut hashes = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let g = &mut cx.g;
        let hash = (i >= 1 && i <= with_image).then(|| g.hex(32));
        let name = g.first_name();
        let (y, m, d) = (1975 + g.below(20) as i32, 1 + g.below(12) as u32, 1 + g.below(28) as u32);
        let age = 2014 - y as i64;
        let last_seen = cx.clock.tick_ms(g);
        let headline_at = last_seen - g.range(86_400_000, 864_000_000);
        let fb = g.chance(0.5).then(|| g.digits(15));
        let tw = g.chance(0.3).then(|| format!("tw_{}", g.alnum(8)));
        let ig = g.chance(0.3).then(|| format!("ig_{}", g.alnum(8)));
        let opt = |v: &Option<String>| v.clone().map(RawValue::Text).unwrap_or(RawValue::Null);
        let row = spec_row(spec, &[
            ("profileID", text(id.as_str())),
            ("about", text(g.sentence())),
            ("age", RawValue::Integer(age)),
            ("birthdate", text(format!("{y:04}-{m:02}-{d:02}"))),
            ("isBlocked", RawValue::Integer(0)),
            ("isBlocker", RawValue::Integer(0)),
            ("bodyType", RawValue::Integer(1 + g.range(0, 3))),
            ("children", RawValue::Integer(0)),
            ("displayName", text(name.as_str())),
            ("ethnicity", RawValue::Integer(1 + g.range(0, 5))),
            ("weight", RawValue::Real(60.0 + g.range(0, 40) as f64 + 0.5)),
            ("facebookID", opt(&fb)),
            ("headline", text(g.sentence())),
            ("headlineDate", RawValue::Integer(headline_at)),
            ("height", RawValue::Real(160.0 + g.range(0, 40) as f64)),
            ("isCurrent", RawValue::Integer(i64::from(i == 0))),
            ("isFave", RawValue::Integer(g.range(0, 2))),
            ("Version", text("2.0.24")),
            ("profileImageHash", opt(&hash)),
            ("relationshipStatus", RawValue::Integer(g.range(0, 4))),
            ("showAge", RawValue::Integer(1)),
            ("showDistance", RawValue::Integer(1)),
            ("twitterID", opt(&tw)),
            ("instagramID", opt(&ig)),
            ("lastSeen", RawValue::Integer(last_seen)),
        ]);
        let rowid = tables.entry("profile").or_default().len() + 1;
        let mut p = blank_profile(app, id, &row, src.with_record(format!("profile:rowid={rowid}")));
        p.is_owner = i == 0;
        p.display_name = Some(name);
        p.birth_date = Some(date(y, m, d));
        p.age = Some(age);
        p.image_hash = hash.clone();
        p.last_seen = Some(millis(last_seen));
        for (v, provider) in [(fb, SocialProvider::Facebook), (tw, SocialProvider::Twitter), (ig, SocialProvider::Instagram)] {
            if let Some(v) = v {
                p.social_ids.insert(provider, v);
            }
        }
        cx.tree.manifest.profiles.push(p);
        tables.entry("profile").or_default().push(row);
        if let Some(h) = hash {
            hashes.push((id.clone(), h));
        }
    }

    let peers: Vec<String> = if ids.len() > 1 { ids[1..].to_vec() } else { vec![cx.g.digits(9)] };
    let chat = table_spec(app, "chat").expect("grindr chat spec");
    let gallery = table_spec(app, "imageGallery").expect("grindr gallery spec");
    let msg_ids = cx.unique_ids(c.messages, |g| g.digits(10));
    for (k, message_id) in msg_ids.iter().enumerate() {
        let g = &mut cx.g;
        let peer = &peers[k % peers.len()];
        let outbound = k % 2 == 0;
        let (from, to) = if outbound { (&owner, peer) } else { (peer, &owner) };
        let at = cx.clock.tick_ms(g);
        let is_image = k == 1;
        let body = if is_image { g.hex(32) } else { g.sentence() };
        let unread = !outbound && g.chance(0.5);
        let row = spec_row(chat, &[
            ("messageID", text(message_id.as_str())),
            ("Source", text(from.as_str())),
            ("Target", text(to.as_str())),
            ("Timestamp", RawValue::Integer(at)),
            ("Type", text(if is_image { "image" } else { "text" })),
            ("Body", text(body.as_str())),
            ("Unread", RawValue::Integer(i64::from(unread))),
            ("Failed", RawValue::Integer(0)),
        ]);
        if is_image {
            tables.entry("imageGallery").or_default().push(spec_row(gallery, &[
                ("messageID", text(message_id.as_str())),
                ("mediaHash", text(body.as_str())),
                ("Profile", text(from.as_str())),
            ]));
        }
        cx.tree.manifest.messages.push(ChatMessage {
            app,
            message_id: message_id.clone(),
            sender_id: Some(from.clone()),
            recipient_id: Some(to.clone()),
            peer_id: Some(peer.clone()),
            thread_id: None,
            sent_at: millis(at),
            time_unit: TimeUnit::Milliseconds,
            body: if is_image { MessageBody::Media(body) } else { MessageBody::Text(body) },
            direction: if outbound { Direction::Outbound } else { Direction::Inbound },
            unread: Some(unread),
            failed: Some(false),
            flags: BTreeSet::new(),
            source: src.with_record(format!("chat:rowid={}", k + 1)),
        });
        tables.entry("chat").or_default().push(row);
    }

    for (table, names) in [
        ("bodyTypeField", ["Slim", "Average", "Muscular"]),
        ("ethnicityField", ["Asian", "Black", "Latino"]),
        ("flagReason", ["Spam", "Offensive", "Underage"]),
        ("lookingForField", ["Chat", "Dates", "Friends"]),
    ] {
        let spec = table_spec(app, table).expect("grindr lookup spec");
        let name_col = spec.columns[1].name;
        for (i, n) in names.iter().enumerate() {
            tables.entry(table).or_default().push(spec_row(spec, &[
                ("fieldID", text((i + 1).to_string())),
                (name_col, text(*n)),
            ]));
        }
    }
    let looking = table_spec(app, "lookingFor").expect("grindr lookingFor spec");
    for id in &ids[1..] {
        tables.entry("lookingFor").or_default().push(spec_row(looking, &[
            ("Profile", text(id.as_str())),
            ("lookingForId", RawValue::Integer(1 + cx.g.range(0, 3))),
        ]));
    }
    if ids.len() > 2 {
        let blocks = table_spec(app, "blocks").expect("grindr blocks spec");
        let at = cx.clock.tick_ms(&mut cx.g);
        tables.entry("blocks").or_default().push(spec_row(blocks, &[
            ("profile", text(ids[ids.len() - 1].as_str())),
            ("timeStamp", RawValue::Integer(at)),
            ("isBlocked", RawValue::Integer(1)),
        ]));
    }

    let db: Vec<DbTable> = schema_for(app)
        .expect("grindr schema")
        .tables
        .iter()
        .map(|t| DbTable::from_spec(t, tables.remove(t.name).unwrap_or_default()))
        .collect();
    cx.tree.write_db(app, &src.file_path, &db)?;

    for (profile_id, hash) in hashes {
        let url = format!("http://cdnx.grindr.example/images/thumb/320x320/{hash}");
        let img = cx.picasso(&url)?;
        cx.tree.manifest.image_links.push(ForgedImageLink {
            app,
            profile_id,
            content_hash: img.content_hash,
            origin_url: url,
            via: LinkVia::HashInUrl,
        });
    }
    Ok(())
}

fn skout(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::Skout;
    let ids = cx.unique_ids(c.profiles + 1, |g| g.digits(9));
    let owner = ids[0].clone();
    let needs_owner = c.profiles > 0 || c.messages > 0;
    let extra = if needs_owner {
        cx.tree.manifest.owners.insert(app, owner.clone());
        vec![Pref::Str("user_id", owner.clone())]
    } else {
        Vec::new()
    };
    cx.write_tokens(seed, c, extra, "LOGIN_PREFS.xml")?;
    if !needs_owner {
        return Ok(());
    }

    let src = cx.db_source("skout.db");
    let peers: Vec<String> = if ids.len() > 1 { ids[1..].to_vec() } else { vec![cx.g.digits(9)] };
    let msg_spec = table_spec(app, "skoutMessages").expect("skout messages spec");
    let mut msg_rows = Vec::new();
    let mut last: BTreeMap<String, (String, i64)> = BTreeMap::new();
    let msg_ids = cx.unique_ids(c.messages, |g| g.digits(11));
    for (k, message_id) in msg_ids.iter().enumerate() {
        let g = &mut cx.g;
        let peer = &peers[k % peers.len()];
        let outbound = g.chance(0.5);
        let (from, to) = if outbound { (&owner, peer) } else { (peer, &owner) };
        let at = cx.clock.tick(g);
        let chat_id = format!("c{peer}");
        let body = g.sentence();
        let row = spec_row(msg_spec, &[
            ("messageID", text(message_id.as_str())),
            ("Timestamp", RawValue::Integer(at)),
            ("fromUserID", text(from.as_str())),
            ("toUserID", text(to.as_str())),
            ("chatID", text(chat_id.as_str())),
            ("Type", text("text")),
            ("Message", text(body.as_str())),
            ("messageOrdered", RawValue::Integer(k as i64)),
        ]);
        last.insert(peer.clone(), (message_id.clone(), at));
        cx.tree.manifest.messages.push(ChatMessage {
            app,
            message_id: message_id.clone(),
            sender_id: Some(from.clone()),
            recipient_id: Some(to.clone()),
            peer_id: Some(peer.clone()),
            thread_id: Some(chat_id),
            sent_at: secs(at),
            time_unit: TimeUnit::Seconds,
            body: MessageBody::Text(body),
            direction: if outbound { Direction::Outbound } else { Direction::Inbound },
            unread: None,
            failed: None,
            flags: BTreeSet::new(),
            source: src.with_record(format!("skoutMessages:rowid={}", k + 1)),
        });
        msg_rows.push(row);
    }

    let user_spec = table_spec(app, "skoutUsersTable").expect("skout users spec");
    let mut user_rows = Vec::new();
    for (i, id) in ids[1..].iter().enumerate() {
        let name = cx.g.first_name();
        let pic = format!("http://i.skout.example/pics/{id}_{}.jpg", cx.g.hex(8));
        let (last_id, last_at) = match last.get(id) {
            Some((m, t)) => (text(m.as_str()), RawValue::Integer(*t)),
            None => (RawValue::Null, RawValue::Null),
        };
        let row = spec_row(user_spec, &[
            ("userID", text(id.as_str())),
            ("userName", text(name.as_str())),
            ("picUrl", text(pic.as_str())),
            ("userLastMessageID", last_id),
            ("lastMessageTimestamp", last_at),
        ]);
        let mut p = blank_profile(app, id, &row, src.with_record(format!("skoutUsersTable:rowid={}", i + 1)));
        p.display_name = Some(name);
        p.image_url = Some(pic);
        p.last_message_at = last.get(id).map(|(_, t)| secs(*t));
        cx.tree.manifest.profiles.push(p);
        user_rows.push(row);
    }

    let db = vec![
        DbTable::from_spec(user_spec, user_rows),
        DbTable::from_spec(msg_spec, msg_rows),
    ];
    cx.tree.write_db(app, &src.file_path, &db)
}

fn tinder(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::Tinder;
    let mut extra = Vec::new();
    let mut prefs_fix = None;
    if c.location_fixes > 0 {
        let (lat, lon) = cx.g.coords();
        extra.push(Pref::Float("last_lat", lat.clone()));
        extra.push(Pref::Float("last_lon", lon.clone()));
        prefs_fix = Some((lat, lon));
    }
    cx.write_tokens(seed, c, extra, "SP.xml")?;
    if let Some((lat, lon)) = prefs_fix {
        cx.tree.manifest.locations.push(LocationFix {
            app,
            precision: LocationPrecision::Exact {
                lat: lat.parse().expect("forged decimal"),
                lon: lon.parse().expect("forged decimal"),
            },
            at: None,
            subject: Subject::Owner,
            origin: LocationOrigin::Prefs,
            source: ArtifactSource::file(prefs_path(app, "SP.xml"), FileKind::PrefsXml)
                .with_record("keys=last_lat,last_lon"),
        });
    }
    if c.profiles + c.messages + c.matches + c.images + c.location_fixes.saturating_sub(1) == 0 {
        return Ok(());
    }

    let src = cx.db_source("tinder.db");
    let mut tables: BTreeMap<&str, Vec<Row>> = BTreeMap::new();
    let spec = |t| table_spec(app, t).expect("tinder spec");
    let owner_user = cx.g.hex(24);

    let mut matches = Vec::new();
    for i in 0..c.matches {
        let g = &mut cx.g;
        let (match_id, user) = (g.hex(24), g.hex(24));
        let created = cx.clock.tick_ms(g);
        let last_activity = created + g.range(60_000, 86_400_000);
        let viewed = g.chance(0.5);
        let name = g.first_name();
        let row = spec_row(spec("matches"), &[
            ("Id", text(match_id.as_str())),
            ("User_id", text(user.as_str())),
            ("Created", RawValue::Integer(created)),
            ("Last_activity", RawValue::Integer(last_activity)),
            ("Touched", RawValue::Integer(1)),
            ("Viewed", RawValue::Integer(i64::from(viewed))),
            ("User_name", text(name.as_str())),
            ("Reported_for", RawValue::Integer(0)),
            ("Gender", RawValue::Integer(g.range(0, 2))),
            ("Following", RawValue::Integer(0)),
        ]);
        cx.tree.manifest.matches.push(MatchRecord {
            app,
            match_id: match_id.clone(),
            counterpart_user_id: user.clone(),
            counterpart_name: Some(name),
            created_at: millis(created),
            last_activity: Some(millis(last_activity)),
            viewed: Some(viewed),
            raw_fields: fields(&row),
            source: src.with_record(format!("matches:rowid={}", i + 1)),
        });
        tables.entry("matches").or_default().push(row);
        matches.push((match_id, user, created));
    }

    let threads: Vec<(String, String)> = if matches.is_empty() {
        vec![(cx.g.hex(24), cx.g.hex(24))]
    } else {
        matches.iter().map(|(m, u, _)| (m.clone(), u.clone())).collect()
    };
    for k in 0..c.messages {
        let g = &mut cx.g;
        let (match_id, user) = &threads[k % threads.len()];
        let at = cx.clock.tick_ms(g);
        let body = g.sentence();
        let viewed = g.chance(0.6);
        let row = spec_row(spec("messages"), &[
            ("User_id", text(user.as_str())),
            ("Match_id", text(match_id.as_str())),
            ("Created", RawValue::Integer(at)),
            ("Has_error", RawValue::Integer(0)),
            ("Text", text(body.as_str())),
            ("Viewed", RawValue::Integer(i64::from(viewed))),
        ]);
        let rowid = k + 1;
        cx.tree.manifest.messages.push(ChatMessage {
            app,
            message_id: rowid.to_string(),
            sender_id: None,
            recipient_id: None,
            peer_id: Some(user.clone()),
            thread_id: Some(match_id.clone()),
            sent_at: millis(at),
            time_unit: TimeUnit::Milliseconds,
            body: MessageBody::Text(body),
            direction: Direction::Unknown,
            unread: Some(!viewed),
            failed: Some(false),
            flags: BTreeSet::new(),
            source: src.with_record(format!("messages:rowid={rowid}")),
        });
        tables.entry("messages").or_default().push(row);
    }

    let friend_ids = cx.unique_ids(c.profiles, |g| g.digits(15));
    for (i, id) in friend_ids.iter().enumerate() {
        let name = cx.g.first_name();
        let avatar = format!("http://graph.facebook.example/{id}/picture.jpg");
        let row = spec_row(spec("facebook_friends"), &[
            ("Id", text(id.as_str())),
            ("Name", text(name.as_str())),
            ("Avatar_url", text(avatar.as_str())),
        ]);
        let mut p = blank_profile(app, id, &row, src.with_record(format!("facebook_friends:rowid={}", i + 1)));
        p.origin = ProfileOrigin::FacebookFriend;
        p.display_name = Some(name);
        p.image_url = Some(avatar);
        p.social_ids.insert(SocialProvider::Facebook, id.clone());
        cx.tree.manifest.profiles.push(p);
        tables.entry("facebook_friends").or_default().push(row);
    }

    let analytics = c.location_fixes.saturating_sub(1);
    let device = cx.g.hex(16);
    for i in 0..analytics {
        let g = &mut cx.g;
        let (lat, lon) = g.coords();
        let at = cx.clock.tick_ms(g);
        let params = format!(r#"{{"lat":{lat},"lon":{lon},"deviceId":"{device}"}}"#);
        tables.entry("Analytic_Events").or_default().push(spec_row(spec("Analytic_Events"), &[
            ("timestamp", RawValue::Integer(at)),
            ("Name", text("app.location")),
            ("Params", text(params)),
        ]));
        cx.tree.manifest.locations.push(LocationFix {
            app,
            precision: LocationPrecision::Exact {
                lat: lat.parse().expect("forged decimal"),
                lon: lon.parse().expect("forged decimal"),
            },
            at: Some(millis(at)),
            subject: Subject::Owner,
            origin: LocationOrigin::Analytics,
            source: src.with_record(format!("Analytic_Events:rowid={}", i + 1)),
        });
    }
    if analytics > 0 {
        let at = cx.clock.tick_ms(&mut cx.g);
        tables.entry("Analytic_Events").or_default().push(spec_row(spec("Analytic_Events"), &[
            ("timestamp", RawValue::Integer(at)),
            ("Name", text("app.open")),
            ("Params", text("networkType=wifi")),
        ]));
    }

    let photo_ids = cx.unique_ids(matches.len(), |g| g.hex(24));
    let mut photo_urls = Vec::new();
    for (i, ((_, user, _), photo_id)) in matches.iter().zip(&photo_ids).enumerate() {
        let url = format!("http://images.tinder.example/{user}/640x640_{photo_id}.jpg");
        let row = spec_row(spec("photos"), &[
            ("Id", text(photo_id.as_str())),
            ("User_id", text(user.as_str())),
            ("Image_url", text(url.as_str())),
            ("Origin_x", RawValue::Real(0.0)),
            ("Origin_y", RawValue::Real(0.0)),
            ("Height", RawValue::Real(640.0)),
            ("Width", RawValue::Real(640.0)),
            ("Xoffset_percent", RawValue::Real(0.0)),
            ("Yoffset_percent", RawValue::Real(0.0)),
            ("Xdistance_Percent", RawValue::Real(1.0)),
            ("Ydistance_Percent", RawValue::Real(1.0)),
            ("Photo_order", RawValue::Integer(0)),
        ]);
        cx.tree.manifest.media.push(MediaRecord {
            app,
            kind: MediaKind::Photo,
            media_id: photo_id.clone(),
            owner_user_id: Some(user.clone()),
            created_at: None,
            text: None,
            urls: vec![url.clone()],
            raw_fields: fields(&row),
            source: src.with_record(format!("photos:rowid={}", i + 1)),
        });
        tables.entry("photos").or_default().push(row);
        photo_urls.push(url);
    }

    if let Some((_, first_user, _)) = matches.first() {
        let g = &mut cx.g;
        let moment_id = g.hex(24);
        let at = cx.clock.tick_ms(g);
        let caption = g.sentence();
        let row = spec_row(spec("moments"), &[
            ("Id", text(moment_id.as_str())),
            ("User_id", text(owner_user.as_str())),
            ("Created", RawValue::Integer(at)),
            ("Text", text(caption.as_str())),
            ("Photo_id", RawValue::Integer(1)),
            ("Filter", text("none")),
            ("Text_alignment", text("center")),
            ("Text_size", RawValue::Real(14.0)),
            ("Text_height", RawValue::Real(0.25)),
            ("Is_pending", RawValue::Integer(0)),
            ("Has_failed", RawValue::Integer(0)),
            ("Rated_type", RawValue::Integer(0)),
            ("Num_likes", RawValue::Integer(1)),
        ]);
        cx.tree.manifest.media.push(MediaRecord {
            app,
            kind: MediaKind::Moment,
            media_id: moment_id.clone(),
            owner_user_id: Some(owner_user.clone()),
            created_at: Some(millis(at)),
            text: Some(caption),
            urls: Vec::new(),
            raw_fields: fields(&row),
            source: src.with_record("moments:rowid=1"),
        });
        tables.entry("moments").or_default().push(row);

        let pm_id = cx.g.hex(24);
        let size_url = |s: &str| format!("http://images.tinder.example/moments/{pm_id}/{s}.jpg");
        let urls: Vec<String> = ["large", "med", "orig", "small", "thumb"].iter().map(|s| size_url(s)).collect();
        let row = spec_row(spec("photo_moments"), &[
            ("Id", text(pm_id.as_str())),
            ("Large", text(urls[0].as_str())),
            ("Med", text(urls[1].as_str())),
            ("Orig", text(urls[2].as_str())),
            ("Small", text(urls[3].as_str())),
            ("thumb", text(urls[4].as_str())),
        ]);
        cx.tree.manifest.media.push(MediaRecord {
            app,
            kind: MediaKind::PhotoMoment,
            media_id: pm_id.clone(),
            owner_user_id: None,
            created_at: None,
            text: None,
            urls: urls.clone(),
            raw_fields: fields(&row),
            source: src.with_record("photo_moments:rowid=1"),
        });
        tables.entry("photo_moments").or_default().push(row);

        let liked_at = cx.clock.tick_ms(&mut cx.g);
        let mixed = cx.g.hex(12);
        tables.entry("Moment_likes").or_default().push(spec_row(spec("Moment_likes"), &[
            ("Date", RawValue::Integer(liked_at)),
            ("Moment_id", RawValue::Integer(1)),
            ("Liked_by_id", text(first_user.as_str())),
            ("Thumb_url", text(urls[4].as_str())),
            ("Has_been_viewed", RawValue::Integer(1)),
            ("Mixed_id", text(mixed)),
            ("By_user_id", text(owner_user.as_str())),
        ]));
    }

    let db: Vec<DbTable> = schema_for(app)
        .expect("tinder schema")
        .tables
        .iter()
        .map(|t| DbTable::from_spec(t, tables.remove(t.name).unwrap_or_default()))
        .collect();
    cx.tree.write_db(app, &src.file_path, &db)?;

    for url in photo_urls.iter().take(c.images) {
        cx.picasso(url)?;
    }
    for (match_id, _, created) in &matches {
        let path = format!("{}/cache/volley/{}.0", cx.pkg, cx.g.digits(10));
        let mut bytes = vec![0u8];
        bytes.extend(cx.g.control_bytes(11));
        let start = bytes.len();
        let json = format!(r#"{{"match_id":"{match_id}","matched":true,"date":{created}}}"#);
        bytes.extend_from_slice(json.as_bytes());
        bytes.extend(cx.g.control_bytes(4));
        cx.tree.write(&path, &bytes)?;
        cx.tree.manifest.volley_events.push(VolleyMatchEvent {
            app,
            match_id: match_id.clone(),
            matched: Some(true),
            occurred_at: Some(millis(*created)),
            source: ArtifactSource::file(path, FileKind::Opaque).with_range(start as u64, json.len() as u64),
        });
    }
    Ok(())
}

fn badoo(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::Badoo;
    cx.facebook_file(seed, c)?;
    let db = vec![
        DbTable::custom(
            "hits2",
            &[("hit_id", "INTEGER"), ("hit_time", "INTEGER"), ("hit_url", "TEXT"), ("hit_string", "TEXT")],
            Vec::new(),
        ),
        DbTable::custom("properties", &[("app_uid", "TEXT"), ("cid", "TEXT"), ("tid", "TEXT")], Vec::new()),
    ];
    let db_path = format!("{}/databases/{BADOO_EXPECTED_EMPTY_DB}", cx.pkg);
    cx.tree.write_db(app, &db_path, &db)?;

    if c.previews > 0 {
        let path = format!("{}/cache/{}", cx.pkg, cx.g.uuid());
        let source = ArtifactSource::file(path.clone(), FileKind::Opaque);
        let mut blob = vec![0x01u8];
        blob.extend(cx.g.control_bytes(7));
        for _ in 0..c.previews {
            let g = &mut cx.g;
            let user = format!("{}{}", g.pick(FIRST_NAMES), g.digits(2));
            let url = format!("http://pcache.badoocdn.example/p{}/{}.jpg", g.digits(3), g.hex(16));
            let msg = g.sentence();
            let suburb = g.pick(SUBURBS).to_string();
            let start = blob.len();
            for (i, field) in [&user, &url, &msg, &suburb].iter().enumerate() {
                if i > 0 {
                    let n = 1 + g.below(4) as usize;
                    blob.extend(g.control_bytes(n));
                }
                blob.extend_from_slice(field.as_bytes());
            }
            let range = source.with_range(start as u64, (blob.len() - start) as u64);
            blob.push(0);
            let n = 6 + g.below(10) as usize;
            blob.extend(g.control_bytes(n));
            cx.tree.manifest.locations.push(LocationFix {
                app,
                precision: LocationPrecision::Suburb { name: suburb.clone() },
                at: None,
                subject: Subject::Owner,
                origin: LocationOrigin::CarvedPreview,
                source: range.clone(),
            });
            cx.tree.manifest.previews.push(CarvedMessagePreview {
                app,
                username: user,
                profile_pic_url: url,
                last_message: msg,
                location_suburb: suburb,
                source: range,
            });
        }
        cx.tree.write(&path, &blob)?;
    }
    for _ in 0..c.images {
        cx.plain_image("downloader", ImageCache::Downloader, "")?;
    }
    Ok(())
}

fn meetme(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::MeetMe;
    cx.facebook_file(seed, c)?;
    if c.messages > 0 {
        let src = cx.db_source("meetme.db");
        let thread = cx.g.digits(7);
        let people = [cx.g.digits(8), cx.g.digits(8)];
        let mut rows = Vec::new();
        for k in 0..c.messages {
            let g = &mut cx.g;
            let sender = &people[k % 2];
            let at = cx.clock.tick(g);
            let body = g.sentence();
            let photo = (k == 0).then(|| format!("http://photos.meetme.example/{}.jpg", g.hex(20)));
            let row: Row = vec![
                ("sender_id".into(), text(sender.as_str())),
                ("body".into(), text(body.as_str())),
                ("created_at".into(), RawValue::Integer(at)),
                ("thread_id".into(), text(thread.as_str())),
                ("photo_url".into(), photo.clone().map(RawValue::Text).unwrap_or(RawValue::Null)),
            ];
            let source = src.with_record(format!("chat_messages:rowid={}", k + 1));
            if let Some(url) = photo {
                cx.tree.manifest.media_urls.push(MediaUrl {
                    app,
                    url,
                    table: "chat_messages".into(),
                    column: "photo_url".into(),
                    in_message_table: true,
                    source: source.clone(),
                });
            }
            cx.tree.manifest.messages.push(ChatMessage {
                app,
                message_id: (k + 1).to_string(),
                sender_id: Some(sender.clone()),
                recipient_id: None,
                peer_id: None,
                thread_id: Some(thread.clone()),
                sent_at: secs(at),
                time_unit: TimeUnit::Seconds,
                body: MessageBody::Text(body),
                direction: Direction::Unknown,
                unread: None,
                failed: None,
                flags: BTreeSet::from([MessageFlag::Heuristic]),
                source,
            });
            rows.push(row);
        }
        let table = DbTable::custom(
            "chat_messages",
            &[("sender_id", "TEXT"), ("body", "TEXT"), ("created_at", "INTEGER"), ("thread_id", "TEXT"), ("photo_url", "TEXT")],
            rows,
        );
        cx.tree.write_db(app, &src.file_path, &[table])?;
    }
    for _ in 0..c.images {
        cx.plain_image("images", ImageCache::Other, ".jpg")?;
    }
    Ok(())
}

fn jaumo(cx: &mut Ctx<'_, '_>, seed: u64, c: &AppCounts) -> Result<()> {
    let app = AppId::Jaumo;
    cx.facebook_file(seed, c)?;
    if c.profiles == 0 {
        return Ok(());
    }
    let src = cx.db_source("jaumo.db");
    let ids = cx.unique_ids(c.profiles, |g| g.digits(8));
    let mut rows = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let url = format!("http://photos.jaumo.example/{id}/{}.jpg", cx.g.hex(12));
        rows.push(vec![
            ("id".to_string(), text(id.as_str())),
            ("name".to_string(), text(cx.g.first_name())),
            ("picUrl".to_string(), text(url.as_str())),
        ]);
        cx.tree.manifest.media_urls.push(MediaUrl {
            app,
            url,
            table: "users".into(),
            column: "picUrl".into(),
            in_message_table: false,
            source: src.with_record(format!("users:rowid={}", i + 1)),
        });
    }
    let table = DbTable::custom("users", &[("id", "TEXT"), ("name", "TEXT"), ("picUrl", "TEXT")], rows);
    cx.tree.write_db(app, &src.file_path, &[table])
}

/// Deliberately broken files under `app`'s package.
pub(crate) fn inject_malformed(tree: &mut Tree<'_>, seed: u64, app: AppId, m: &Malformed) -> Result<()> {
    let pkg = format!("data/data/{}", package_of(app));
    let mut g = Gen::new(seed, stream(app, 2));
    if m.prefs {
        let path = format!("{pkg}/shared_prefs/broken_settings.xml");
        tree.write(&path, b"<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n    <string name=\"a\">unterminated\n")?;
        tree.manifest.malformed.push(path);
    }
    if m.database {
        let path = format!("{pkg}/databases/corrupt.db");
        let mut bytes = b"SQLite format 3\0".to_vec();
        bytes.extend(g.high_bytes(200));
        tree.write(&path, &bytes)?;
        tree.manifest.malformed.push(path);
    }
    if m.cache {
        let dir = format!("{pkg}/cache/Picasso-cache");
        tree.write(&format!("{dir}/broken.o"), b"HTTP/1.1 200 OK\r\nContent-Type: image/jpeg\r\n")?;
        tree.write(&format!("{dir}/broken.i"), &jpeg(&mut g))?;
        tree.manifest.malformed.push(format!("{dir}/broken.o"));
    }
    Ok(())
}
