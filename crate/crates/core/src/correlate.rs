//! Cross-artifact views over a finished bundle.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AppId, ArtifactSource, EvidenceBundle, Instant, LocationFix, MarkerKind, MessageBody, Subject,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Message,
    Match,
    Moment,
    Location,
    TokenActivity,
    LastActive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub at: Instant,
    pub kind: EventKind,
    pub app: AppId,
    pub summary: String,
    pub refs: Vec<ArtifactSource>,
}

fn short(body: &MessageBody) -> String {
    match body {
        MessageBody::Text(t) => {
            let mut s: String = t.chars().take(60).collect();
            if t.chars().count() > 60 {
                s.push_str("...");
            }
            format!("{s:?}")
        }
        MessageBody::Media(m) => format!("[media {m}]"),
    }
}

fn who(id: &Option<String>) -> &str {
    id.as_deref().unwrap_or("?")
}

/// One event per timed message, match, volley match event, media post,
/// location fix, token expiry and activity marker, ordered by
/// `(at, app, kind)` and then by position in the bundle.
pub fn build_timeline(bundle: &EvidenceBundle) -> Vec<TimelineEvent> {
    let a = &bundle.artifacts;
    let mut ev = Vec::new();
    let mut push = |at, kind, app, summary: String, src: &ArtifactSource| {
        ev.push(TimelineEvent {
            at,
            kind,
            app,
            summary,
            refs: vec![src.clone()],
        })
    };
    for m in &a.messages {
        let summary = match (&m.sender_id, &m.recipient_id) {
            (None, None) => format!("message in thread {} with {}: {}", who(&m.thread_id), who(&m.peer_id), short(&m.body)),
            _ => format!("message {} -> {}: {}", who(&m.sender_id), who(&m.recipient_id), short(&m.body)),
        };
        push(m.sent_at, EventKind::Message, m.app, summary, &m.source);
    }
    for m in &a.matches {
        push(m.created_at, EventKind::Match, m.app, format!("match {} with {}", m.match_id, m.counterpart_user_id), &m.source);
    }
    for v in &a.volley_events {
        if let Some(at) = v.occurred_at {
            let state = match v.matched {
                Some(true) => "matched",
                Some(false) => "not matched",
                None => "match event",
            };
            push(at, EventKind::Match, v.app, format!("cached response: {} {state}", v.match_id), &v.source);
        }
    }
    for m in &a.media {
        if let Some(at) = m.created_at {
            push(at, EventKind::Moment, m.app, format!("{:?} {} posted by {}", m.kind, m.media_id, who(&m.owner_user_id)), &m.source);
        }
    }
    for l in &a.locations {
        if let Some(at) = l.at {
            push(at, EventKind::Location, l.app, format!("location fix ({:?})", l.origin), &l.source);
        }
    }
    for t in &a.tokens {
        if let Some(at) = t.expiry_hint {
            push(at, EventKind::TokenActivity, t.app, format!("{} expiry", t.provider.label()), &t.source);
        }
    }
    for m in &a.markers {
        let summary = match m.kind {
            MarkerKind::LastActive => "last active",
            MarkerKind::LocationLastSent => "location last sent",
        };
        push(m.at, EventKind::LastActive, m.app, summary.to_string(), &m.source);
    }
    ev.sort_by_key(|x| (x.at, x.app, x.kind));
    ev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkVia {
    /// Profile image hash is a substring of the cached URL.
    HashInUrl,
    /// Profile picture URL equals the cached URL.
    UrlEquality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageLink {
    pub app: AppId,
    pub profile_id: String,
    pub content_hash: String,
    pub origin_url: String,
    pub via: LinkVia,
    pub profile_ref: ArtifactSource,
    pub image_ref: ArtifactSource,
}

/// Edges between profiles and cached images of the same app.
pub fn link_profile_images(bundle: &EvidenceBundle) -> Vec<ImageLink> {
    let a = &bundle.artifacts;
    let mut out = Vec::new();
    for p in &a.profiles {
        for img in a.images.iter().filter(|i| i.app == p.app) {
            let Some(url) = &img.origin_url else { continue };
            let via = if p.image_hash.as_deref().is_some_and(|h| !h.is_empty() && url.contains(h)) {
                LinkVia::HashInUrl
            } else if p.image_url.as_deref() == Some(url.as_str()) {
                LinkVia::UrlEquality
            } else {
                continue;
            };
            out.push(ImageLink {
                app: p.app,
                profile_id: p.profile_id.clone(),
                content_hash: img.content_hash.clone(),
                origin_url: url.clone(),
                via,
                profile_ref: p.source.clone(),
                image_ref: img.bytes_ref.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Identity {
    pub app: AppId,
    pub profile_id: String,
}

impl Identity {
    pub fn new(app: AppId, profile_id: impl Into<String>) -> Self {
        Identity {
            app,
            profile_id: profile_id.into(),
        }
    }

    /// Parses `app:profile_id`; the app name is matched case-insensitively.
    pub fn parse(text: &str) -> std::result::Result<Identity, String> {
        let (app, id) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| format!("expected app:profile_id, got {text:?}"))?;
        let app = AppId::from_name(app).ok_or_else(|| format!("unknown app {app:?}"))?;
        if id.is_empty() {
            return Err("empty profile id".to_string());
        }
        Ok(Identity::new(app, id))
    }
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.app, self.profile_id)
    }
}

/// Analyst-asserted equivalences between identities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentityMap {
    parent: BTreeMap<Identity, Identity>,
}

impl IdentityMap {
    /// One `app:profile_id=app:profile_id` per line; blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<IdentityMap> {
        let mut map = IdentityMap::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| Error::IdentityMap { line: n + 1, reason };
            let (l, r) = line
                .split_once('=')
                .ok_or_else(|| err("missing '='".to_string()))?;
            let l = Identity::parse(l).map_err(err)?;
            let r = Identity::parse(r).map_err(err)?;
            map.join(l, r);
        }
        Ok(map)
    }

    pub fn join(&mut self, a: Identity, b: Identity) {
        let (ra, rb) = (self.canonical(&a), self.canonical(&b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }

    /// Smallest identity of the equivalence class.
    pub fn canonical(&self, id: &Identity) -> Identity {
        let mut cur = id.clone();
        while let Some(p) = self.parent.get(&cur) {
            cur = p.clone();
        }
        cur
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactEvidence {
    pub identity_a: Identity,
    pub identity_b: Identity,
    pub first_contact: Instant,
    pub last_contact: Instant,
    pub message_count: usize,
    pub match_count: usize,
    pub supporting: Vec<ArtifactSource>,
}

/// Messages and matches that involve both `a` and `b`, optionally only
/// those strictly before `before`. The device owner participates in every
/// match and in messages whose other side is recorded as a peer.
pub fn contact_evidence(
    bundle: &EvidenceBundle,
    a: &Identity,
    b: &Identity,
    before: Option<Instant>,
    map: &IdentityMap,
) -> Option<ContactEvidence> {
    let (ca, cb) = (map.canonical(a), map.canonical(b));
    if ca == cb {
        return None;
    }
    let art = &bundle.artifacts;
    let links = |app: AppId, ids: &[Option<&str>]| {
        let set: BTreeSet<Identity> = ids
            .iter()
            .flatten()
            .map(|id| map.canonical(&Identity::new(app, *id)))
            .collect();
        set.contains(&ca) && set.contains(&cb)
    };
    let in_window = |at: Instant| before.is_none_or(|b| at < b);

    let mut times = Vec::new();
    let mut supporting = Vec::new();
    let mut message_count = 0;
    let mut match_count = 0;
    for m in &art.messages {
        let owner = if m.peer_id.is_some() { bundle.owner(m.app) } else { None };
        let ids = [m.sender_id.as_deref(), m.recipient_id.as_deref(), m.peer_id.as_deref(), owner];
        if in_window(m.sent_at) && links(m.app, &ids) {
            message_count += 1;
            times.push(m.sent_at);
            supporting.push(m.source.clone());
        }
    }
    for m in &art.matches {
        let ids = [Some(m.counterpart_user_id.as_str()), bundle.owner(m.app)];
        if in_window(m.created_at) && links(m.app, &ids) {
            match_count += 1;
            times.push(m.created_at);
            supporting.push(m.source.clone());
        }
    }
    let first_contact = *times.iter().min()?;
    let last_contact = *times.iter().max()?;
    let (identity_a, identity_b) = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    Some(ContactEvidence {
        identity_a,
        identity_b,
        first_contact,
        last_contact,
        message_count,
        match_count,
        supporting,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub fix: LocationFix,
    pub untimed: bool,
}

/// Owner location fixes in time order; untimed fixes follow, flagged.
pub fn location_history(bundle: &EvidenceBundle) -> Vec<HistoryEntry> {
    let mut fixes: Vec<&LocationFix> = bundle
        .artifacts
        .locations
        .iter()
        .filter(|l| l.subject == Subject::Owner)
        .collect();
    fixes.sort_by_key(|l| (l.at.is_none(), l.at));
    fixes
        .into_iter()
        .map(|f| HistoryEntry {
            untimed: f.at.is_none(),
            fix: f.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChatMessage, Direction, FileKind, MatchRecord, TimeUnit};
    use chrono::DateTime;

    fn t(s: i64) -> Instant {
        DateTime::from_timestamp(s, 0).unwrap()
    }

    fn msg(app: AppId, from: &str, to: &str, at: i64, id: &str) -> ChatMessage {
        ChatMessage {
            app,
            message_id: id.into(),
            sender_id: Some(from.into()),
            recipient_id: Some(to.into()),
            peer_id: None,
            thread_id: None,
            sent_at: t(at),
            time_unit: TimeUnit::Seconds,
            body: MessageBody::Text("x".into()),
            direction: Direction::Unknown,
            unread: None,
            failed: None,
            flags: Default::default(),
            source: ArtifactSource::file("db", FileKind::SqliteDb).with_record(id),
        }
    }

    fn bundle() -> EvidenceBundle {
        let mut b = EvidenceBundle::default();
        for (i, at) in [10, 20, 30, 40, 50].iter().enumerate() {
            let (f, to) = if i % 2 == 0 { ("me", "p") } else { ("p", "me") };
            b.artifacts.messages.push(msg(AppId::Grindr, f, to, *at, &format!("m{i}")));
        }
        b.artifacts.messages.push(msg(AppId::Grindr, "me", "q", 15, "other"));
        b
    }

    #[test]
    fn contact_counts_and_before() {
        let b = bundle();
        let me = Identity::new(AppId::Grindr, "me");
        let p = Identity::new(AppId::Grindr, "p");
        let map = IdentityMap::default();
        let all = contact_evidence(&b, &me, &p, None, &map).unwrap();
        assert_eq!(all.message_count, 5);
        assert_eq!((all.first_contact, all.last_contact), (t(10), t(50)));
        let early = contact_evidence(&b, &me, &p, Some(t(25)), &map).unwrap();
        assert_eq!(early.message_count, 2);
        assert_eq!(contact_evidence(&b, &p, &me, Some(t(25)), &map), Some(early));
        let z = Identity::new(AppId::Grindr, "z");
        assert!(contact_evidence(&b, &p, &z, None, &map).is_none());
        assert!(contact_evidence(&b, &me, &p, Some(t(10)), &map).is_none());
    }

    #[test]
    fn identity_map_joins_apps() {
        let mut b = bundle();
        b.owners.insert(AppId::Tinder, "tme".into());
        b.artifacts.matches.push(MatchRecord {
            app: AppId::Tinder,
            match_id: "m".into(),
            counterpart_user_id: "tp".into(),
            counterpart_name: None,
            created_at: t(5),
            last_activity: None,
            viewed: None,
            raw_fields: Default::default(),
            source: ArtifactSource::file("t", FileKind::SqliteDb),
        });
        let map = IdentityMap::parse("# analyst note\nTinder:tp=Grindr:p\n\nmeetme:x=Grindr:p\n").unwrap();
        let me = Identity::new(AppId::Grindr, "me");
        let tp = Identity::new(AppId::Tinder, "tp");
        let ev = contact_evidence(&b, &me, &tp, None, &map).unwrap();
        assert_eq!(ev.message_count, 5);
        assert_eq!(ev.match_count, 0);
        let tme = Identity::new(AppId::Tinder, "tme");
        let ev = contact_evidence(&b, &tme, &Identity::new(AppId::Grindr, "p"), None, &map).unwrap();
        assert_eq!(ev.match_count, 1);
        assert!(matches!(IdentityMap::parse("a=b"), Err(Error::IdentityMap { line: 1, .. })));
        assert!(matches!(IdentityMap::parse("\nGrindr:a=Nope:b"), Err(Error::IdentityMap { line: 2, .. })));
    }

    #[test]
    fn timeline_ties_are_deterministic() {
        let mut b = EvidenceBundle::default();
        b.artifacts.messages.push(msg(AppId::Tinder, "a", "b", 7, "x"));
        b.artifacts.messages.push(msg(AppId::Grindr, "a", "b", 7, "y"));
        b.artifacts.messages.push(msg(AppId::Grindr, "a", "b", 3, "z"));
        let tl = build_timeline(&b);
        let order: Vec<_> = tl.iter().map(|e| e.refs[0].record.clone().unwrap()).collect();
        assert_eq!(order, vec!["z", "y", "x"]);
        assert!(build_timeline(&EvidenceBundle::default()).is_empty());
    }
}
