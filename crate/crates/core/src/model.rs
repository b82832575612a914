//! Domain types shared across the extraction pipeline.
//!
//! Everything here is plain data: immutable once built, cheap to clone and
//! safe to share between readers. Timestamps are always UTC; the device
//! timezone is never guessed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub type Instant = DateTime<Utc>;

/// The eight analyzed dating apps, plus a bucket for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AppId {
    Badoo,
    Grindr,
    Skout,
    Tinder,
    MeetMe,
    Jaumo,
    FullCircle,
    MiuMeet,
    Unknown,
}

impl AppId {
    pub const KNOWN: [AppId; 8] = [
        AppId::Badoo,
        AppId::Grindr,
        AppId::Skout,
        AppId::Tinder,
        AppId::MeetMe,
        AppId::Jaumo,
        AppId::FullCircle,
        AppId::MiuMeet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AppId::Badoo => "Badoo",
            AppId::Grindr => "Grindr",
            AppId::Skout => "Skout",
            AppId::Tinder => "Tinder",
            AppId::MeetMe => "Meet Me",
            AppId::Jaumo => "Jaumo",
            AppId::FullCircle => "FullCircle",
            AppId::MiuMeet => "MiuMeet",
            AppId::Unknown => "Unknown",
        }
    }

    /// Case-insensitive lookup by display name; spaces are ignored so both
    /// "Meet Me" and "MeetMe" resolve.
    pub fn from_name(name: &str) -> Option<AppId> {
        let wanted: String = name
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        AppId::KNOWN
            .into_iter()
            .chain(std::iter::once(AppId::Unknown))
            .find(|app| app.name().replace(' ', "").to_ascii_lowercase() == wanted)
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FileKind {
    SqliteDb,
    PrefsXml,
    Jpeg,
    WebP,
    Png,
    Json,
    PicassoMeta,
    Opaque,
}

/// Where an artifact came from. `file_path` is relative to the evidence
/// root and always uses `/` separators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactSource {
    pub file_path: String,
    pub kind: FileKind,
    /// `(offset, len)` inside the file, for carved artifacts.
    pub byte_range: Option<(u64, u64)>,
    /// Record locator inside the file, e.g. `chat:rowid=3`.
    pub record: Option<String>,
}

impl ArtifactSource {
    pub fn file(file_path: impl Into<String>, kind: FileKind) -> Self {
        ArtifactSource {
            file_path: file_path.into(),
            kind,
            byte_range: None,
            record: None,
        }
    }

    pub fn with_record(&self, record: impl Into<String>) -> Self {
        ArtifactSource {
            record: Some(record.into()),
            ..self.clone()
        }
    }

    pub fn with_range(&self, offset: u64, len: u64) -> Self {
        ArtifactSource {
            byte_range: Some((offset, len)),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegistryOrigin {
    /// Package path documented for the app.
    Documented,
    /// Package path from the editable registry section.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppInstall {
    pub app: AppId,
    pub package: String,
    /// Relative to the evidence root, e.g. `data/data/com.tinder`.
    pub package_path: String,
    pub registry_origin: Option<RegistryOrigin>,
    pub version_hint: Option<String>,
}

/// How an integer epoch was interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    Milliseconds,
    /// Value was stored as an RFC 3339 string, no unit inference needed.
    Rfc3339,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inbound,
    Outbound,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum MessageBody {
    Text(String),
    /// Image hash or URL standing in for an attached picture.
    Media(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageFlag {
    /// Recovered by the generic sweep rather than a known schema.
    Heuristic,
    /// Rich-text message, only sent by admin accounts.
    AdminOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub app: AppId,
    pub message_id: String,
    pub sender_id: Option<String>,
    pub recipient_id: Option<String>,
    /// The non-owner participant, when it can be told apart.
    pub peer_id: Option<String>,
    pub thread_id: Option<String>,
    pub sent_at: Instant,
    pub time_unit: TimeUnit,
    pub body: MessageBody,
    pub direction: Direction,
    pub unread: Option<bool>,
    pub failed: Option<bool>,
    pub flags: BTreeSet<MessageFlag>,
    pub source: ArtifactSource,
}

/// A database cell as stored, before any interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum RawValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    /// Hex-encoded bytes.
    Blob(String),
}

impl RawValue {
    pub fn as_text(&self) -> Option<String> {
        match self {
            RawValue::Null => None,
            RawValue::Integer(i) => Some(i.to_string()),
            RawValue::Real(r) => Some(r.to_string()),
            RawValue::Text(s) => Some(s.clone()),
            RawValue::Blob(h) => Some(h.clone()),
        }
    }

    pub fn as_nonempty_text(&self) -> Option<String> {
        self.as_text().filter(|s| !s.is_empty())
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            RawValue::Integer(i) => Some(*i),
            RawValue::Text(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            RawValue::Integer(i) => Some(*i != 0),
            RawValue::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "1" | "true" => Some(true),
                "0" | "false" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, RawValue::Null)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SocialProvider {
    Facebook,
    Twitter,
    Instagram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileOrigin {
    AppUser,
    FacebookFriend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub app: AppId,
    pub profile_id: String,
    pub origin: ProfileOrigin,
    pub is_owner: bool,
    pub display_name: Option<String>,
    pub birth_date: Option<NaiveDate>,
    pub age: Option<i64>,
    pub social_ids: BTreeMap<SocialProvider, String>,
    pub image_hash: Option<String>,
    pub image_url: Option<String>,
    pub last_seen: Option<Instant>,
    pub last_message_at: Option<Instant>,
    pub distance_m: Option<f64>,
    pub raw_fields: BTreeMap<String, RawValue>,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub app: AppId,
    pub match_id: String,
    pub counterpart_user_id: String,
    pub counterpart_name: Option<String>,
    pub created_at: Instant,
    pub last_activity: Option<Instant>,
    pub viewed: Option<bool>,
    pub raw_fields: BTreeMap<String, RawValue>,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "precision", rename_all = "snake_case")]
pub enum LocationPrecision {
    Exact {
        lat: f64,
        lon: f64,
    },
    Suburb {
        name: String,
    },
    Region {
        country: Option<String>,
        state: Option<String>,
        distance_m: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "subject", content = "profile_id", rename_all = "snake_case")]
pub enum Subject {
    Owner,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationOrigin {
    Prefs,
    Analytics,
    CarvedPreview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationFix {
    pub app: AppId,
    #[serde(flatten)]
    pub precision: LocationPrecision,
    pub at: Option<Instant>,
    pub subject: Subject,
    pub origin: LocationOrigin,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AuthProvider {
    Facebook,
    Grindr,
    Tinder,
    MiuMeet,
    Other,
}

impl AuthProvider {
    pub fn label(self) -> &'static str {
        match self {
            AuthProvider::Facebook => "Facebook Token",
            AuthProvider::Grindr => "Grindr Token",
            AuthProvider::Tinder => "Tinder Token",
            AuthProvider::MiuMeet => "MiuMeet Token",
            AuthProvider::Other => "Other Token",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AuthToken {
    pub provider: AuthProvider,
    pub app: AppId,
    pub token: String,
    pub source: ArtifactSource,
    pub expiry_hint: Option<Instant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImageFormat {
    Jpeg,
    WebP,
    Png,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageCache {
    Picasso,
    Downloader,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CachedImage {
    pub app: AppId,
    pub origin_url: Option<String>,
    /// Hex SHA-256 of the image bytes.
    pub content_hash: String,
    pub format: ImageFormat,
    pub cache: ImageCache,
    pub bytes_ref: ArtifactSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Moment,
    Photo,
    PhotoMoment,
}

/// Posted media (moments, photo sets) with every URL the row carried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaRecord {
    pub app: AppId,
    pub kind: MediaKind,
    pub media_id: String,
    pub owner_user_id: Option<String>,
    pub created_at: Option<Instant>,
    pub text: Option<String>,
    pub urls: Vec<String>,
    pub raw_fields: BTreeMap<String, RawValue>,
    pub source: ArtifactSource,
}

/// A URL found in an arbitrary database cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MediaUrl {
    pub app: AppId,
    pub url: String,
    pub table: String,
    pub column: String,
    /// The table looked like a message store.
    pub in_message_table: bool,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EmailRecord {
    pub app: AppId,
    pub address: String,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    LastActive,
    LocationLastSent,
}

/// A single activity timestamp recovered from preferences.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityMarker {
    pub app: AppId,
    pub kind: MarkerKind,
    pub at: Instant,
    pub time_unit: TimeUnit,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceIdentifier {
    pub app: AppId,
    pub name: String,
    pub value: String,
    pub source: ArtifactSource,
}

/// A row from a known table that has no normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub app: AppId,
    pub table: String,
    pub fields: BTreeMap<String, RawValue>,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VolleyMatchEvent {
    pub app: AppId,
    pub match_id: String,
    pub matched: Option<bool>,
    pub occurred_at: Option<Instant>,
    pub source: ArtifactSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CarvedMessagePreview {
    pub app: AppId,
    pub username: String,
    pub profile_pic_url: String,
    pub last_message: String,
    pub location_suburb: String,
    pub source: ArtifactSource,
}

/// Interpretation choices that a report must disclose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    EpochSeconds,
    EpochMilliseconds,
    LatLonKeyMatch,
    FacebookTokenKeyMatch,
    OwnerIdKeyMatch,
    GenericSweep,
    StringCarving,
    RegistryExtended,
    GalleryMediaBody,
}

impl Heuristic {
    pub fn describe(self) -> &'static str {
        match self {
            Heuristic::EpochSeconds => {
                "integer epochs <= 10^11 were read as seconds since 1970-01-01T00:00:00Z"
            }
            Heuristic::EpochMilliseconds => {
                "integer epochs > 10^11 were read as milliseconds since 1970-01-01T00:00:00Z"
            }
            Heuristic::LatLonKeyMatch => {
                "preference keys containing lat/lon/lng with in-range decimals were read as coordinates"
            }
            Heuristic::FacebookTokenKeyMatch => {
                "in Facebook SDK preference files the longest value under a key containing 'token' was taken as the token"
            }
            Heuristic::OwnerIdKeyMatch => {
                "the device owner id was taken from a user-id style preference key"
            }
            Heuristic::GenericSweep => {
                "tables without a known schema were swept by column-name patterns"
            }
            Heuristic::StringCarving => {
                "undocumented cache blobs were carved by printable-string adjacency"
            }
            Heuristic::RegistryExtended => {
                "some installs were identified from the editable registry section"
            }
            Heuristic::GalleryMediaBody => {
                "chat bodies listed in the image gallery were treated as image references"
            }
        }
    }
}

/// Everything recovered from one acquisition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub messages: Vec<ChatMessage>,
    pub profiles: Vec<ProfileRecord>,
    pub matches: Vec<MatchRecord>,
    pub locations: Vec<LocationFix>,
    pub tokens: Vec<AuthToken>,
    pub images: Vec<CachedImage>,
    pub media: Vec<MediaRecord>,
    pub media_urls: Vec<MediaUrl>,
    pub emails: Vec<EmailRecord>,
    pub markers: Vec<ActivityMarker>,
    pub device_ids: Vec<DeviceIdentifier>,
    pub raw_rows: Vec<RawRow>,
    pub volley_events: Vec<VolleyMatchEvent>,
    pub previews: Vec<CarvedMessagePreview>,
    pub heuristics: BTreeSet<Heuristic>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    /// Appends every collection of `other` onto `self`.
    pub fn absorb(&mut self, other: Artifacts) {
        self.messages.extend(other.messages);
        self.profiles.extend(other.profiles);
        self.matches.extend(other.matches);
        self.locations.extend(other.locations);
        self.tokens.extend(other.tokens);
        self.images.extend(other.images);
        self.media.extend(other.media);
        self.media_urls.extend(other.media_urls);
        self.emails.extend(other.emails);
        self.markers.extend(other.markers);
        self.device_ids.extend(other.device_ids);
        self.raw_rows.extend(other.raw_rows);
        self.volley_events.extend(other.volley_events);
        self.previews.extend(other.previews);
        self.heuristics.extend(other.heuristics);
        self.warnings.extend(other.warnings);
    }

    pub fn note_epoch(&mut self, unit: TimeUnit) {
        match unit {
            TimeUnit::Seconds => self.heuristics.insert(Heuristic::EpochSeconds),
            TimeUnit::Milliseconds => self.heuristics.insert(Heuristic::EpochMilliseconds),
            TimeUnit::Rfc3339 => false,
        };
    }

    /// Source of every artifact, for provenance checks.
    pub fn sources(&self) -> Vec<&ArtifactSource> {
        let mut out: Vec<&ArtifactSource> = Vec::new();
        out.extend(self.messages.iter().map(|a| &a.source));
        out.extend(self.profiles.iter().map(|a| &a.source));
        out.extend(self.matches.iter().map(|a| &a.source));
        out.extend(self.locations.iter().map(|a| &a.source));
        out.extend(self.tokens.iter().map(|a| &a.source));
        out.extend(self.images.iter().map(|a| &a.bytes_ref));
        out.extend(self.media.iter().map(|a| &a.source));
        out.extend(self.media_urls.iter().map(|a| &a.source));
        out.extend(self.emails.iter().map(|a| &a.source));
        out.extend(self.markers.iter().map(|a| &a.source));
        out.extend(self.device_ids.iter().map(|a| &a.source));
        out.extend(self.raw_rows.iter().map(|a| &a.source));
        out.extend(self.volley_events.iter().map(|a| &a.source));
        out.extend(self.previews.iter().map(|a| &a.source));
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub root: String,
    pub installs: Vec<AppInstall>,
    /// Owner profile id per app, when one could be established.
    pub owners: BTreeMap<AppId, String>,
    /// Files found under an `external/` tree, normally none.
    pub external_files: Vec<String>,
    #[serde(flatten)]
    pub artifacts: Artifacts,
}

impl EvidenceBundle {
    pub fn owner(&self, app: AppId) -> Option<&str> {
        self.owners.get(&app).map(String::as_str)
    }

    pub fn install(&self, app: AppId) -> Option<&AppInstall> {
        self.installs.iter().find(|i| i.app == app)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn app_names_round_trip() {
        for app in AppId::KNOWN {
            assert_eq!(AppId::from_name(app.name()), Some(app));
        }
        assert_eq!(AppId::from_name("meetme"), Some(AppId::MeetMe));
        assert_eq!(AppId::from_name("Blendr"), None);
    }

    #[test]
    fn raw_value_coercions() {
        assert_eq!(RawValue::Text(" 12 ".into()).as_i64(), Some(12));
        assert_eq!(RawValue::Integer(0).as_bool(), Some(false));
        assert_eq!(RawValue::Text("true".into()).as_bool(), Some(true));
        assert_eq!(RawValue::Real(1.5).as_bool(), None);
        assert_eq!(RawValue::Null.as_text(), None);
        assert_eq!(RawValue::Text(String::new()).as_nonempty_text(), None);
    }
}
