//! Known database layouts for Grindr, Skout and Tinder.
//!
//! Table and column names are case-sensitive transcriptions of the
//! observed schemas; roles say how each column is interpreted (and how the
//! fixture forge fills it).

use serde::Serialize;

use crate::model::AppId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Primary identifier of the row.
    Id,
    /// Reference to a user/profile id.
    ProfileRef,
    MessageRef,
    /// Groups messages into a conversation.
    ThreadRef,
    ForeignKey,
    Sender,
    Recipient,
    EpochTime,
    /// Date of birth.
    Date,
    Body,
    /// Message type discriminator.
    Category,
    Name,
    Text,
    Flag,
    Integer,
    Measure,
    Hash,
    Url,
    SocialHandle,
    /// Free-form event parameters.
    Params,
    /// Observed empty.
    Unused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColumnSpec {
    pub name: &'static str,
    pub role: ColumnRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableSpec {
    pub name: &'static str,
    pub columns: &'static [ColumnSpec],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AppSchema {
    pub app: AppId,
    /// Main database file name under `databases/`.
    pub db_file: &'static str,
    pub tables: &'static [TableSpec],
}

macro_rules! cols {
    ($($name:literal : $role:ident),* $(,)?) => {
        &[$(ColumnSpec { name: $name, role: ColumnRole::$role }),*]
    };
}

pub const GRINDR_TABLES: &[TableSpec] = &[
    TableSpec {
        name: "blocks",
        columns: cols!["profile": ProfileRef, "timeStamp": EpochTime, "isBlocked": Flag],
    },
    TableSpec {
        name: "bodyTypeField",
        columns: cols!["fieldID": Id, "name": Name],
    },
    TableSpec {
        name: "broadcast",
        columns: cols!["messageID": Id, "expirationDate": EpochTime],
    },
    TableSpec {
        name: "chat",
        columns: cols![
            "messageID": Id,
            "Source": Sender,
            "Target": Recipient,
            "Timestamp": EpochTime,
            "Type": Category,
            "Body": Body,
            "Unread": Flag,
            "Failed": Flag,
        ],
    },
    TableSpec {
        name: "ethnicityField",
        columns: cols!["fieldID": Id, "Name": Name],
    },
    TableSpec {
        name: "flagReason",
        columns: cols!["fieldID": Id, "Name": Name],
    },
    TableSpec {
        name: "imageGallery",
        columns: cols!["messageID": MessageRef, "mediaHash": Hash, "Profile": ProfileRef],
    },
    TableSpec {
        name: "lookingFor",
        columns: cols!["Profile": ProfileRef, "lookingForId": ForeignKey],
    },
    TableSpec {
        name: "lookingForField",
        columns: cols!["fieldID": Id, "Name": Name],
    },
    TableSpec {
        name: "moderation",
        columns: cols![
            "messageID": Id,
            "Message": Body,
            "Type": Category,
            "mediaHash": Hash,
            "Unread": Flag,
        ],
    },
    TableSpec {
        name: "profile",
        columns: cols![
            "profileID": Id,
            "about": Text,
            "age": Integer,
            "birthdate": Date,
            "isBlocked": Flag,
            "isBlocker": Flag,
            "bodyType": ForeignKey,
            "children": Integer,
            "displayName": Name,
            "ethnicity": ForeignKey,
            "weight": Measure,
            "facebookID": SocialHandle,
            "headline": Text,
            "headlineDate": EpochTime,
            "height": Measure,
            "isCurrent": Flag,
            "isFave": Flag,
            "Version": Text,
            "profileImageHash": Hash,
            "relationshipStatus": ForeignKey,
            "showAge": Flag,
            "showDistance": Flag,
            "twitterID": SocialHandle,
            "instagramID": SocialHandle,
            "lastSeen": EpochTime,
            "profileStatus": Unused,
        ],
    },
];

pub const SKOUT_TABLES: &[TableSpec] = &[
    TableSpec {
        name: "skoutUsersTable",
        columns: cols![
            "userID": Id,
            "userName": Name,
            "picUrl": Url,
            "userLastMessageID": MessageRef,
            "lastMessageTimestamp": EpochTime,
        ],
    },
    TableSpec {
        name: "skoutMessages",
        columns: cols![
            "messageID": Id,
            "Timestamp": EpochTime,
            "fromUserID": Sender,
            "toUserID": Recipient,
            "chatID": ThreadRef,
            "Type": Category,
            "Message": Body,
            "addedFrom": Unused,
            "messageOrdered": Flag,
        ],
    },
];

pub const TINDER_TABLES: &[TableSpec] = &[
    TableSpec {
        name: "messages",
        columns: cols![
            "User_id": ProfileRef,
            "Match_id": ThreadRef,
            "Client_created": Unused,
            "Created": EpochTime,
            "Has_error": Flag,
            "Text": Body,
            "Viewed": Flag,
        ],
    },
    TableSpec {
        name: "Analytic_Events",
        columns: cols!["timestamp": EpochTime, "Name": Name, "Params": Params],
    },
    TableSpec {
        name: "facebook_friends",
        columns: cols![
            "Id": Id,
            "Name": Name,
            "Avatar_url": Url,
            "State": Unused,
            "Tinder": ProfileRef,
        ],
    },
    TableSpec {
        name: "Match_requests",
        columns: &[],
    },
    TableSpec {
        name: "matches",
        columns: cols![
            "Id": Id,
            "User_id": ProfileRef,
            "Created": EpochTime,
            "Last_activity": EpochTime,
            "Server_message_count": Unused,
            "Touched": Flag,
            "Viewed": Flag,
            "User_name": Name,
            "Draft_msg": Unused,
            "Reported_for": Flag,
            "Gender": Integer,
            "Following": Flag,
        ],
    },
    TableSpec {
        name: "Moment_likes",
        columns: cols![
            "Date": EpochTime,
            "Moment_id": ForeignKey,
            "Liked_by_id": ProfileRef,
            "Thumb_url": Url,
            "Has_been_viewed": Flag,
            "Mixed_id": Id,
            "By_user_id": ProfileRef,
        ],
    },
    TableSpec {
        name: "moments",
        columns: cols![
            "Id": Id,
            "User_id": ProfileRef,
            "Created": EpochTime,
            "Text": Text,
            "Photo_id": ForeignKey,
            "Filter": Text,
            "Text_alignment": Text,
            "Text_size": Measure,
            "Text_height": Measure,
            "Is_pending": Flag,
            "Has_failed": Flag,
            "Rated_type": Flag,
            "Num_likes": Integer,
        ],
    },
    TableSpec {
        name: "photos",
        columns: cols![
            "Id": Id,
            "User_id": ProfileRef,
            "Image_url": Url,
            "Origin_x": Measure,
            "Origin_y": Measure,
            "Height": Measure,
            "Width": Measure,
            "Xoffset_percent": Measure,
            "Yoffset_percent": Measure,
            "Xdistance_Percent": Measure,
            "Ydistance_Percent": Measure,
            "Photo_order": Integer,
        ],
    },
    TableSpec {
        name: "photo_moments",
        columns: cols![
            "Id": Id,
            "Large": Url,
            "Med": Url,
            "Orig": Url,
            "Small": Url,
            "thumb": Url,
        ],
    },
];

pub const SCHEMAS: &[AppSchema] = &[
    AppSchema {
        app: AppId::Grindr,
        db_file: "grindr.db",
        tables: GRINDR_TABLES,
    },
    AppSchema {
        app: AppId::Skout,
        db_file: "skout.db",
        tables: SKOUT_TABLES,
    },
    AppSchema {
        app: AppId::Tinder,
        db_file: "tinder.db",
        tables: TINDER_TABLES,
    },
];

/// Badoo keeps only this analytics database, which is expected empty.
pub const BADOO_EXPECTED_EMPTY_DB: &str = "google_analytics_v2.db";

/// Minimum share of spec columns that must be present for a table to be
/// read with its known layout.
pub const MATCH_THRESHOLD: f64 = 0.6;

pub fn schema_for(app: AppId) -> Option<&'static AppSchema> {
    SCHEMAS.iter().find(|s| s.app == app)
}

pub fn table_spec(app: AppId, table: &str) -> Option<&'static TableSpec> {
    schema_for(app)?.tables.iter().find(|t| t.name == table)
}

/// Fraction of spec columns present among `columns` (ASCII
/// case-insensitive, as SQLite treats column names). A spec with no
/// columns is fully covered.
pub fn column_overlap(spec: &TableSpec, columns: &[String]) -> f64 {
    if spec.columns.is_empty() {
        return 1.0;
    }
    let present = spec
        .columns
        .iter()
        .filter(|c| columns.iter().any(|a| a.eq_ignore_ascii_case(c.name)))
        .count();
    present as f64 / spec.columns.len() as f64
}

impl ColumnRole {
    /// Declared SQLite type used when materializing a spec.
    pub fn sql_type(self) -> &'static str {
        match self {
            ColumnRole::EpochTime | ColumnRole::Flag | ColumnRole::Integer | ColumnRole::ForeignKey => {
                "INTEGER"
            }
            ColumnRole::Measure => "REAL",
            _ => "TEXT",
        }
    }
}

/// `CREATE TABLE` statement carrying every column of `spec`. A spec
/// without columns gets a single placeholder `id` column.
pub fn create_table_sql(spec: &TableSpec) -> String {
    let cols: Vec<String> = if spec.columns.is_empty() {
        vec!["\"id\" INTEGER".to_string()]
    } else {
        spec.columns
            .iter()
            .map(|c| format!("\"{}\" {}", c.name, c.role.sql_type()))
            .collect()
    };
    format!("CREATE TABLE \"{}\" ({})", spec.name, cols.join(", "))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMatch {
    pub table_name: String,
    pub matched_spec: Option<&'static TableSpec>,
    pub column_overlap: f64,
}

/// Matches a table by exact name, accepting the spec only at or above
/// [`MATCH_THRESHOLD`] overlap.
pub fn match_table(app: AppId, table: &str, columns: &[String]) -> TableMatch {
    match table_spec(app, table) {
        Some(spec) => {
            let overlap = column_overlap(spec, columns);
            TableMatch {
                table_name: table.to_string(),
                matched_spec: (overlap >= MATCH_THRESHOLD).then_some(spec),
                column_overlap: overlap,
            }
        }
        None => TableMatch {
            table_name: table.to_string(),
            matched_spec: None,
            column_overlap: 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn table_counts_per_app() {
        assert_eq!(GRINDR_TABLES.len(), 11);
        assert_eq!(SKOUT_TABLES.len(), 2);
        assert_eq!(TINDER_TABLES.len(), 9);
        let total: usize = SCHEMAS.iter().map(|s| s.tables.len()).sum();
        assert_eq!(total, 22);
    }

    #[test]
    fn column_names_unique_within_each_table() {
        for schema in SCHEMAS {
            let names: BTreeSet<_> = schema.tables.iter().map(|t| t.name).collect();
            assert_eq!(names.len(), schema.tables.len());
            for t in schema.tables {
                let cols: BTreeSet<_> = t.columns.iter().map(|c| c.name.to_ascii_lowercase()).collect();
                assert_eq!(cols.len(), t.columns.len(), "{}", t.name);
            }
        }
    }

    #[test]
    fn overlap_threshold() {
        let chat = table_spec(AppId::Grindr, "chat").unwrap();
        let all: Vec<String> = chat.columns.iter().map(|c| c.name.to_string()).collect();
        assert_eq!(column_overlap(chat, &all), 1.0);
        let m = match_table(AppId::Grindr, "chat", &all[..5]);
        assert_eq!(m.column_overlap, 5.0 / 8.0);
        assert!(m.matched_spec.is_some());
        let m = match_table(AppId::Grindr, "chat", &all[..4]);
        assert!(m.matched_spec.is_none());
        let lower: Vec<String> = all.iter().map(|c| c.to_lowercase()).collect();
        assert_eq!(column_overlap(chat, &lower), 1.0);
        assert!(match_table(AppId::Grindr, "Chat", &all).matched_spec.is_none());
        assert!(match_table(AppId::Tinder, "Match_requests", &["Id".into()]).matched_spec.is_some());
    }
}
