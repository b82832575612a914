//! Per-app exposure matrix merging on-device artifacts with network
//! findings. Each cell carries the strongest class observed plus every
//! piece of evidence that supports any class.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{
    AppId, AuthProvider, EvidenceBundle, LocationPrecision, MessageBody,
};
use crate::patterns;

use super::detect::{LeakCategory, LeakFinding};

pub const NONE_OBSERVED: &str = "none observed";

/// Strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageClass {
    StoredInDatabase,
    PlaintextOverNetwork,
    LastReceivedPreview,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageClass {
    ProfileAndMessageImages,
    CachedProfileImages,
    ImagesOverNetwork,
    UrlsOverNetwork,
    UrlsInDatabase,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationClass {
    ExactInFilename,
    ExactAndNearbySuburb,
    ExactOverNetwork,
    ExactOnDevice,
    CountryStateDistance,
    DistanceOverNetwork,
    SuburbLevel,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmailClass {
    OverNetwork,
    OnDevice,
    None,
}

impl MessageClass {
    pub fn label(self) -> &'static str {
        match self {
            MessageClass::StoredInDatabase => "stored unencrypted in database",
            MessageClass::PlaintextOverNetwork => "plaintext over network",
            MessageClass::LastReceivedPreview => "last received preview only",
            MessageClass::None => NONE_OBSERVED,
        }
    }
}

impl ImageClass {
    pub fn label(self) -> &'static str {
        match self {
            ImageClass::ProfileAndMessageImages => "profile and message images",
            ImageClass::CachedProfileImages => "cached profile images",
            ImageClass::ImagesOverNetwork => "image bytes over network",
            ImageClass::UrlsOverNetwork => "image URLs over network",
            ImageClass::UrlsInDatabase => "image URLs in database",
            ImageClass::None => NONE_OBSERVED,
        }
    }
}

impl LocationClass {
    pub fn label(self) -> &'static str {
        match self {
            LocationClass::ExactInFilename => "exact, in requested file name",
            LocationClass::ExactAndNearbySuburb => "exact, plus suburb of nearby users",
            LocationClass::ExactOverNetwork => "exact over network",
            LocationClass::ExactOnDevice => "exact on device",
            LocationClass::CountryStateDistance => "country/state/distance over network",
            LocationClass::DistanceOverNetwork => "distance over network",
            LocationClass::SuburbLevel => "suburb level",
            LocationClass::None => NONE_OBSERVED,
        }
    }
}

impl EmailClass {
    pub fn label(self) -> &'static str {
        match self {
            EmailClass::OverNetwork => "over network",
            EmailClass::OnDevice => "on device",
            EmailClass::None => NONE_OBSERVED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell<C> {
    pub class: C,
    pub label: String,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthCell {
    pub providers: BTreeSet<AuthProvider>,
    pub label: String,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub app: AppId,
    pub messages: Cell<MessageClass>,
    pub images: Cell<ImageClass>,
    pub location: Cell<LocationClass>,
    pub email: Cell<EmailClass>,
    pub auth: AuthCell,
}

/// Collects candidate classes with their evidence and keeps the strongest.
struct Acc<C> {
    hits: Vec<(C, String)>,
}

impl<C: Copy + Ord> Acc<C> {
    fn new() -> Self {
        Acc { hits: Vec::new() }
    }

    fn add(&mut self, class: C, evidence: String) {
        self.hits.push((class, evidence));
    }

    fn finish(self, none: C, label: impl Fn(C) -> &'static str) -> Cell<C> {
        let class = self.hits.iter().map(|h| h.0).min().unwrap_or(none);
        Cell {
            class,
            label: label(class).to_string(),
            evidence: self.hits.into_iter().map(|h| h.1).collect(),
        }
    }
}

fn finding_ref(f: &LeakFinding) -> String {
    format!(
        "transaction {} {:?} {:?}",
        f.evidence.transaction, f.category, f.evidence.part
    )
}

fn count_by_file<'a>(paths: impl Iterator<Item = &'a str>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = Vec::new();
    for p in paths {
        match v.iter_mut().find(|(q, _)| q == p) {
            Some((_, n)) => *n += 1,
            None => v.push((p.to_string(), 1)),
        }
    }
    v
}

fn row(app: AppId, bundle: &EvidenceBundle, findings: &[LeakFinding]) -> MatrixRow {
    let a = &bundle.artifacts;
    let fs: Vec<&LeakFinding> = findings.iter().filter(|f| f.app == app).collect();
    let has = |c: LeakCategory| fs.iter().filter(move |f| f.category == c);

    let mut messages = Acc::new();
    for (file, n) in count_by_file(a.messages.iter().filter(|m| m.app == app).map(|m| m.source.file_path.as_str())) {
        messages.add(MessageClass::StoredInDatabase, format!("{n} messages in {file}"));
    }
    for f in has(LeakCategory::PlaintextMessage) {
        messages.add(MessageClass::PlaintextOverNetwork, finding_ref(f));
    }
    for p in a.previews.iter().filter(|p| p.app == app) {
        messages.add(MessageClass::LastReceivedPreview, format!("carved preview in {}", p.source.file_path));
    }

    let mut images = Acc::new();
    let cached: Vec<_> = a.images.iter().filter(|i| i.app == app).collect();
    let message_images = a
        .media_urls
        .iter()
        .filter(|u| u.app == app && u.in_message_table && patterns::image_url().is_match(&u.url))
        .map(|u| format!("image URL in message table {} of {}", u.table, u.source.file_path))
        .chain(
            a.messages
                .iter()
                .filter(|m| m.app == app)
                .filter(|m| matches!(&m.body, MessageBody::Media(v) if patterns::image_url().is_match(v)))
                .map(|m| format!("image message {}", m.source.record.as_deref().unwrap_or(&m.source.file_path))),
        )
        .collect::<Vec<_>>();
    if !cached.is_empty() {
        let ev = format!("{} cached images", cached.len());
        if message_images.is_empty() {
            images.add(ImageClass::CachedProfileImages, ev);
        } else {
            images.add(ImageClass::ProfileAndMessageImages, ev);
            for m in message_images {
                images.add(ImageClass::ProfileAndMessageImages, m);
            }
        }
    }
    for f in has(LeakCategory::PlaintextImage) {
        images.add(ImageClass::ImagesOverNetwork, finding_ref(f));
    }
    for f in has(LeakCategory::PlaintextImageLink) {
        images.add(ImageClass::UrlsOverNetwork, finding_ref(f));
    }
    let db_urls = a.media_urls.iter().filter(|u| u.app == app).count()
        + a.profiles.iter().filter(|p| p.app == app && p.image_url.is_some()).count()
        + a.media.iter().filter(|m| m.app == app && !m.urls.is_empty()).count();
    if db_urls > 0 {
        images.add(ImageClass::UrlsInDatabase, format!("{db_urls} records with image URLs"));
    }

    let mut location = Acc::new();
    for f in has(LeakCategory::LocationInFilename) {
        location.add(LocationClass::ExactInFilename, finding_ref(f));
    }
    let suburb_facet: Vec<_> = has(LeakCategory::CoarseLocation)
        .filter(|f| f.facets.contains("suburb"))
        .collect();
    for f in has(LeakCategory::ExactLocation) {
        if suburb_facet.is_empty() {
            location.add(LocationClass::ExactOverNetwork, finding_ref(f));
        } else {
            location.add(LocationClass::ExactAndNearbySuburb, finding_ref(f));
        }
    }
    if has(LeakCategory::ExactLocation).next().is_some() {
        for f in &suburb_facet {
            location.add(LocationClass::ExactAndNearbySuburb, finding_ref(f));
        }
    }
    for fix in a.locations.iter().filter(|l| l.app == app) {
        match fix.precision {
            LocationPrecision::Exact { .. } => location.add(
                LocationClass::ExactOnDevice,
                format!("exact fix in {}", fix.source.file_path),
            ),
            LocationPrecision::Suburb { .. } => location.add(
                LocationClass::SuburbLevel,
                format!("suburb in {}", fix.source.file_path),
            ),
            LocationPrecision::Region { .. } => location.add(
                LocationClass::CountryStateDistance,
                format!("region in {}", fix.source.file_path),
            ),
        }
    }
    for f in has(LeakCategory::CoarseLocation) {
        let class = if f.facets.contains("country") || f.facets.contains("state") {
            LocationClass::CountryStateDistance
        } else if f.facets.contains("distance") {
            LocationClass::DistanceOverNetwork
        } else {
            LocationClass::SuburbLevel
        };
        location.add(class, finding_ref(f));
    }

    let mut email = Acc::new();
    for f in has(LeakCategory::EmailAddress) {
        email.add(EmailClass::OverNetwork, finding_ref(f));
    }
    for e in a.emails.iter().filter(|e| e.app == app) {
        email.add(EmailClass::OnDevice, format!("address in {}", e.source.file_path));
    }

    let mut providers = BTreeSet::new();
    let mut auth_evidence = Vec::new();
    for t in a.tokens.iter().filter(|t| t.app == app) {
        providers.insert(t.provider);
        auth_evidence.push(format!("{} in {}", t.provider.label(), t.source.file_path));
    }
    for f in has(LeakCategory::TokenInTransit) {
        auth_evidence.push(finding_ref(f));
    }
    let label = if providers.is_empty() {
        NONE_OBSERVED.to_string()
    } else {
        providers.iter().map(|p| p.label()).collect::<Vec<_>>().join(", ")
    };

    MatrixRow {
        app,
        messages: messages.finish(MessageClass::None, MessageClass::label),
        images: images.finish(ImageClass::None, ImageClass::label),
        location: location.finish(LocationClass::None, LocationClass::label),
        email: email.finish(EmailClass::None, EmailClass::label),
        auth: AuthCell {
            providers,
            label,
            evidence: auth_evidence,
        },
    }
}

/// One row for each of the eight known apps, in fixed order.
pub fn build_leak_matrix(findings: &[LeakFinding], bundle: &EvidenceBundle) -> Vec<MatrixRow> {
    AppId::KNOWN.iter().map(|&app| row(app, bundle, findings)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs_read_none_observed() {
        let rows = build_leak_matrix(&[], &EvidenceBundle::default());
        assert_eq!(rows.len(), 8);
        for r in rows {
            assert_eq!(r.messages.label, NONE_OBSERVED);
            assert_eq!(r.images.label, NONE_OBSERVED);
            assert_eq!(r.location.label, NONE_OBSERVED);
            assert_eq!(r.email.label, NONE_OBSERVED);
            assert_eq!(r.auth.label, NONE_OBSERVED);
            assert!(r.auth.providers.is_empty());
        }
    }
}
