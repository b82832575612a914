//! Scan, then prefs, databases and caches per install, into one bundle.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::SystemTime;

use chrono::{DateTime, Duration, Utc};

use crate::cache::{self, CarveGrammar};
use crate::db::extract_normalized;
use crate::error::{IoContext, Result};
use crate::model::{
    AppId, Artifacts, EmailRecord, EvidenceBundle, FileKind, Heuristic, ImageCache, Instant,
    LocationFix, LocationOrigin, LocationPrecision, RegistryOrigin, Subject,
};
use crate::patterns;
use crate::prefs::{extract_known_prefs, parse_prefs_xml};
use crate::registry::AppRegistry;
use crate::scan::{scan_root, CatalogEntry, ScanCatalog, CONTENT_LIMIT};

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub registry: AppRegistry,
    pub carve: CarveGrammar,
}

/// Runs every on-device extraction stage over `root`.
pub fn build_bundle(root: &Path, opts: &PipelineOptions) -> Result<EvidenceBundle> {
    let catalog = scan_root(root, &opts.registry)?;
    let mut bundle = EvidenceBundle {
        root: root.to_string_lossy().into_owned(),
        installs: catalog.installs.clone(),
        external_files: catalog.external.iter().map(|e| e.path.clone()).collect(),
        ..EvidenceBundle::default()
    };
    let mut arts = Artifacts {
        warnings: catalog.warnings.clone(),
        ..Artifacts::default()
    };
    if catalog
        .installs
        .iter()
        .any(|i| i.registry_origin == Some(RegistryOrigin::Extended))
    {
        arts.heuristics.insert(Heuristic::RegistryExtended);
    }

    let mut apps: Vec<AppId> = catalog.installs.iter().map(|i| i.app).collect();
    if catalog.entries.iter().any(|e| e.app == AppId::Unknown) {
        apps.push(AppId::Unknown);
    }
    for app in apps {
        let entries: Vec<&CatalogEntry> = catalog.entries_for(app).collect();
        let mut owner = None;
        for e in entries.iter().filter(|e| e.kind == FileKind::PrefsXml) {
            prefs_stage(root, app, e, &mut arts, &mut owner);
        }
        for e in entries.iter().filter(|e| e.kind == FileKind::SqliteDb) {
            if oversized(e, &mut arts) {
                continue;
            }
            match extract_normalized(app, &root.join(&e.path), &e.path, owner.as_deref()) {
                Ok(x) => {
                    if let Some(id) = x.owner_id {
                        owner = Some(id);
                    }
                    arts.absorb(x.artifacts);
                }
                Err(err) => arts.warnings.push(err.to_string()),
            }
        }
        cache_stage(root, app, &entries, &catalog, &opts.carve, &mut arts);
        if let Some(id) = owner {
            if app != AppId::Unknown {
                bundle.owners.insert(app, id);
            }
        }
    }

    check_time_bounds(root, &catalog, &mut arts);
    bundle.artifacts = arts;
    Ok(bundle)
}

fn oversized(e: &CatalogEntry, arts: &mut Artifacts) -> bool {
    if e.size > CONTENT_LIMIT {
        arts.warnings
            .push(format!("{}: {} bytes, content not parsed", e.path, e.size));
        return true;
    }
    false
}

fn read(root: &Path, e: &CatalogEntry, arts: &mut Artifacts) -> Option<Vec<u8>> {
    if oversized(e, arts) {
        return None;
    }
    match fs::read(root.join(&e.path)).at(root.join(&e.path)) {
        Ok(b) => Some(b),
        Err(err) => {
            arts.warnings.push(err.to_string());
            None
        }
    }
}

fn prefs_stage(
    root: &Path,
    app: AppId,
    e: &CatalogEntry,
    arts: &mut Artifacts,
    owner: &mut Option<String>,
) {
    let Some(bytes) = read(root, e, arts) else { return };
    let source = crate::model::ArtifactSource::file(&e.path, FileKind::PrefsXml);
    let doc = match parse_prefs_xml(&bytes, source) {
        Ok(d) => d,
        Err(err) => {
            arts.warnings.push(format!("{}: {err}", e.path));
            return;
        }
    };
    arts.warnings.extend(doc.warnings.iter().cloned());
    let x = extract_known_prefs(&doc, app);
    if owner.is_none() {
        owner.clone_from(&x.owner_id);
    }
    arts.tokens.extend(x.tokens);
    if !x.locations.is_empty() {
        arts.heuristics.insert(Heuristic::LatLonKeyMatch);
    }
    arts.locations.extend(x.locations);
    for address in x.emails {
        arts.emails.push(EmailRecord {
            app,
            address,
            source: doc.source.clone(),
        });
    }
    if let Some(m) = x.last_active {
        arts.note_epoch(m.time_unit);
        arts.markers.push(m);
    }
    arts.heuristics.extend(x.heuristics);
    arts.warnings.extend(x.warnings);
}

fn under_dir(path: &str, dir: &str) -> bool {
    path.split('/').rev().skip(1).any(|c| c == dir)
}

fn cache_stage(
    root: &Path,
    app: AppId,
    entries: &[&CatalogEntry],
    catalog: &ScanCatalog,
    grammar: &CarveGrammar,
    arts: &mut Artifacts,
) {
    let by_path: BTreeMap<&str, &CatalogEntry> =
        catalog.entries.iter().map(|e| (e.path.as_str(), e)).collect();
    for e in entries {
        let file_name = e.path.rsplit('/').next().unwrap_or(&e.path);
        let in_cache_dir = e
            .path
            .split('/')
            .rev()
            .skip(1)
            .any(|c| c.to_ascii_lowercase().contains("cache"));
        match e.kind {
            FileKind::PicassoMeta => {
                let image_path = format!("{}.i", e.path.trim_end_matches(".o"));
                let Some(image) = by_path.get(image_path.as_str()) else {
                    arts.warnings.push(format!("{}: no matching .i file", e.path));
                    continue;
                };
                let (Some(meta), Some(bytes)) = (read(root, e, arts), read(root, image, arts)) else {
                    continue;
                };
                match cache::parse_picasso_pair(app, &e.path, &image.path, &meta, &bytes) {
                    Ok(entry) => arts.images.push(entry.image),
                    Err(err) => arts.warnings.push(format!("{}: {err}", e.path)),
                }
            }
            FileKind::Jpeg | FileKind::Png | FileKind::WebP => {
                if under_dir(&e.path, "Picasso-cache") && e.path.ends_with(".i") {
                    continue;
                }
                let Some(bytes) = read(root, e, arts) else { continue };
                let kind = if under_dir(&e.path, "downloader") {
                    ImageCache::Downloader
                } else {
                    ImageCache::Other
                };
                arts.images.push(cache::plain_image(app, &e.path, &bytes, kind));
            }
            FileKind::Json => volley(root, app, e, arts),
            FileKind::Opaque if under_dir(&e.path, "volley") => volley(root, app, e, arts),
            FileKind::Opaque if in_cache_dir && patterns::guid().is_match(file_name) => {
                let Some(bytes) = read(root, e, arts) else { continue };
                let source = crate::model::ArtifactSource::file(&e.path, FileKind::Opaque);
                let previews = cache::carve_string_records(&bytes, grammar, app, &source);
                if !previews.is_empty() {
                    arts.heuristics.insert(Heuristic::StringCarving);
                }
                for p in previews {
                    arts.locations.push(LocationFix {
                        app,
                        precision: LocationPrecision::Suburb {
                            name: p.location_suburb.clone(),
                        },
                        at: None,
                        subject: Subject::Owner,
                        origin: LocationOrigin::CarvedPreview,
                        source: p.source.clone(),
                    });
                    arts.previews.push(p);
                }
            }
            _ => {}
        }
    }
}

fn volley(root: &Path, app: AppId, e: &CatalogEntry, arts: &mut Artifacts) {
    let Some(bytes) = read(root, e, arts) else { return };
    let source = crate::model::ArtifactSource::file(&e.path, e.kind);
    let (events, warnings) = cache::parse_volley_match_cache(&bytes, app, &source);
    arts.volley_events.extend(events);
    arts.warnings.extend(warnings);
}

/// Latest modification time in the tree, used as the acquisition time.
fn acquisition_time(root: &Path, catalog: &ScanCatalog) -> Option<Instant> {
    catalog
        .entries
        .iter()
        .chain(&catalog.external)
        .filter_map(|e| fs::metadata(root.join(&e.path)).ok()?.modified().ok())
        .max()
        .map(|t: SystemTime| DateTime::<Utc>::from(t))
}

/// Flags messages dated more than a day after acquisition.
fn check_time_bounds(root: &Path, catalog: &ScanCatalog, arts: &mut Artifacts) {
    let Some(acquired) = acquisition_time(root, catalog) else { return };
    let limit = acquired + Duration::days(1);
    let late: Vec<String> = arts
        .messages
        .iter()
        .filter(|m| m.sent_at > limit)
        .map(|m| {
            format!(
                "{}: sent_at {} is after acquisition time + 1 day",
                m.source.record.as_deref().unwrap_or(&m.source.file_path),
                m.sent_at.to_rfc3339()
            )
        })
        .collect();
    arts.warnings.extend(late);
}
