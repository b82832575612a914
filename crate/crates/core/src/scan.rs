//! Evidence-root walking and file classification.

use std::fs::{self, File};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::model::{AppId, AppInstall, FileKind};
use crate::registry::AppRegistry;

/// Header bytes read for classification.
pub const HEADER_LEN: usize = 16;
/// Larger files are cataloged from their header alone.
pub const CONTENT_LIMIT: u64 = 1 << 30;

const SQLITE_MAGIC: &[u8] = b"SQLite format 3\0";
const JPEG_MAGIC: &[u8] = &[0xFF, 0xD8, 0xFF];
const PNG_MAGIC: &[u8] = &[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
const UTF8_BOM: &[u8] = &[0xEF, 0xBB, 0xBF];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub path: String,
    pub kind: FileKind,
    pub size: u64,
    pub app: AppId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCatalog {
    /// Where package directories live relative to the root: `data/data`,
    /// or empty when the root is itself `data/data`.
    pub package_base: String,
    pub installs: Vec<AppInstall>,
    pub entries: Vec<CatalogEntry>,
    /// Files under an `external/` tree.
    pub external: Vec<CatalogEntry>,
    pub warnings: Vec<String>,
}

impl ScanCatalog {
    pub fn entries_for(&self, app: AppId) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(move |e| e.app == app)
    }

    pub fn entries_under<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CatalogEntry> {
        self.entries
            .iter()
            .filter(move |e| e.path.starts_with(prefix) && e.path[prefix.len()..].starts_with('/'))
    }
}

/// Magic rules first; path rules only when no magic fires.
pub fn classify_file(path: &str, header: &[u8]) -> FileKind {
    if header.starts_with(SQLITE_MAGIC) {
        return FileKind::SqliteDb;
    }
    if header.starts_with(JPEG_MAGIC) {
        return FileKind::Jpeg;
    }
    if header.starts_with(PNG_MAGIC) {
        return FileKind::Png;
    }
    if header.len() >= 12 && &header[..4] == b"RIFF" && &header[8..12] == b"WEBP" {
        return FileKind::WebP;
    }

    let components: Vec<&str> = path.split('/').filter(|c| !c.is_empty()).collect();
    let (file_name, dirs) = match components.split_last() {
        Some((name, dirs)) => (*name, dirs),
        None => return FileKind::Opaque,
    };

    let text = header.strip_prefix(UTF8_BOM).unwrap_or(header);
    if dirs.contains(&"shared_prefs") && text.starts_with(b"<?xml") {
        return FileKind::PrefsXml;
    }
    let in_cache = dirs
        .iter()
        .any(|d| d.to_ascii_lowercase().contains("cache"));
    if in_cache {
        if let Some(first) = text.iter().find(|b| !b.is_ascii_whitespace()) {
            if *first == b'{' || *first == b'[' {
                return FileKind::Json;
            }
        }
    }
    if dirs.contains(&"Picasso-cache") && file_name.ends_with(".o") {
        return FileKind::PicassoMeta;
    }
    FileKind::Opaque
}

fn read_header(path: &Path) -> std::io::Result<Vec<u8>> {
    let mut file = File::open(path)?;
    let mut buf = Vec::with_capacity(HEADER_LEN);
    file.by_ref().take(HEADER_LEN as u64).read_to_end(&mut buf)?;
    Ok(buf)
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Walks `root`, detecting installs and classifying every regular file.
///
/// Accepts either a full tree (with `data/data/<package>`) or a tree rooted
/// at `data/data` itself. Symlinks are never followed.
pub fn scan_root(root: &Path, registry: &AppRegistry) -> Result<ScanCatalog> {
    let top = fs::read_dir(root).map_err(|source| Error::Scan {
        path: root.to_path_buf(),
        source,
    })?;
    drop(top);

    let full_layout = root.join("data").is_dir();
    let package_base = if full_layout { "data/data" } else { "" };
    let packages_dir = if full_layout {
        root.join("data").join("data")
    } else {
        root.to_path_buf()
    };

    let mut warnings = Vec::new();
    let mut installs = Vec::new();
    if packages_dir.is_dir() {
        let mut names: Vec<String> = fs::read_dir(&packages_dir)
            .map_err(|source| Error::Scan {
                path: packages_dir.clone(),
                source,
            })?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| full_layout || name != "external")
            .collect();
        names.sort();
        for package in names {
            let entry = registry.lookup_entry(&package);
            let package_path = if package_base.is_empty() {
                package.clone()
            } else {
                format!("{package_base}/{package}")
            };
            installs.push(AppInstall {
                app: entry.map(|e| e.app).unwrap_or(AppId::Unknown),
                registry_origin: entry.map(|e| e.origin),
                package,
                package_path,
                version_hint: None,
            });
        }
    }

    let mut entries = Vec::new();
    let mut external = Vec::new();
    let walker = WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter();
    for item in walker {
        let item = match item {
            Ok(item) => item,
            Err(e) => {
                warnings.push(format!("unreadable path during scan: {e}"));
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let rel = relative(root, item.path());
        let size = match item.metadata() {
            Ok(m) => m.len(),
            Err(e) => {
                warnings.push(format!("{rel}: cannot stat: {e}"));
                continue;
            }
        };
        let header = match read_header(item.path()) {
            Ok(h) => h,
            Err(e) => {
                warnings.push(format!("{rel}: cannot read: {e}"));
                continue;
            }
        };
        let kind = classify_file(&rel, &header);
        let app = installs
            .iter()
            .find(|i| {
                rel.starts_with(&i.package_path) && rel[i.package_path.len()..].starts_with('/')
            })
            .map(|i| i.app)
            .unwrap_or(AppId::Unknown);
        let entry = CatalogEntry {
            path: rel,
            kind,
            size,
            app,
        };
        if entry.path.starts_with("external/") {
            external.push(entry);
        } else {
            entries.push(entry);
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    external.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(ScanCatalog {
        package_base: package_base.to_string(),
        installs,
        entries,
        external,
        warnings,
    })
}
