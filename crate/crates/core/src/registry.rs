//! Package-name registry mapping `data/data/<package>` directories to apps.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{AppId, RegistryOrigin};

/// Private storage packages with documented paths.
pub const DOCUMENTED_PACKAGES: [(&str, AppId); 4] = [
    ("com.badoo.mobile", AppId::Badoo),
    ("com.grindapp.android", AppId::Grindr),
    ("com.skout.android", AppId::Skout),
    ("com.tinder", AppId::Tinder),
];

pub const DEFAULT_EXTENDED_CONFIG: &str = include_str!("../config/registry.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub package: String,
    pub app: AppId,
    pub origin: RegistryOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppRegistry {
    entries: Vec<RegistryEntry>,
}

impl Default for AppRegistry {
    fn default() -> Self {
        AppRegistry::from_config(DEFAULT_EXTENDED_CONFIG)
            .expect("bundled registry config is valid")
    }
}

impl AppRegistry {
    /// Only the documented packages, no extended section.
    pub fn documented() -> Self {
        AppRegistry {
            entries: DOCUMENTED_PACKAGES
                .iter()
                .map(|(package, app)| RegistryEntry {
                    package: package.to_string(),
                    app: *app,
                    origin: RegistryOrigin::Documented,
                })
                .collect(),
        }
    }

    /// Documented packages plus the extended section parsed from `config`.
    ///
    /// Each line is `package_path<TAB>app_name`; blank lines and `#`
    /// comments are skipped. The package path may be a bare package name
    /// or a path ending in one.
    pub fn from_config(config: &str) -> Result<Self> {
        let mut registry = AppRegistry::documented();
        let mut apps: BTreeSet<AppId> = registry.entries.iter().map(|e| e.app).collect();
        for (idx, line) in config.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |reason: &str| Error::Registry {
                line: line_no,
                reason: reason.to_string(),
            };
            let (path, name) = line
                .split_once('\t')
                .ok_or_else(|| err("expected package_path<TAB>app_name"))?;
            let package = path
                .trim()
                .trim_end_matches('/')
                .rsplit('/')
                .next()
                .unwrap_or_default()
                .to_string();
            if package.is_empty() {
                return Err(err("empty package path"));
            }
            let app = AppId::from_name(name.trim())
                .filter(|a| *a != AppId::Unknown)
                .ok_or_else(|| err("unknown app name"))?;
            if registry.entries.iter().any(|e| e.package == package) {
                return Err(err("package already registered"));
            }
            if !apps.insert(app) {
                return Err(err("app already has a package"));
            }
            registry.entries.push(RegistryEntry {
                package,
                app,
                origin: RegistryOrigin::Extended,
            });
        }
        Ok(registry)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    /// Exact, case-sensitive match on the package directory name.
    pub fn lookup_entry(&self, package_dir_name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.package == package_dir_name)
    }

    pub fn lookup(&self, package_dir_name: &str) -> AppId {
        self.lookup_entry(package_dir_name)
            .map(|e| e.app)
            .unwrap_or(AppId::Unknown)
    }

    pub fn package_for(&self, app: AppId) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.app == app)
            .map(|e| e.package.as_str())
    }
}

/// Looks a package directory up in the default registry.
pub fn lookup_app(package_dir_name: &str) -> AppId {
    AppRegistry::default().lookup(package_dir_name)
}
