//! Report assembly and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::correlate::{
    build_timeline, link_profile_images, location_history, HistoryEntry, ImageLink, TimelineEvent,
};
use crate::digest::{sha256_file, sha256_hex, DIGEST_ALGORITHM};
use crate::error::{Error, IoContext, Result};
use crate::model::{AppId, EvidenceBundle, Heuristic, Instant};
use crate::netleak::{build_leak_matrix, detect_leaks, ingest_transactions, LeakFinding, MatrixRow};
use crate::pipeline::{build_bundle, PipelineOptions};
use crate::token::{classify_tokens, TokenAssessment};

pub const TOOL_NAME: &str = "gsn-forensics";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disclosure {
    pub heuristic: Heuristic,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub digest_algorithm: String,
    /// Digest over every `path NUL digest LF` line of the evidence tree,
    /// sorted by path.
    pub evidence_root_hash: String,
    pub evidence_file_count: usize,
    pub http_log: Option<InputDigest>,
    /// Only set when the caller supplies it, so repeated runs stay identical.
    pub generated_at: Option<Instant>,
    pub heuristics: Vec<Disclosure>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactCounts {
    pub messages: usize,
    pub profiles: usize,
    pub matches: usize,
    pub locations: usize,
    pub tokens: usize,
    pub images: usize,
    pub media: usize,
    pub media_urls: usize,
    pub emails: usize,
    pub markers: usize,
    pub device_ids: usize,
    pub raw_rows: usize,
    pub volley_events: usize,
    pub previews: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub matrix: Vec<MatrixRow>,
    pub counts: BTreeMap<AppId, ArtifactCounts>,
    pub findings: Vec<LeakFinding>,
    pub timeline: Vec<TimelineEvent>,
    pub image_links: Vec<ImageLink>,
    pub location_history: Vec<HistoryEntry>,
    pub tokens: Vec<TokenAssessment>,
    pub warnings: Vec<String>,
    pub bundle: EvidenceBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(Error::Usage(format!("unknown report format {other:?}, expected json or text"))),
        }
    }
}

/// Hash of the whole evidence tree plus its file count.
pub fn evidence_root_hash(root: &Path) -> Result<(String, usize)> {
    let mut lines = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Scan {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel.to_string_lossy().replace('\\', "/");
        let digest = sha256_file(entry.path()).at(entry.path())?;
        lines.push(format!("{rel}\0{digest}\n"));
    }
    lines.sort();
    Ok((sha256_hex(lines.concat().as_bytes()), lines.len()))
}

/// Matrix rows for apps that were installed or named by a finding.
pub fn render_summary_matrix(bundle: &EvidenceBundle, findings: &[LeakFinding]) -> Vec<MatrixRow> {
    build_leak_matrix(findings, bundle)
        .into_iter()
        .filter(|r| bundle.install(r.app).is_some() || findings.iter().any(|f| f.app == r.app))
        .collect()
}

fn counts(bundle: &EvidenceBundle) -> BTreeMap<AppId, ArtifactCounts> {
    let a = &bundle.artifacts;
    let mut out: BTreeMap<AppId, ArtifactCounts> =
        bundle.installs.iter().map(|i| (i.app, ArtifactCounts::default())).collect();
    macro_rules! tally {
        ($($field:ident),*) => {$(
            for x in &a.$field {
                out.entry(x.app).or_default().$field += 1;
            }
        )*};
    }
    tally!(messages, profiles, matches, locations, tokens, images, media, media_urls, emails, markers, device_ids, raw_rows, volley_events, previews);
    out
}

/// Everything needed to assemble a report besides the bundle itself.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub evidence_root_hash: String,
    pub evidence_file_count: usize,
    pub http_log: Option<InputDigest>,
    pub findings: Vec<LeakFinding>,
    pub network_warnings: Vec<String>,
    pub generated_at: Option<Instant>,
}

pub fn build_report(bundle: EvidenceBundle, inputs: ReportInputs) -> Report {
    let heuristics = bundle
        .artifacts
        .heuristics
        .iter()
        .map(|&h| Disclosure {
            heuristic: h,
            description: h.describe().to_string(),
        })
        .collect();
    let mut warnings = bundle.artifacts.warnings.clone();
    warnings.extend(inputs.network_warnings);
    Report {
        meta: ReportMeta {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            digest_algorithm: DIGEST_ALGORITHM.to_string(),
            evidence_root_hash: inputs.evidence_root_hash,
            evidence_file_count: inputs.evidence_file_count,
            http_log: inputs.http_log,
            generated_at: inputs.generated_at,
            heuristics,
        },
        matrix: render_summary_matrix(&bundle, &inputs.findings),
        counts: counts(&bundle),
        timeline: build_timeline(&bundle),
        image_links: link_profile_images(&bundle),
        location_history: location_history(&bundle),
        tokens: classify_tokens(&bundle.artifacts.tokens),
        findings: inputs.findings,
        warnings,
        bundle,
    }
}

/// Full run: on-device extraction, optional transaction log, report.
pub fn analyze(
    root: &Path,
    http_log: Option<&Path>,
    opts: &PipelineOptions,
    generated_at: Option<Instant>,
) -> Result<Report> {
    let (root_hash, file_count) = evidence_root_hash(root)?;
    let bundle = build_bundle(root, opts)?;
    let mut inputs = ReportInputs {
        evidence_root_hash: root_hash,
        evidence_file_count: file_count,
        generated_at,
        ..ReportInputs::default()
    };
    if let Some(log) = http_log {
        let file = File::open(log).at(log)?;
        let ingested = ingest_transactions(BufReader::new(file))?;
        inputs.findings = detect_leaks(&ingested.transactions, &bundle.artifacts.tokens);
        inputs.network_warnings = ingested.warnings;
        inputs.http_log = Some(InputDigest {
            path: log.to_string_lossy().into_owned(),
            digest: sha256_file(log).at(log)?,
        });
    }
    Ok(build_report(bundle, inputs))
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            // Going through Value sorts every object's keys.
            let value = serde_json::to_value(report)?;
            let mut out = serde_json::to_vec_pretty(&value)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Text => Ok(render_text(report).into_bytes()),
    }
}

/// Parses the format name first so an unknown one is a usage error.
pub fn emit_report_as(report: &Report, format: &str) -> Result<Vec<u8>> {
    emit_report(report, format.parse()?)
}

fn render_text(r: &Report) -> String {
    let mut s = String::new();
    let m = &r.meta;
    let _ = writeln!(s, "{} {}", m.tool, m.version);
    let _ = writeln!(s, "evidence: {} ({} files)", r.bundle.root, m.evidence_file_count);
    let _ = writeln!(s, "evidence {}: {}", m.digest_algorithm, m.evidence_root_hash);
    if let Some(log) = &m.http_log {
        let _ = writeln!(s, "http log {}: {}", log.path, log.digest);
    }
    if let Some(at) = m.generated_at {
        let _ = writeln!(s, "generated: {}", at.to_rfc3339());
    }

    let _ = writeln!(s, "\nSummary matrix");
    if r.matrix.is_empty() {
        let _ = writeln!(s, "  (no apps detected)");
    }
    for row in &r.matrix {
        let _ = writeln!(s, "  {}", row.app);
        let _ = writeln!(s, "    messages: {}", row.messages.label);
        let _ = writeln!(s, "    images:   {}", row.images.label);
        let _ = writeln!(s, "    location: {}", row.location.label);
        let _ = writeln!(s, "    email:    {}", row.email.label);
        let _ = writeln!(s, "    auth:     {}", row.auth.label);
    }

    let _ = writeln!(s, "\nArtifacts");
    for (app, c) in &r.counts {
        let _ = writeln!(
            s,
            "  {app}: {} messages, {} profiles, {} matches, {} locations, {} tokens, {} images, {} previews",
            c.messages, c.profiles, c.matches, c.locations, c.tokens, c.images, c.previews
        );
    }
    for (app, owner) in &r.bundle.owners {
        let _ = writeln!(s, "  {app} owner: {owner}");
    }

    let _ = writeln!(s, "\nNetwork findings: {}", r.findings.len());
    for f in &r.findings {
        let _ = writeln!(
            s,
            "  #{} {} {:?} {:?}: {}",
            f.evidence.transaction, f.app, f.severity, f.category, f.description
        );
    }

    let _ = writeln!(s, "\nTimeline: {} events", r.timeline.len());
    for e in &r.timeline {
        let _ = writeln!(s, "  {} {} {:?} {}", e.at.to_rfc3339(), e.app, e.kind, e.summary);
    }

    if !r.image_links.is_empty() {
        let _ = writeln!(s, "\nProfile image links: {}", r.image_links.len());
        for l in &r.image_links {
            let _ = writeln!(s, "  {} {} -> {}", l.app, l.profile_id, l.image_ref.file_path);
        }
    }

    if !r.tokens.is_empty() {
        let _ = writeln!(s, "\nTokens");
        for t in &r.tokens {
            let _ = writeln!(s, "  {} {} ({})", t.token.app, t.token.provider.label(), t.token.source.file_path);
            for n in &t.risk_notes {
                let _ = writeln!(s, "    - {n}");
            }
        }
    }

    let _ = writeln!(s, "\nHeuristics used");
    if m.heuristics.is_empty() {
        let _ = writeln!(s, "  none");
    }
    for d in &m.heuristics {
        let _ = writeln!(s, "  - {}", d.description);
    }

    let _ = writeln!(s, "\nWarnings: {}", r.warnings.len());
    for w in &r.warnings {
        let _ = writeln!(s, "  - {w}");
    }
    s
}
