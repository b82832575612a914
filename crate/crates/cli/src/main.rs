use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::DateTime;
use clap::{Parser, Subcommand};
use gsn_forensics::correlate::{contact_evidence, Identity, IdentityMap};
use gsn_forensics::epoch::normalize_epoch;
use gsn_forensics::forge::{forge_corpus, ForgeSpec};
use gsn_forensics::model::{AuthProvider, Instant};
use gsn_forensics::pipeline::{build_bundle, PipelineOptions};
use gsn_forensics::registry::AppRegistry;
use gsn_forensics::report::{analyze, emit_report, ReportFormat};
use gsn_forensics::scan::scan_root;
use gsn_forensics::token::{
    apply_verification, classify_tokens, verify_token, OnlineCheckFailed, RefusingTransport,
    Transport,
};
use gsn_forensics::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gsnf", version, about = "Dating-app artifact extraction for Android acquisitions")]
struct Cli {
    /// Package registry (TSV: package<TAB>app). Replaces the bundled extended list.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List recognized installs and classified files.
    Scan { root: PathBuf },
    /// Run every on-device stage and write a report.
    Extract {
        root: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        /// Transaction log (NDJSON) to analyze alongside the device data.
        #[arg(long)]
        http_log: Option<PathBuf>,
        /// Timestamp recorded in the report (RFC 3339 or epoch). Omitted by default.
        #[arg(long)]
        report_time: Option<String>,
    },
    /// Leak findings and the exposure matrix for a transaction log.
    Netscan {
        root: PathBuf,
        #[arg(long)]
        http_log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evidence that two identities were in contact.
    Correlate {
        root: PathBuf,
        /// Two identities as app:profile_id.
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        contact: Vec<String>,
        /// Only consider activity strictly before this time (RFC 3339 or epoch).
        #[arg(long)]
        before: Option<String>,
        /// Lines of `app:id app:id` naming the same person.
        #[arg(long)]
        identity_map: Option<PathBuf>,
    },
    /// Generate a synthetic corpus from a JSON spec.
    Forge {
        spec: PathBuf,
        outdir: PathBuf,
        /// Where to write the ground-truth manifest (stdout otherwise).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Assess recovered tokens; query the Graph API only when allowed.
    VerifyToken {
        root: PathBuf,
        #[arg(long)]
        allow_online_token_check: bool,
        #[arg(long, default_value_t = 10)]
        timeout_secs: u64,
    },
}

struct UreqTransport {
    agent: ureq::Agent,
}

impl Transport for UreqTransport {
    fn request(&self, url: &str) -> Result<(u16, Vec<u8>), OnlineCheckFailed> {
        let resp = match self.agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(e) => return Err(OnlineCheckFailed(e.to_string())),
        };
        let status = resp.status();
        let mut body = Vec::new();
        resp.into_reader()
            .read_to_end(&mut body)
            .map_err(|e| OnlineCheckFailed(e.to_string()))?;
        Ok((status, body))
    }
}

fn parse_time(text: &str) -> Result<Instant, Error> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.to_utc());
    }
    let raw: i64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("cannot parse time {text:?}")))?;
    Ok(normalize_epoch(raw)?.0)
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => io::stdout().write_all(bytes).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn pretty(value: &serde_json::Value) -> Result<Vec<u8>, Error> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn run(cli: Cli) -> Result<(), Error> {
    let registry = match &cli.registry {
        Some(p) => AppRegistry::from_config(&read(p)?)?,
        None => AppRegistry::default(),
    };
    let opts = PipelineOptions {
        registry,
        ..PipelineOptions::default()
    };
    match cli.command {
        Command::Scan { root } => {
            let catalog = scan_root(&root, &opts.registry)?;
            write_out(None, &pretty(&serde_json::to_value(&catalog)?)?)
        }
        Command::Extract { root, out, format, http_log, report_time } => {
            let format: ReportFormat = format.parse()?;
            let at = report_time.as_deref().map(parse_time).transpose()?;
            let report = analyze(&root, http_log.as_deref(), &opts, at)?;
            write_out(out.as_deref(), &emit_report(&report, format)?)
        }
        Command::Netscan { root, http_log, out } => {
            let report = analyze(&root, Some(&http_log), &opts, None)?;
            let value = json!({
                "http_log": report.meta.http_log,
                "findings": report.findings,
                "matrix": report.matrix,
                "warnings": report.warnings,
            });
            write_out(out.as_deref(), &pretty(&value)?)
        }
        Command::Correlate { root, contact, before, identity_map } => {
            let ids = contact
                .iter()
                .map(|c| Identity::parse(c).map_err(Error::Usage))
                .collect::<Result<Vec<_>, _>>()?;
            let before = before.as_deref().map(parse_time).transpose()?;
            let map = match identity_map {
                Some(p) => IdentityMap::parse(&read(&p)?)?,
                None => IdentityMap::default(),
            };
            let bundle = build_bundle(&root, &opts)?;
            let evidence = contact_evidence(&bundle, &ids[0], &ids[1], before, &map);
            write_out(None, &pretty(&serde_json::to_value(&evidence)?)?)
        }
        Command::Forge { spec, outdir, manifest } => {
            let spec = ForgeSpec::from_json(&read(&spec)?)?;
            let m = forge_corpus(&spec, &outdir)?;
            write_out(manifest.as_deref(), &pretty(&serde_json::to_value(&m)?)?)
        }
        Command::VerifyToken { root, allow_online_token_check, timeout_secs } => {
            let bundle = build_bundle(&root, &opts)?;
            let transport: Box<dyn Transport> = if allow_online_token_check {
                let agent = ureq::AgentBuilder::new()
                    .timeout(Duration::from_secs(timeout_secs))
                    .build();
                Box::new(UreqTransport { agent })
            } else {
                Box::new(RefusingTransport)
            };
            let mut assessments = classify_tokens(&bundle.artifacts.tokens);
            for a in assessments.iter_mut().filter(|a| a.token.provider == AuthProvider::Facebook) {
                let outcome = verify_token(&a.token, transport.as_ref(), allow_online_token_check);
                apply_verification(a, &outcome);
            }
            write_out(None, &pretty(&serde_json::to_value(&assessments)?)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsnf: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
