//! Synthetic transaction logs with planted leaks and clean decoys.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{AppId, AuthToken};
use crate::netleak::LeakCategory;

use super::apps::{app_tokens, token_record};
use super::words::{Gen, FIRST_NAMES, LAST_NAMES, STATES, SUBURBS};
use super::{ForgeSpec, BASE_EPOCH, NETLOG_STREAM};

const USER_AGENT: &str = "Dalvik/1.6.0 (Linux; U; Android 4.4.2; Nexus 5 Build/KOT49H)";

/// A leak the log is known to contain; `index` counts accepted lines only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedLeak {
    pub index: usize,
    pub app: AppId,
    pub category: LeakCategory,
}

#[derive(Debug, Clone)]
pub struct ForgedLog {
    pub ndjson: Vec<u8>,
    pub planted: Vec<PlantedLeak>,
    /// Credentials the matching corpus would yield, for token matching.
    pub tokens: Vec<AuthToken>,
    /// Valid transactions written.
    pub transactions: usize,
    /// Broken lines written.
    pub malformed_lines: usize,
}

struct Tx {
    method: &'static str,
    url: String,
    tls: bool,
    req_body: Vec<u8>,
    resp_type: &'static str,
    resp_body: Vec<u8>,
}

fn slug(app: AppId) -> String {
    app.name().to_ascii_lowercase().replace(' ', "")
}

fn scheme(tls: bool) -> &'static str {
    if tls {
        "https"
    } else {
        "http"
    }
}

fn leak(g: &mut Gen, seed: u64, app: AppId, category: LeakCategory) -> Tx {
    let host = format!("api.{}.example", slug(app));
    let json = "application/json";
    match category {
        LeakCategory::PlaintextMessage => Tx {
            method: "POST",
            url: format!("http://{host}/v2/chat/{}/send", g.hex(8)),
            tls: false,
            req_body: format!(r#"{{"msg":"{}"}}"#, g.sentence()).into_bytes(),
            resp_type: json,
            resp_body: br#"{"status":"sent"}"#.to_vec(),
        },
        LeakCategory::PlaintextImage => {
            let mut body = vec![0xFF, 0xD8, 0xFF, 0xE0];
            body.extend(g.high_bytes(64));
            body.extend([0xFF, 0xD9]);
            Tx {
                method: "GET",
                url: format!("http://img.{}.example/p/{}", slug(app), g.hex(16)),
                tls: false,
                req_body: Vec::new(),
                resp_type: "image/jpeg",
                resp_body: body,
            }
        }
        LeakCategory::PlaintextImageLink => Tx {
            method: "GET",
            url: format!("http://{host}/v1/users/{}/profile", g.digits(8)),
            tls: false,
            req_body: Vec::new(),
            resp_type: json,
            resp_body: format!(
                r#"{{"photo":"http://img.{}.example/u/{}.jpg","name":"{}"}}"#,
                slug(app),
                g.hex(12),
                g.first_name()
            )
            .into_bytes(),
        },
        LeakCategory::ExactLocation => {
            let (lat, lon) = g.coords();
            Tx {
                method: "POST",
                url: format!("https://{host}/v1/location/update"),
                tls: true,
                req_body: format!("lat={lat}&lon={lon}&acc=12").into_bytes(),
                resp_type: json,
                resp_body: br#"{"status":"ok"}"#.to_vec(),
            }
        }
        LeakCategory::CoarseLocation => {
            let facets = match app {
                AppId::Skout => 0,
                AppId::FullCircle => 1,
                AppId::MiuMeet => 2,
                _ => g.below(3),
            };
            let id = g.digits(8);
            let body = match facets {
                0 => format!(
                    r#"{{"users":[{{"id":"{id}","country":"Australia","state":"{}","distance":"{} km"}}]}}"#,
                    g.pick(STATES),
                    1 + g.below(40)
                ),
                1 => format!(r#"{{"users":[{{"id":"{id}","distance":"{} km"}}]}}"#, 1 + g.below(40)),
                _ => format!(r#"{{"users":[{{"id":"{id}","suburb":"{}"}}]}}"#, g.pick(SUBURBS)),
            };
            Tx {
                method: "GET",
                url: format!("https://{host}/v1/nearby"),
                tls: true,
                req_body: Vec::new(),
                resp_type: json,
                resp_body: body.into_bytes(),
            }
        }
        LeakCategory::EmailAddress => Tx {
            method: "POST",
            url: format!("http://{host}/v1/account/update"),
            tls: false,
            req_body: format!(r#"{{"contact":"{}.{}@example.org"}}"#, g.pick(FIRST_NAMES), g.pick(LAST_NAMES))
                .into_bytes(),
            resp_type: json,
            resp_body: br#"{"status":"ok"}"#.to_vec(),
        },
        LeakCategory::TokenInTransit => {
            let token = &app_tokens(seed, app)[0].value;
            Tx {
                method: "GET",
                url: format!("https://{host}/v1/session?access_token={token}"),
                tls: true,
                req_body: Vec::new(),
                resp_type: json,
                resp_body: br#"{"status":"ok"}"#.to_vec(),
            }
        }
        LeakCategory::LocationInFilename => {
            let (lat, lon) = g.coords();
            Tx {
                method: "GET",
                url: format!("https://img.{}.example/maps/{lat}_{lon}.png", slug(app)),
                tls: true,
                req_body: Vec::new(),
                resp_type: "image/png",
                resp_body: Vec::new(),
            }
        }
    }
}

fn decoy(g: &mut Gen, app: AppId) -> Tx {
    let tls = g.chance(0.5);
    let base = format!("{}://api.{}.example", scheme(tls), slug(app));
    let n = g.below(1000);
    let (method, url, req_body, resp_type, resp_body) = match g.below(6) {
        0 => ("GET", format!("{base}/v1/profile/{}", g.digits(8)), String::new(), "application/json",
            format!(r#"{{"status":"ok","count":{n}}}"#)),
        1 => ("POST", format!("{base}/v1/events"), format!("event=open&seq={n}"), "application/json",
            r#"{"status":"ok"}"#.to_string()),
        2 => ("GET", format!("{base}/v1/config"), String::new(), "application/json",
            r#"{"version":"4","features":["a","b"]}"#.to_string()),
        3 => ("GET", format!("{base}/healthz"), String::new(), "text/plain", "ok".to_string()),
        4 => ("GET", format!("{}://static.{}.example/app.css", scheme(tls), slug(app)), String::new(), "text/css",
            "html{margin:0}".to_string()),
        _ => ("POST", format!("{base}/v1/ping"), format!(r#"{{"seq":{n},"ok":true}}"#), "application/json",
            r#"{"pong":true}"#.to_string()),
    };
    Tx {
        method,
        url,
        tls,
        req_body: req_body.into_bytes(),
        resp_type,
        resp_body: resp_body.into_bytes(),
    }
}

fn line(tx: &Tx, app: AppId, index: usize) -> String {
    let host = tx.url.split('/').nth(2).unwrap_or_default();
    let ts = (BASE_EPOCH + 2 * 86_400 + index as i64 * 7) as f64 + 0.25;
    json!({
        "ts": ts,
        "method": tx.method,
        "url": tx.url,
        "tls": tx.tls,
        "req_headers": {"Host": host, "User-Agent": USER_AGENT},
        "req_body_b64": STANDARD.encode(&tx.req_body),
        "status": 200,
        "resp_headers": {"Content-Type": tx.resp_type},
        "resp_body_b64": STANDARD.encode(&tx.resp_body),
        "app": app.name(),
    })
    .to_string()
}

/// Builds the transaction log for `spec.leaks` and `spec.decoys`.
pub fn forge_transaction_log(spec: &ForgeSpec) -> Result<ForgedLog> {
    let mut items: Vec<(AppId, Option<LeakCategory>)> = Vec::new();
    for plan in &spec.leaks {
        let app = AppId::from_name(&plan.app)
            .filter(|a| *a != AppId::Unknown)
            .ok_or_else(|| Error::Forge(format!("unknown app {:?} in leak plan", plan.app)))?;
        items.extend(std::iter::repeat_n((app, Some(plan.category)), plan.count));
    }
    let mut g = Gen::new(spec.seed, NETLOG_STREAM);
    for _ in 0..spec.decoys {
        let app = AppId::KNOWN[g.below(AppId::KNOWN.len() as u64) as usize];
        items.push((app, None));
    }
    for i in (1..items.len()).rev() {
        let j = g.below(i as u64 + 1) as usize;
        items.swap(i, j);
    }

    let broken_at = spec.inject_malformed.netlog.then_some(items.len() / 2);
    let mut out = ForgedLog {
        ndjson: Vec::new(),
        planted: Vec::new(),
        tokens: AppId::KNOWN
            .iter()
            .flat_map(|&a| app_tokens(spec.seed, a).into_iter().map(move |t| token_record(a, &t)))
            .collect(),
        transactions: 0,
        malformed_lines: 0,
    };
    for (index, (app, category)) in items.into_iter().enumerate() {
        if broken_at == Some(index) {
            out.ndjson.extend_from_slice(b"{\"ts\": \"not a time\", \"method\": \n");
            out.malformed_lines += 1;
        }
        let tx = match category {
            Some(c) => {
                out.planted.push(PlantedLeak { index, app, category: c });
                leak(&mut g, spec.seed, app, c)
            }
            None => decoy(&mut g, app),
        };
        out.ndjson.extend_from_slice(line(&tx, app, index).as_bytes());
        out.ndjson.push(b'\n');
        out.transactions += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::LeakPlan;
    use crate::netleak::{detect_leaks, ingest_transactions};
    use std::collections::BTreeSet;

    fn spec(decoys: usize) -> ForgeSpec {
        let mut s = ForgeSpec::canonical();
        s.decoys = decoys;
        s.leaks = LeakCategory::ALL
            .iter()
            .flat_map(|&c| {
                AppId::KNOWN.iter().map(move |a| LeakPlan { app: a.name().to_string(), category: c, count: 1 })
            })
            .collect();
        s
    }

    #[test]
    fn every_template_yields_exactly_its_category() {
        let s = spec(40);
        let log = forge_transaction_log(&s).unwrap();
        let ing = ingest_transactions(&log.ndjson[..]).unwrap();
        assert!(ing.warnings.is_empty());
        let found: BTreeSet<(usize, LeakCategory)> = detect_leaks(&ing.transactions, &log.tokens)
            .iter()
            .map(|f| (f.evidence.transaction, f.category))
            .collect();
        let planted: BTreeSet<(usize, LeakCategory)> =
            log.planted.iter().map(|p| (p.index, p.category)).collect();
        assert_eq!(found, planted);
    }

    #[test]
    fn malformed_line_does_not_shift_indices() {
        let mut s = spec(10);
        s.inject_malformed.netlog = true;
        let log = forge_transaction_log(&s).unwrap();
        let ing = ingest_transactions(&log.ndjson[..]).unwrap();
        assert_eq!(ing.warnings.len(), 1);
        assert_eq!(ing.transactions.len(), log.transactions);
        let found: BTreeSet<(usize, LeakCategory)> = detect_leaks(&ing.transactions, &log.tokens)
            .iter()
            .map(|f| (f.evidence.transaction, f.category))
            .collect();
        assert_eq!(found.len(), log.planted.len());
    }

    #[test]
    fn unknown_leak_app_rejected() {
        let mut s = spec(0);
        s.leaks.push(LeakPlan { app: "Nope".into(), category: LeakCategory::EmailAddress, count: 1 });
        assert!(forge_transaction_log(&s).is_err());
    }
}
