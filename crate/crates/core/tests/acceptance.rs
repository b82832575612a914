//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant as Clock};

use chrono::{Datelike, Timelike};
use gsn_forensics::db::generic_sweep;
use gsn_forensics::db::schema::schema_for;
use gsn_forensics::epoch::{normalize_epoch, MILLIS_THRESHOLD};
use gsn_forensics::forge::{
    diff_manifest, forge_corpus, forge_transaction_log, ForgeSpec, LeakPlan, HTTP_LOG_PATH,
};
use gsn_forensics::model::{AppId, AuthProvider, MessageBody, TimeUnit};
use gsn_forensics::netleak::{detect_leaks, ingest_transactions, LeakCategory};
use gsn_forensics::pipeline::{build_bundle, PipelineOptions};
use gsn_forensics::report::{analyze, emit_report, ReportFormat};
use gsn_forensics::token::graph_url;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rusqlite::Connection;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn forge_canonical() -> (tempfile::TempDir, gsn_forensics::forge::ForgeManifest) {
    let d = tempfile::tempdir().expect("tempdir");
    let m = forge_corpus(&ForgeSpec::canonical(), d.path()).expect("forge canonical");
    (d, m)
}

fn count_app<T>(items: &[T], app: AppId, f: impl Fn(&T) -> AppId) -> usize {
    items.iter().filter(|i| f(i) == app).count()
}

fn round_trip() -> Outcome {
    let started = Clock::now();
    let (d, m) = forge_canonical();
    let bundle = build_bundle(d.path(), &PipelineOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    // The canonical shape, stated independently of the forge.
    let msgs = |app| count_app(&m.messages, app, |x| x.app);
    let profiles = |app| count_app(&m.profiles, app, |x| x.app);
    ensure!(profiles(AppId::Grindr) == 4 && msgs(AppId::Grindr) == 5, "Grindr shape wrong");
    ensure!(profiles(AppId::Skout) == 2 && msgs(AppId::Skout) == 4, "Skout shape wrong");
    ensure!(
        profiles(AppId::Tinder) == 2 && msgs(AppId::Tinder) == 6 && m.matches.len() == 2,
        "Tinder shape wrong"
    );
    ensure!(count_app(&m.previews, AppId::Badoo, |x| x.app) == 2, "Badoo previews wrong");
    ensure!(!m.image_links.is_empty() && !m.tokens.is_empty(), "manifest lacks links or tokens");

    let diff = diff_manifest(&m, &bundle);
    ensure!(diff.is_empty(), "mismatches: {}", diff.join("; "));
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{} messages, {} profiles, {} matches, {} tokens, {} image links exact; {:.2}s",
        m.messages.len(),
        m.profiles.len(),
        m.matches.len(),
        m.tokens.len(),
        m.image_links.len(),
        elapsed.as_secs_f64()
    ))
}

fn schema_coverage() -> Outcome {
    let expected: [(AppId, &[&str]); 3] = [
        (
            AppId::Grindr,
            &[
                "blocks", "bodyTypeField", "broadcast", "chat", "ethnicityField", "flagReason",
                "imageGallery", "lookingFor", "lookingForField", "moderation", "profile",
            ],
        ),
        (AppId::Skout, &["skoutMessages", "skoutUsersTable"]),
        (
            AppId::Tinder,
            &[
                "Analytic_Events", "Match_requests", "Moment_likes", "facebook_friends", "matches",
                "messages", "moments", "photo_moments", "photos",
            ],
        ),
    ];
    let (d, _) = forge_canonical();
    let mut checked = 0;
    for (app, names) in expected {
        let schema = schema_for(app).ok_or(format!("{app:?} has no schema"))?;
        let got: BTreeSet<&str> = schema.tables.iter().map(|t| t.name).collect();
        let want: BTreeSet<&str> = names.iter().copied().collect();
        ensure!(got == want, "{app:?} registry tables {got:?}");

        let pkg = match app {
            AppId::Grindr => "com.grindapp.android",
            AppId::Skout => "com.skout.android",
            _ => "com.tinder",
        };
        let db = d.path().join("data/data").join(pkg).join("databases").join(schema.db_file);
        let conn = Connection::open(&db).map_err(|e| format!("{}: {e}", db.display()))?;
        for t in schema.tables {
            let mut stmt = conn
                .prepare(&format!("PRAGMA table_info(\"{}\")", t.name))
                .map_err(|e| e.to_string())?;
            let cols: BTreeSet<String> = stmt
                .query_map([], |r| r.get::<_, String>(1))
                .map_err(|e| e.to_string())?
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            ensure!(!cols.is_empty(), "{app:?}.{} missing from forged db", t.name);
            let spec: BTreeSet<String> = t.columns.iter().map(|c| c.name.to_string()).collect();
            let present = spec.iter().filter(|c| cols.contains(*c)).count();
            ensure!(present == spec.len(), "{app:?}.{} overlap {present}/{}", t.name, spec.len());
            checked += 1;
        }
    }
    Ok(format!("11 + 2 + 9 tables registered; {checked} forged tables at 100% column overlap"))
}

fn matrix() -> Outcome {
    use gsn_forensics::netleak::matrix::{EmailClass as E, ImageClass as I, LocationClass as L, MessageClass as M};
    use AuthProvider as P;
    let expected: Vec<(AppId, M, I, L, E, Vec<P>)> = vec![
        (AppId::Badoo, M::LastReceivedPreview, I::CachedProfileImages, L::SuburbLevel, E::None, vec![P::Facebook]),
        (AppId::Grindr, M::StoredInDatabase, I::CachedProfileImages, L::ExactOverNetwork, E::OnDevice, vec![P::Grindr]),
        (AppId::Skout, M::StoredInDatabase, I::UrlsOverNetwork, L::CountryStateDistance, E::None, vec![P::Facebook]),
        (AppId::Tinder, M::StoredInDatabase, I::CachedProfileImages, L::ExactOverNetwork, E::None, vec![P::Facebook, P::Tinder]),
        (AppId::MeetMe, M::StoredInDatabase, I::ProfileAndMessageImages, L::None, E::None, vec![P::Facebook]),
        (AppId::Jaumo, M::None, I::UrlsInDatabase, L::ExactInFilename, E::None, vec![P::Facebook]),
        (AppId::FullCircle, M::PlaintextOverNetwork, I::ImagesOverNetwork, L::DistanceOverNetwork, E::OverNetwork, vec![P::Facebook]),
        (AppId::MiuMeet, M::PlaintextOverNetwork, I::UrlsOverNetwork, L::ExactAndNearbySuburb, E::OverNetwork, vec![P::MiuMeet]),
    ];
    let (d, _) = forge_canonical();
    let log = d.path().join(HTTP_LOG_PATH);
    let report = analyze(d.path(), Some(&log), &PipelineOptions::default(), None).map_err(|e| e.to_string())?;
    let rows: BTreeMap<AppId, _> = report.matrix.iter().map(|r| (r.app, r)).collect();
    let mut mismatches = Vec::new();
    for (app, m, i, l, e, auth) in &expected {
        let Some(r) = rows.get(app) else {
            mismatches.push(format!("{app:?}: no row"));
            continue;
        };
        let auth: BTreeSet<P> = auth.iter().copied().collect();
        let cells = [
            ("messages", r.messages.class == *m, format!("{:?}", r.messages.class)),
            ("images", r.images.class == *i, format!("{:?}", r.images.class)),
            ("location", r.location.class == *l, format!("{:?}", r.location.class)),
            ("email", r.email.class == *e, format!("{:?}", r.email.class)),
            ("auth", r.auth.providers == auth, format!("{:?}", r.auth.providers)),
        ];
        for (name, ok, got) in cells {
            if !ok {
                mismatches.push(format!("{app:?}.{name}={got}"));
            }
        }
    }
    ensure!(rows.len() == expected.len(), "{} rows, expected {}", rows.len(), expected.len());
    ensure!(mismatches.is_empty(), "{} mismatches: {}", mismatches.len(), mismatches.join(", "));
    Ok("8 apps x 5 cells, 0 mismatches".into())
}

/// Percent-encoder written from the unreserved set alone.
fn oracle_encode(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        let unreserved = b.is_ascii_alphanumeric() || b"-._~".contains(&b);
        if unreserved {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn token_url() -> Outcome {
    const PREFIX: &str = "https://graph.facebook.com/me?access_token=";
    let t = graph_url("T").map_err(|e| e.to_string())?;
    ensure!(t == format!("{PREFIX}T"), "graph_url(\"T\") = {t}");
    let mut rng = ChaCha20Rng::seed_from_u64(0x70c3);
    let pool: Vec<char> = "AZaz09-._~ +/=&?%#é中\u{1F600}\"'".chars().collect();
    for n in 0..1000 {
        let len = rng.gen_range(1..200);
        let token: String = (0..len)
            .map(|_| {
                if rng.gen_bool(0.7) {
                    pool[rng.gen_range(0..pool.len())]
                } else {
                    char::from_u32(rng.gen_range(0x20..0x2FFF)).unwrap_or('x')
                }
            })
            .collect();
        let url = graph_url(&token).map_err(|e| e.to_string())?;
        ensure!(url.starts_with(PREFIX), "token #{n}: prefix lost");
        ensure!(url[PREFIX.len()..] == oracle_encode(&token), "token #{n}: encoding differs for {token:?}");
    }
    Ok("prefix exact; 1000 random tokens match the reference encoder".into())
}

fn leak_detector() -> Outcome {
    let mut spec = ForgeSpec::canonical();
    spec.decoys = 200;
    spec.leaks = (0..50)
        .map(|i| LeakPlan {
            app: AppId::KNOWN[i % 8].name().to_string(),
            category: LeakCategory::ALL[(i / 8 + i) % LeakCategory::ALL.len()],
            count: 1,
        })
        .collect();
    let log = forge_transaction_log(&spec).map_err(|e| e.to_string())?;
    let ing = ingest_transactions(&log.ndjson[..]).map_err(|e| e.to_string())?;
    ensure!(ing.transactions.len() == 250, "{} transactions", ing.transactions.len());
    let found: BTreeSet<(usize, LeakCategory)> = detect_leaks(&ing.transactions, &log.tokens)
        .iter()
        .map(|f| (f.evidence.transaction, f.category))
        .collect();
    let planted: BTreeSet<(usize, LeakCategory)> = log.planted.iter().map(|p| (p.index, p.category)).collect();
    ensure!(planted.len() == 50, "{} planted", planted.len());
    let hits = planted.intersection(&found).count();
    let false_pos = found.difference(&planted).count();
    ensure!(hits == 50 && false_pos == 0, "recall {hits}/50, {false_pos} false positives");
    Ok("recall 50/50, 0 false positives over 200 decoys".into())
}

fn full_run_json(root: &Path) -> Result<Vec<u8>, String> {
    let log = root.join(HTTP_LOG_PATH);
    let report = analyze(root, Some(&log), &PipelineOptions::default(), None).map_err(|e| e.to_string())?;
    emit_report(&report, ReportFormat::Json).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let (d, _) = forge_canonical();
    let a = full_run_json(d.path())?;
    let b = full_run_json(d.path())?;
    ensure!(a == b, "reports differ");
    let (e, _) = forge_canonical();
    let digests = |p: &Path| file_digests(p);
    ensure!(digests(d.path()) == digests(e.path()), "two forges of one spec differ");
    Ok(format!("two reports byte-identical ({} bytes); forge byte-identical", a.len()))
}

fn file_digests(root: &Path) -> BTreeMap<String, String> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(e.path()).unwrap();
            (rel, hex::encode(Sha256::digest(&bytes)))
        })
        .collect()
}

fn immutability() -> Outcome {
    let (d, _) = forge_canonical();
    let before = file_digests(d.path());
    full_run_json(d.path())?;
    let after = file_digests(d.path());
    ensure!(before == after, "input digests changed");
    Ok(format!("{} input files unchanged", before.len()))
}

/// Civil time by walking whole years and months from 1970.
fn brute_civil(secs: i64) -> (i64, u32, u32, u32, u32, u32) {
    let mut days = secs / 86_400;
    let rem = secs % 86_400;
    let leap = |y: i64| (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let mut year = 1970;
    loop {
        let len = if leap(year) { 366 } else { 365 };
        if days < len {
            break;
        }
        days -= len;
        year += 1;
    }
    let months = [31, if leap(year) { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let mut month = 0;
    while days >= months[month] {
        days -= months[month];
        month += 1;
    }
    (year, month as u32 + 1, days as u32 + 1, (rem / 3600) as u32, (rem % 3600 / 60) as u32, (rem % 60) as u32)
}

fn epochs() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1970);
    let mut branches = [0usize; 2];
    for n in 0..10_000 {
        let millis_branch = n % 2 == 1;
        let raw: i64 = if millis_branch {
            rng.gen_range(MILLIS_THRESHOLD + 1..4_102_444_800_000)
        } else {
            rng.gen_range(0..=MILLIS_THRESHOLD)
        };
        let (at, unit) = normalize_epoch(raw).map_err(|e| e.to_string())?;
        let (secs, ms) = if raw > 100_000_000_000 { (raw / 1000, raw % 1000) } else { (raw, 0) };
        let want_unit = if raw > 100_000_000_000 { TimeUnit::Milliseconds } else { TimeUnit::Seconds };
        ensure!(unit == want_unit, "{raw}: unit {unit:?}");
        let got = (at.year() as i64, at.month(), at.day(), at.hour(), at.minute(), at.second());
        ensure!(got == brute_civil(secs), "{raw}: {got:?} vs {:?}", brute_civil(secs));
        ensure!(at.timestamp_subsec_millis() as i64 == ms, "{raw}: sub-second part");
        branches[millis_branch as usize] += 1;
    }
    let (_, at_edge) = normalize_epoch(100_000_000_000).map_err(|e| e.to_string())?;
    let (_, above) = normalize_epoch(100_000_000_001).map_err(|e| e.to_string())?;
    ensure!(at_edge == TimeUnit::Seconds, "10^11 read as {at_edge:?}");
    ensure!(above == TimeUnit::Milliseconds, "10^11+1 read as {above:?}");
    ensure!(normalize_epoch(-1).is_err(), "negative accepted");
    Ok(format!(
        "{} seconds + {} millisecond values agree; 10^11 is seconds, 10^11+1 milliseconds",
        branches[0], branches[1]
    ))
}

fn generic_sweep_criterion() -> Outcome {
    let d = tempfile::tempdir().map_err(|e| e.to_string())?;
    let db_dir = d.path().join("data/data/org.example.chatter/databases");
    std::fs::create_dir_all(&db_dir).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let words = ["hello", "there", "see", "you", "soon", "ok", "great", "lunch"];
    let mut planted = BTreeSet::new();
    let conn = Connection::open(db_dir.join("chat.db")).map_err(|e| e.to_string())?;
    conn.execute_batch(
        "CREATE TABLE conversation_log (msg_text TEXT, sent_time INTEGER, from_user TEXT, chat_id TEXT);
         CREATE TABLE notes (body TEXT, created INTEGER);
         CREATE TABLE settings (k TEXT, v TEXT);",
    )
    .map_err(|e| e.to_string())?;
    for (table, n) in [("conversation_log", 40), ("notes", 15)] {
        for i in 0..n {
            let text: Vec<&str> = (0..rng.gen_range(1..6)).map(|_| words[rng.gen_range(0..words.len())]).collect();
            let text = format!("{} {table} {i}", text.join(" "));
            let ts: i64 = if rng.gen_bool(0.5) {
                rng.gen_range(1_300_000_000..1_500_000_000)
            } else {
                rng.gen_range(1_300_000_000_000..1_500_000_000_000)
            };
            if table == "notes" {
                conn.execute("INSERT INTO notes VALUES (?1, ?2)", rusqlite::params![text, ts])
            } else {
                conn.execute(
                    "INSERT INTO conversation_log VALUES (?1, ?2, ?3, ?4)",
                    rusqlite::params![text, ts, format!("u{}", i % 3), "c1"],
                )
            }
            .map_err(|e| e.to_string())?;
            planted.insert(text);
        }
    }
    conn.execute("INSERT INTO settings VALUES ('theme', 'dark')", []).map_err(|e| e.to_string())?;
    drop(conn);

    let bundle = build_bundle(d.path(), &PipelineOptions::default()).map_err(|e| e.to_string())?;
    let recovered: BTreeSet<String> = bundle
        .artifacts
        .messages
        .iter()
        .filter(|m| m.app == AppId::Unknown)
        .filter_map(|m| match &m.body {
            MessageBody::Text(t) => Some(t.clone()),
            _ => None,
        })
        .collect();
    let hits = planted.intersection(&recovered).count();
    ensure!(hits == planted.len(), "recall {hits}/{}", planted.len());
    ensure!(recovered.len() == planted.len(), "{} extra candidates", recovered.len() - hits);

    let numbers = d.path().join("numbers.db");
    let conn = Connection::open(&numbers).map_err(|e| e.to_string())?;
    conn.execute_batch(
        "CREATE TABLE readings (id INTEGER, message_count INTEGER, created INTEGER, ratio REAL);
         CREATE TABLE totals (n INTEGER, stamp INTEGER);",
    )
    .map_err(|e| e.to_string())?;
    for i in 0..30i64 {
        conn.execute(
            "INSERT INTO readings VALUES (?1, ?2, ?3, ?4)",
            rusqlite::params![i, i * 3, 1_400_000_000 + i, i as f64 / 7.0],
        )
        .map_err(|e| e.to_string())?;
        conn.execute("INSERT INTO totals VALUES (?1, ?2)", rusqlite::params![i, 1_400_000_000 + i])
            .map_err(|e| e.to_string())?;
    }
    drop(conn);
    let swept = generic_sweep(AppId::Unknown, &numbers, "numbers.db").map_err(|e| e.to_string())?;
    ensure!(swept.messages.is_empty(), "{} candidates from numbers-only db", swept.messages.len());
    Ok(format!("recall {hits}/{} on message-like tables; 0 candidates on numbers-only db", planted.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("round-trip fidelity", round_trip),
        ("schema coverage", schema_coverage),
        ("summary matrix", matrix),
        ("token URL exactness", token_url),
        ("leak detector precision/recall", leak_detector),
        ("determinism", determinism),
        ("evidence immutability", immutability),
        ("epoch handling", epochs),
        ("generic sweep", generic_sweep_criterion),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
