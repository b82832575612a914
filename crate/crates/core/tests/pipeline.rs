use gsn_forensics::forge::{diff_manifest, forge_corpus, AppCounts, ForgeSpec, Malformed};
use gsn_forensics::model::AppId;
use gsn_forensics::pipeline::{build_bundle, PipelineOptions};
use gsn_forensics::report::{analyze, render_summary_matrix};
use proptest::prelude::*;

fn spec_for(seed: u64, apps: &[(AppId, AppCounts)]) -> ForgeSpec {
    ForgeSpec {
        seed,
        apps: apps.iter().map(|(a, c)| (a.name().to_string(), c.clone())).collect(),
        ..ForgeSpec::default()
    }
}

#[test]
fn grindr_tables_have_requested_rows() {
    let d = tempfile::tempdir().unwrap();
    let counts = AppCounts { profiles: 3, messages: 5, ..AppCounts::default() };
    let m = forge_corpus(&spec_for(42, &[(AppId::Grindr, counts)]), d.path()).unwrap();
    let rows = |t: &str| m.tables.iter().find(|x| x.table == t).map(|x| x.row_count);
    assert_eq!(rows("chat"), Some(5));
    assert_eq!(rows("profile"), Some(4));
    assert_eq!(m.tables.iter().filter(|t| t.app == AppId::Grindr).count(), 11);
}

#[test]
fn no_installs_gives_empty_matrix() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(d.path().join("data/data")).unwrap();
    let bundle = build_bundle(d.path(), &PipelineOptions::default()).unwrap();
    assert!(render_summary_matrix(&bundle, &[]).is_empty());
}

#[test]
fn tinder_only_gives_one_row() {
    let d = tempfile::tempdir().unwrap();
    let counts = AppCounts { messages: 2, matches: 1, tokens: 1, ..AppCounts::default() };
    forge_corpus(&spec_for(9, &[(AppId::Tinder, counts)]), d.path()).unwrap();
    let r = analyze(d.path(), None, &PipelineOptions::default(), None).unwrap();
    assert_eq!(r.matrix.len(), 1);
    assert_eq!(r.matrix[0].app, AppId::Tinder);
    assert!(r.findings.is_empty());
}

#[test]
fn malformed_inputs_warn_without_aborting() {
    let d = tempfile::tempdir().unwrap();
    let mut spec = ForgeSpec::canonical();
    spec.inject_malformed = Malformed { prefs: true, database: true, cache: true, netlog: true };
    let m = forge_corpus(&spec, d.path()).unwrap();
    assert_eq!(m.malformed.len(), 3);
    let log = d.path().join(m.http_log.as_deref().unwrap());
    let r = analyze(d.path(), Some(&log), &PipelineOptions::default(), None).unwrap();
    for broken in &m.malformed {
        let name = broken.rsplit('/').next().unwrap();
        assert!(r.warnings.iter().any(|w| w.contains(name)), "no warning for {broken}: {:?}", r.warnings);
    }
    assert!(r.warnings.iter().any(|w| w.contains("transaction log line")));
    assert!(diff_manifest(&m, &r.bundle).is_empty());
}

fn counts() -> impl Strategy<Value = AppCounts> {
    (0..4usize, 0..6usize, 0..3usize, 0..3usize, 0..3usize, 0..3usize, 0..2usize, 0..2usize).prop_map(
        |(profiles, messages, matches, images, location_fixes, previews, tokens, emails)| AppCounts {
            profiles,
            messages,
            matches,
            images,
            location_fixes,
            previews,
            tokens,
            emails,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_holds_for_random_specs(
        seed in any::<u64>(),
        picks in proptest::collection::vec((0..8usize, counts()), 1..4),
    ) {
        let apps: Vec<(AppId, AppCounts)> = picks.into_iter().map(|(i, c)| (AppId::KNOWN[i], c)).collect();
        let d = tempfile::tempdir().unwrap();
        let m = forge_corpus(&spec_for(seed, &apps), d.path()).unwrap();
        let bundle = build_bundle(d.path(), &PipelineOptions::default()).unwrap();
        prop_assert_eq!(diff_manifest(&m, &bundle), Vec::<String>::new());
    }
}
