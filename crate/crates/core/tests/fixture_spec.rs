use gsn_forensics::forge::ForgeSpec;

#[test]
fn shipped_canonical_spec_matches_builtin() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/canonical-spec.json");
    let text = std::fs::read_to_string(path).expect("fixture present");
    assert_eq!(ForgeSpec::from_json(&text).unwrap(), ForgeSpec::canonical());
}

