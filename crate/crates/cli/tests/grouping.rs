use std::path::PathBuf;

use ranksets_cli::{group_small, ingest, GroupSpec};

fn melbourne() -> ranksets::MultinomialSample {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/melbourne.csv");
    ingest(&path, None, false)
        .unwrap()
        .get("Melbourne")
        .unwrap()
        .clone()
}

#[test]
fn three_smallest_merge_into_other() {
    let s = melbourne();
    let g = group_small(&s, &"No answer,One Nation,National Party".parse().unwrap()).unwrap();
    assert_eq!(g.p(), 5);
    assert_eq!(g.n(), s.n());
    assert_eq!(g.counts()[g.index_of("Other").unwrap()], 6 + 2 + 1);
}

#[test]
fn threshold_picks_the_same_three() {
    let s = melbourne();
    let by_name = group_small(&s, &"No answer,One Nation,National Party".parse().unwrap()).unwrap();
    let by_share = group_small(&s, &GroupSpec::Threshold(0.05)).unwrap();
    assert_eq!(by_name, by_share);
}

#[test]
fn empty_list_is_identity() {
    let s = melbourne();
    assert_eq!(group_small(&s, &GroupSpec::Names(vec![])).unwrap(), s);
    assert_eq!(group_small(&s, &"".parse().unwrap()).unwrap(), s);
}

#[test]
fn threshold_outside_unit_interval_errors() {
    let s = melbourne();
    assert!(group_small(&s, &GroupSpec::Threshold(1.0)).is_err());
    assert!(group_small(&s, &GroupSpec::Threshold(0.0)).is_err());
}

#[test]
fn grouping_everything_errors() {
    let s = melbourne();
    let all = GroupSpec::Names(s.labels().to_vec());
    assert!(group_small(&s, &all).is_err());
    // A threshold above every share selects all categories too.
    let tiny = ranksets::MultinomialSample::from_counts(vec![1, 1, 1]).unwrap();
    assert!(group_small(&tiny, &GroupSpec::Threshold(0.5)).is_err());
}
