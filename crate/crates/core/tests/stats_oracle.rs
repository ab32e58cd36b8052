mod common;

use coalshap::stats::{kruskal_wallis, SampleGroup};
use common::stats_oracle::{check_special, check_tests, load, Checker};

#[test]
fn hypothesis_tests_match_reference_corpus() {
    let corpus = load();
    assert_eq!(corpus.datasets.len(), 25);
    let mut c = Checker::new(1e-8);
    check_tests(&corpus, &mut c);
    assert!(c.checked > 100, "only {} checks ran", c.checked);
    assert!(c.failures.is_empty(), "{} of {} checks failed:\n{}", c.failures.len(), c.checked, c.failures.join("\n"));
}

#[test]
fn special_functions_match_reference_grid() {
    let corpus = load();
    let mut c = Checker::new(1e-10);
    check_special(&corpus, &mut c);
    assert!(c.checked > 100, "only {} checks ran", c.checked);
    assert!(c.failures.is_empty(), "{} of {} checks failed:\n{}", c.failures.len(), c.checked, c.failures.join("\n"));
}

#[test]
fn kruskal_wallis_hand_case_is_exact() {
    let groups: Vec<SampleGroup> = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]
        .iter()
        .enumerate()
        .map(|(i, g)| SampleGroup::new(i.to_string(), g.to_vec()))
        .collect();
    assert_eq!(kruskal_wallis(&groups, 0.01).unwrap().statistic, 7.2);
}
