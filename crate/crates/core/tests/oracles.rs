mod common;

use common::checks;

#[test]
fn sequence_flags_match_naive_recount() {
    checks::sequence_oracle(1000, 17).unwrap();
}

#[test]
fn anomalous_positions_shrink_with_k() {
    checks::k_monotonicity(200, 5).unwrap();
}

#[test]
fn metrics_match_references() {
    checks::metrics_oracle(100, 23).unwrap();
}

#[test]
fn kmeans_reaches_exhaustive_optimum() {
    checks::kmeans_exhaustive().unwrap();
}

#[test]
fn dbscan_matches_density_reachability() {
    checks::dbscan_oracle(500, 31).unwrap();
}

#[test]
fn clustering_ignores_row_order() {
    checks::shuffle_invariance(50, 8).unwrap();
}

#[test]
fn lof_matches_definition() {
    checks::lof_oracle(200, 41).unwrap();
}

#[test]
fn iforest_isolates_planted_outlier() {
    let wins = checks::iforest_planted(20).unwrap();
    assert!(wins >= 19, "{wins}/20 seeds");
}
