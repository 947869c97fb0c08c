mod common;

#[test]
fn formula_examples() {
    common::formula_oracles().unwrap();
}

#[test]
fn streaming_statistics_match_two_pass_versions() {
    common::naive_comparisons().unwrap();
}

#[test]
fn williams_and_students_t_match_reference_tables() {
    common::reference_grids().unwrap();
}

#[test]
fn t_cdf_matches_reference_table() {
    common::t_cdf_grid().unwrap();
}
