mod common;

use common::checks;

#[test]
fn group_prox_matches_a_numerical_minimiser() {
    checks::prox_vs_numerical(1000, 11).unwrap();
}

#[test]
fn simplex_projection_matches_the_kkt_solution() {
    checks::simplex_vs_kkt(1000, 12).unwrap();
}

#[test]
fn psd_projection_matches_brute_force_clipping() {
    checks::psd_vs_brute_force(500, 13).unwrap();
}

#[test]
fn simplex_least_squares_matches_a_grid_search() {
    checks::simplex_ls_vs_grid(12, 14).unwrap();
}
