mod common;

use common::oracles::{self, Check};
use pnsdg::constitutive::ConvectiveVariant;

fn assert_check(c: Check) {
    assert!(c.passed, "{}: {}", c.name, c.detail);
}

#[test]
fn convective_form_ii_is_skew() {
    assert_check(oracles::convective_skew(ConvectiveVariant::II, 1e-12, "form II"));
}

#[test]
fn convective_form_i_is_skew() {
    assert_check(oracles::convective_skew(ConvectiveVariant::I, 1e-10, "form I"));
}

#[test]
fn ldg_stress_is_monotone() {
    assert_check(oracles::ldg_monotone());
}

#[test]
fn lifting_matches_face_pairing() {
    assert_check(oracles::lifting_identity());
}

#[test]
fn dg_gradient_matches_its_face_expansion() {
    assert_check(oracles::dg_gradient_identity());
}

#[test]
fn dg_divergence_against_continuous_tests() {
    assert_check(oracles::divergence_identity());
}

#[test]
fn korn_constant_transfers_to_finer_mesh() {
    assert_check(oracles::korn_fit());
}

#[test]
fn jacobian_matches_finite_differences() {
    assert_check(oracles::jacobian_fd());
}

#[test]
fn manufactured_forcing_matches_closed_forms() {
    assert_check(oracles::forcing_oracle());
}
