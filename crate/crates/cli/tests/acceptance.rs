//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The lines are written straight to stdout so they appear even when the
//! test harness captures output.

use std::io::Write;

use extremal_sv::verify::{self, CheckResult, VerifyOptions};

fn report(id: u32, result: extremal_sv::Result<CheckResult>) {
    let c = result.unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    assert_eq!(c.id, id);
    let verdict = if c.passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {id:>2} {verdict}: {} ({})", c.name, c.summary).unwrap();
    for r in c.rows.iter().filter(|r| !r.pass).take(10) {
        writeln!(
            out,
            "    miss {}: estimate {:.6}, target {:.6}, band [{:.6}, {:.6}]",
            r.label, r.estimate, r.target, r.lower, r.upper
        )
        .unwrap();
    }
    drop(out);
    assert!(c.passed, "criterion {id} failed: {}", c.summary);
}

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

#[test]
fn criterion_01_two_factor_exactness() {
    report(1, verify::check_two_factor_exactness(opts().seed));
}

#[test]
fn criterion_02_ar1_profile() {
    report(2, verify::check_ar1_profile());
}

#[test]
fn criterion_03_construction_round_trip() {
    report(3, verify::check_construction_round_trip(opts().seed));
}

#[test]
fn criterion_04_lp_oracle_equivalence() {
    report(4, verify::check_lp_oracle(opts().seed));
}

#[test]
fn criterion_05_tau_identity() {
    report(5, verify::check_tau_identity(opts().seed));
}

#[test]
fn criterion_06_truncation_stability() {
    report(6, verify::check_truncation_stability(opts().seed));
}

#[test]
fn criterion_07_hill_eta_consistency() {
    report(7, verify::check_eta_consistency(&opts()));
}

#[test]
fn criterion_08_joint_exceedance_measure() {
    report(8, verify::check_joint_exceedance(&opts()));
}

#[test]
fn criterion_09_extremal_index_and_maxima() {
    report(9, verify::check_extremal_index(&opts()));
}

#[test]
fn criterion_10_marginal_tail_asymptote() {
    report(10, verify::check_marginal_tail(&opts()));
}

#[test]
fn criterion_11_dependence_dichotomy() {
    report(11, verify::check_dependence_dichotomy(&opts()));
}
