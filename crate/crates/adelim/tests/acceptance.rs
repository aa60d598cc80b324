//! Acceptance criteria at their stated tolerances. Each test prints one
//! PASS/FAIL line; run with `--nocapture` to see them.

use adelim::verify;

fn check(id: usize) {
    let o = verify::run(id);
    println!("{o}");
    assert!(o.passed, "{o}");
}

#[test]
fn criterion_01_qutrit_d_sign() {
    check(1);
}

#[test]
fn criterion_02_lambda_properties() {
    check(2);
}

#[test]
fn criterion_03_exact_invariance() {
    check(3);
}

#[test]
fn criterion_04_engine_vs_exact() {
    check(4);
}

#[test]
fn criterion_05_jc_closed_forms() {
    check(5);
}

#[test]
fn criterion_06_dephasing_threshold() {
    check(6);
}

#[test]
fn criterion_07_cp_impossibility() {
    check(7);
}

#[test]
fn criterion_08_lemma_suite() {
    check(8);
}

#[test]
fn criterion_09_second_order_cp_gauge() {
    check(9);
}

#[test]
fn criterion_10_exact_master_equation() {
    check(10);
}

#[test]
fn criterion_11_toy_similarity() {
    check(11);
}

#[test]
fn criterion_12_gauge_umax() {
    check(12);
}
