use pooltest_core::analytic::{expected_total_tests, Form};
use pooltest_core::oracle::{enumerate_expected_tests, DEFAULT_BUDGET};
use pooltest_core::simulate::run_replications;
use pooltest_core::{DesignParams, ProblemInstance};

fn fixed(n: u64, k: u64) -> ProblemInstance {
    ProblemInstance::fixed_k(n, k).unwrap()
}

fn exact_form(inst: &ProblemInstance, params: &DesignParams) -> f64 {
    expected_total_tests(inst, params, Form::Exact)
        .unwrap()
        .expected_total_tests
}

fn enumerated(inst: &ProblemInstance, params: &DesignParams) -> f64 {
    enumerate_expected_tests(inst, params, DEFAULT_BUDGET)
        .unwrap()
        .expected_total
}

#[test]
fn exact_form_matches_enumeration_where_independent() {
    let cases = [
        // FTP and RP pools are independent given the infected set.
        (fixed(5, 2), DesignParams::ftp(2.0, 2.0)),
        (fixed(6, 1), DesignParams::ftp(2.0, 3.0)),
        (fixed(4, 0), DesignParams::ftp(3.0, 2.0)),
        (fixed(3, 1), DesignParams::rp(2.0, 0.3)),
        (fixed(3, 2), DesignParams::rp(3.0, 0.7)),
        (fixed(4, 0), DesignParams::rp(2.0, 0.25)),
        // FTI with one pool per individual, or nobody infected.
        (fixed(5, 2), DesignParams::fti(3.0, 1.0)),
        (fixed(4, 0), DesignParams::fti(3.0, 2.0)),
    ];
    for (inst, params) in cases {
        let exact = enumerated(&inst, &params);
        let analytic = exact_form(&inst, &params);
        assert!(
            (exact - analytic).abs() < 1e-10,
            "{inst:?} {params:?}: {exact} vs {analytic}"
        );
    }
}

#[test]
fn fti_exact_form_is_an_approximation_for_larger_d() {
    let inst = fixed(3, 1);
    let params = DesignParams::fti(4.0, 2.0);
    let gap = (enumerated(&inst, &params) - exact_form(&inst, &params)).abs();
    assert!(gap > 1e-3, "gap {gap}");
}

#[test]
fn ftp_paper_approximation_gap_shrinks_with_scale() {
    // Same b/n = 1/2, k = 1, m = 1 at n = 2 and n = 20.
    let rel_gap = |n: u64| {
        let inst = fixed(n, 1);
        let params = DesignParams::ftp(1.0, (n / 2) as f64);
        let exact = enumerated(&inst, &params);
        let approx = expected_total_tests(&inst, &params, Form::PaperApprox)
            .unwrap()
            .expected_total_tests;
        (approx - exact).abs() / exact
    };
    let small = rel_gap(2);
    let large = rel_gap(20);
    assert!(large < small, "{large} !< {small}");
}

#[test]
fn simulator_matches_enumeration_on_small_instances() {
    let cases = [
        (fixed(5, 2), DesignParams::ftp(2.0, 2.0)),
        (fixed(4, 1), DesignParams::fti(3.0, 2.0)),
        (fixed(3, 1), DesignParams::rp(2.0, 0.4)),
    ];
    for (i, (inst, params)) in cases.iter().enumerate() {
        let exact = enumerated(inst, params);
        let sim = run_replications(inst, params, 100_000, 1000 + i as u64).unwrap();
        assert!(
            (sim.mean_total - exact).abs() <= 3.0 * sim.stderr_total,
            "{params:?}: sim {} ± {} vs {exact}",
            sim.mean_total,
            sim.stderr_total
        );
    }
}

#[test]
fn simulator_tracks_exact_form_where_paper_form_drifts() {
    // FTP at b/n = 0.1, k = 10: e^{-kb/n} overstates the avoidance probability.
    let inst = fixed(1000, 10);
    let params = DesignParams::ftp(96.0, 100.0);
    let exact = exact_form(&inst, &params);
    let paper = expected_total_tests(&inst, &params, Form::PaperApprox)
        .unwrap()
        .expected_total_tests;
    let sim = run_replications(&inst, &params, 20_000, 5).unwrap();
    assert!(
        (sim.mean_total - exact).abs() <= 4.0 * sim.stderr_total,
        "sim {} vs exact {exact}",
        sim.mean_total
    );
    assert!((paper - exact).abs() / exact > 0.03);
}
