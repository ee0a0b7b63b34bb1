use std::fs;
use std::process::{Command, Output};

use pooltest_core::analytic::{expected_total_tests, Form};
use pooltest_core::{DesignParams, ProblemInstance, Scheme};

fn pooltest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pooltest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn design_reports_fti_fixture() {
    let text = stdout(&pooltest(&["design", "--scheme", "fti", "--n", "1000", "--k", "10"]));
    assert!(text.contains("integer     m=81 d=6"), "{text}");
    assert!(text.contains("closed form 111.1981"), "{text}");
}

#[test]
fn design_rp_shares_ftp_pool_count() {
    let text = stdout(&pooltest(&["design", "--n", "1000", "--k", "10"]));
    let integer_lines: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with("integer")).collect();
    assert_eq!(integer_lines.len(), 3);
    assert!(integer_lines[0].contains("m=96 b=100"));
    assert!(integer_lines[2].contains("m=96 a=0.1"));
}

#[test]
fn oracle_fixtures() {
    for (args, expected) in [
        (
            [
                "--scheme",
                "ftp",
                "--n",
                "3",
                "--k",
                "1",
                "--m",
                "1",
                "--secondary",
                "1",
            ],
            "10/3",
        ),
        (
            [
                "--scheme",
                "fti",
                "--n",
                "2",
                "--k",
                "1",
                "--m",
                "2",
                "--secondary",
                "1",
            ],
            "7/2",
        ),
        (
            [
                "--scheme",
                "rp",
                "--n",
                "2",
                "--k",
                "1",
                "--m",
                "1",
                "--secondary",
                "0.5",
            ],
            "11/4",
        ),
    ] {
        let mut full = vec!["oracle"];
        full.extend(args);
        let text = stdout(&pooltest(&full));
        assert!(text.contains(&format!("enumerated  {expected} ")), "{text}");
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| pooltest(args).status.code();
    assert_eq!(code(&["design", "--n", "1", "--k", "0"]), Some(2));
    assert_eq!(code(&["design", "--n", "100", "--k", "1", "--p", "0.1"]), Some(2));
    assert_eq!(code(&["sweep", "--n", "100", "--k-range", "5:1:1"]), Some(2));
    assert_eq!(code(&["design", "--scheme", "ftp", "--n", "3", "--k", "2"]), Some(3));
    assert_eq!(
        code(&[
            "oracle",
            "--scheme",
            "fti",
            "--n",
            "12",
            "--k",
            "3",
            "--m",
            "6",
            "--secondary",
            "2"
        ]),
        Some(4)
    );
}

#[test]
fn sweep_csv_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = pooltest(&[
            "sweep",
            "--n",
            "300",
            "--k-range",
            "3:9:3",
            "--reps",
            "40",
            "--out",
            path.to_str().unwrap(),
        ]);
        stdout(&out);
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.ends_with(b"\n"));

    let printed = stdout(&pooltest(&[
        "sweep",
        "--n",
        "300",
        "--k-range",
        "3:9:3",
        "--reps",
        "40",
    ]));
    assert_eq!(printed.as_bytes(), &bytes[..]);

    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 2, "no temp files left behind");

    let failed = dir.path().join("failed.csv");
    let out = pooltest(&[
        "sweep",
        "--n",
        "300",
        "--k-range",
        "300:300:1",
        "--out",
        failed.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!failed.exists());
}

#[test]
fn sweep_rows_are_self_consistent() {
    let text = stdout(&pooltest(&[
        "sweep",
        "--n",
        "500",
        "--p-range",
        "0.02:0.06:0.02",
        "--reps",
        "20",
        "--seed",
        "7",
    ]));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,n,model,k_or_p,m,secondary,reps,mean_total,stderr_total,theory_total,theory_closed_form,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let scheme: Scheme = row[0].parse().unwrap();
        let n: u64 = row[1].parse().unwrap();
        assert_eq!(row[2], "binomial");
        let p: f64 = row[3].parse().unwrap();
        let params = DesignParams::new(scheme, row[4].parse().unwrap(), row[5].parse().unwrap());
        let inst = ProblemInstance::binomial(n, p).unwrap();
        let theory = expected_total_tests(&inst, &params, Form::PaperApprox)
            .unwrap()
            .expected_total_tests;
        assert_eq!(theory, row[9].parse::<f64>().unwrap(), "{row:?}");
        assert_eq!(row[11], "7");
    }
}

#[test]
fn single_replication_has_zero_stderr() {
    let text = stdout(&pooltest(&[
        "sweep",
        "--scheme",
        "fti",
        "--n",
        "200",
        "--k-range",
        "4",
        "--reps",
        "1",
    ]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(row[8].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn robustness_csv() {
    let text = stdout(&pooltest(&[
        "robustness",
        "--n",
        "1000",
        "--k",
        "10",
        "--k-range",
        "5:15:5",
        "--reps",
        "50",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k_est,inflation_theoretical,inflation_simulated");
    let at_truth: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!(at_truth[0], "10");
    assert_eq!(at_truth[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(at_truth[2].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn simulate_with_given_design() {
    let text = stdout(&pooltest(&[
        "simulate",
        "--scheme",
        "fti",
        "--n",
        "1000",
        "--k",
        "10",
        "--m",
        "80",
        "--secondary",
        "6",
        "--reps",
        "300",
    ]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..4], ["fti", "80", "6", "300"]);
    let mean: f64 = row[4].parse().unwrap();
    assert!((mean - 111.36).abs() / 111.36 < 0.03, "{mean}");
    assert_eq!(row[7], "0");

    let code = pooltest(&["simulate", "--n", "1000", "--k", "10", "--m", "80", "--secondary", "6"])
        .status
        .code();
    assert_eq!(code, Some(2), "a given design needs a single scheme");
}
