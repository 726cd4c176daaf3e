use std::io::Write;
use std::process::Command;

use serde_json::Value;
use sigmak::cli::run;

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("sigmak")
        .chain(args.iter().copied())
        .map(String::from)
        .collect()
}

fn json_of(args: &[&str]) -> (i32, Value) {
    let out = run(&argv(args));
    let v = serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {:?}", out));
    (out.code, v)
}

#[test]
fn construct_prints_exact_constants() {
    let out = run(&argv(&["construct", "-n", "5"]));
    assert_eq!(out.code, 0);
    for needle in [
        r#""k":3"#,
        r#""A":"24""#,
        r#""B":"32""#,
        r#""h":"(1/96)*exp(-2t) + (-4/3)*exp(t)""#,
    ] {
        assert!(
            out.stdout.contains(needle),
            "missing {needle} in {}",
            out.stdout
        );
    }
    let (_, v) = json_of(&["construct", "-n", "3", "-m", "2"]);
    assert_eq!(v["h_coeff_decay"], "1/4");
    assert_eq!(v["h_coeff_growth"], "-1");
    assert_eq!(v["total_dim"], 5);
}

#[test]
fn domain_and_usage_errors_exit_2() {
    let out = run(&argv(&["construct", "-n", "4"]));
    assert_eq!(out.code, 2);
    assert!(out.stdout.is_empty());
    assert!(
        out.stderr.contains("2k = n+1 requires odd n"),
        "{}",
        out.stderr
    );
    for bad in [
        vec!["construct", "-n", "5", "-m", "-1"],
        vec!["construct", "-n", "x"],
        vec!["construct"],
        vec!["frobnicate"],
        vec!["construct", "-n", "5", "--bogus"],
        vec!["verify-exact", "-n", "11"],
        vec!["eval", "-n", "3", "--point", "1,2"],
        vec!["eval", "-n", "3", "--point", "1,zz,3"],
        vec!["verify", "-n", "3", "--samples", "0"],
        vec!["verify", "-n", "3", "--t-min", "2", "--t-max", "-2"],
        vec![
            "cone-check",
            "--matrix-file",
            "/nonexistent/m.txt",
            "-k",
            "2",
        ],
    ] {
        let out = run(&argv(&bad));
        assert_eq!(out.code, 2, "{bad:?}: {out:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_0() {
    for flag in ["--help", "--version"] {
        let out = run(&argv(&[flag]));
        assert_eq!(out.code, 0);
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn verify_small_run_passes() {
    let (code, v) = json_of(&["verify", "-n", "3", "--samples", "1000", "--seed", "42"]);
    assert_eq!(code, 0);
    assert!(v["max_abs_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["cone_failures"], 0);
    assert_eq!(v["phase_ok"], true);
    assert_eq!(v["passed"], true);
    assert_eq!(v["exact_certification"]["ok"], true);
    assert!(v["elapsed_seconds"].is_f64());
    assert_eq!(v["params"]["A"], "4");

    let (code, v) = json_of(&[
        "verify",
        "-n",
        "5",
        "-m",
        "1",
        "--samples",
        "50",
        "--w-radius",
        "10",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["sample_box"]["w_radius"], 10.0);
    assert!(v["phase_ok"].is_null());
}

#[test]
fn eval_reports_the_jet() {
    let (code, v) = json_of(&["eval", "-n", "3", "--point", "1,-0.5,0.3"]);
    assert_eq!(code, 0);
    let e = 0.3f64.exp();
    assert!((v["hessian"][0][2].as_f64().unwrap() - 2.0 * e).abs() < 1e-14);
    assert!((v["sigma_k"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["gradient"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_exact_prints_certification() {
    let (code, v) = json_of(&["verify-exact", "-n", "7"]);
    assert_eq!(code, 0);
    assert_eq!(v["ok"], true);
    assert_eq!(v["k"], 4);
    assert_eq!(v["residual_expr"], Value::Array(vec![]));
}

fn matrix_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn cone_check_exit_codes() {
    let inside = matrix_file("3\n2 0.5 0\n0.5 1 0\n0 0 -0.1\n");
    let path = inside.path().to_str().unwrap();
    let (code, v) = json_of(&["cone-check", "--matrix-file", path, "-k", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["sigma_positivity"]["in_cone"], true);
    assert_eq!(v["lemma"]["negative_count"], 1);

    let outside = matrix_file("2\n-1 0\n0 -1\n");
    let (code, v) = json_of(&[
        "cone-check",
        "--matrix-file",
        outside.path().to_str().unwrap(),
        "-k",
        "1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["sigma_positivity"]["in_cone"], false);

    let asym = matrix_file("2\n1 2\n3 1\n");
    assert_eq!(
        run(&argv(&[
            "cone-check",
            "--matrix-file",
            asym.path().to_str().unwrap(),
            "-k",
            "1"
        ]))
        .code,
        2
    );
}

#[test]
fn phase_check_on_a_solution_hessian() {
    let (_, v) = json_of(&["eval", "-n", "3", "--point", "0.7,-1.1,0.4"]);
    let rows: Vec<Vec<f64>> = serde_json::from_value(v["hessian"].clone()).unwrap();
    let body = std::iter::once("3".to_string())
        .chain(rows.iter().map(|r| {
            r.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        }))
        .collect::<Vec<_>>()
        .join("\n");
    let f = matrix_file(&body);
    let (code, v) = json_of(&["phase-check", "--matrix-file", f.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert!(v["deviation"].as_f64().unwrap() <= 1e-9);

    let id = matrix_file("2\n1 0\n0 1\n");
    let (code, _) = json_of(&["phase-check", "--matrix-file", id.path().to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn text_output() {
    let out = run(&argv(&["--output", "text", "construct", "-n", "3"]));
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("h(t) = (1/4)*exp(-t) + (-1)*exp(t)"));
    let out = run(&argv(&[
        "verify",
        "-n",
        "3",
        "--samples",
        "20",
        "--output",
        "text",
    ]));
    assert!(out.stdout.contains("result: PASS"), "{}", out.stdout);
}

#[test]
fn binary_exit_codes_and_thread_variable() {
    let bin = env!("CARGO_BIN_EXE_sigmak");
    let ok = Command::new(bin)
        .args(["construct", "-n", "7"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains(r#""A":"160""#));
    let bad = Command::new(bin)
        .args(["construct", "-n", "4"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("2k = n+1 requires odd n"));
    for threads in ["0", "many", "-3"] {
        let out = Command::new(bin)
            .args(["verify", "-n", "3", "--samples", "10"])
            .env("SIGMAK_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "SIGMAK_THREADS={threads}");
    }
}
