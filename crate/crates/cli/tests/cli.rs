use std::path::Path;
use std::process::{Command, Output};

fn kinbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinbm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_lists_config_keys() {
    let o = kinbm(&["fit", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["[fit.em]", "init_strategy", "[[price.models]]", "vuong_correction"] {
        assert!(text.contains(key), "help lacks {key}");
    }
}

#[test]
fn missing_setting_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinbm(&["fit", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]:"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[simulate]\npolicys = 10\n").unwrap();
    let o = kinbm(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("policys"));
}

#[test]
fn bad_portfolio_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(
        &csv,
        "policy_id,gender,age_class,price_class,area_class,year,count,severities\nP1,0,9,1,1,2011,0,\n",
    )
    .unwrap();
    let o = kinbm(&["fit", "--portfolio", p(&csv), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn full_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = p(&out);
    let sim = kinbm(&["simulate", "--out", out, "--seed", "3", "--policies", "3000", "--years", "2"]);
    assert!(sim.status.success(), "{}", stderr(&sim));
    let portfolio = format!("{out}/portfolio.csv");
    let first = std::fs::read_to_string(&portfolio).unwrap();
    let again = kinbm(&["simulate", "--out", out, "--seed", "3", "--policies", "3000", "--years", "2"]);
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(&portfolio).unwrap(), first);

    for args in [
        vec!["--family", "kinbm_reg", "--k", "1", "--name", "one"],
        vec!["--family", "nbm", "--name", "nbm"],
        vec!["--family", "kinbm_dist", "--k", "1", "--name", "dist"],
        vec!["--family", "pareto_reg", "--m", "1", "--columns", "0,3", "--name", "sev"],
    ] {
        let mut full = vec!["fit", "--out", out, "--portfolio", portfolio.as_str()];
        full.extend(args);
        let o = kinbm(&full);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}/sev.fit.json")).unwrap()).unwrap();
    assert_eq!(fit["covariates"], serde_json::json!(["price"]));

    let fits: Vec<String> =
        ["one", "nbm", "dist", "sev"].iter().map(|n| format!("{out}/{n}.fit.json")).collect();
    let mut compare = vec!["compare", "--out", out, "--portfolio", portfolio.as_str(), "--reps", "20"];
    for f in &fits {
        compare.extend(["--fit", f.as_str()]);
    }
    let o = kinbm(&compare);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("Information criteria"));
    for file in ["compare_simulation.csv", "compare_tests.csv", "compare_criteria.csv", "compare.config.toml"] {
        assert!(Path::new(out).join(file).exists(), "{file} missing");
    }

    let price = |format: &str| {
        kinbm(&[
            "price", "--out", out, "--fit", &fits[0], "--severity-fit", &fits[3], "--kind", "pure",
            "--format", format,
        ])
    };
    let csv = price("csv");
    assert!(csv.status.success(), "{}", stderr(&csv));
    assert_eq!(stdout(&csv), stdout(&price("csv")));
    let table: serde_json::Value = serde_json::from_str(&stdout(&price("json"))).unwrap();
    assert_eq!(table["kind"], "pure");
}

#[test]
fn published_rate_table_starts_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinbm(&[
        "price", "--out", p(dir.path()), "--published", "1INBM1", "--layout", "per_year", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first, "0,-,1,1,1");
    assert!(text.lines().any(|l| l.starts_with("2,\"k1=1, k2=0\"")), "{text}");
}
