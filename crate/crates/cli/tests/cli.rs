use std::process::{Command, Output};

fn cusplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusplab"))
        .args(args)
        .env_remove("CUSPLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows as (header, rows) with the hash comment dropped.
fn table(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let split = |l: &str| l.split(',').map(str::to_owned).collect::<Vec<_>>();
    let header = split(lines.next().expect("header"));
    (header, lines.map(split).collect())
}

fn column(o: &Output, name: &str) -> Vec<String> {
    let (header, rows) = table(o);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn classify_reports_divergence_past_one() {
    let o = cusplab(&["classify", "--family", "g_alpha", "--alpha", "1.5", "--weight", "exact"]);
    assert!(o.status.success());
    assert_eq!(column(&o, "verdict"), ["divergent"]);
    let o = cusplab(&["classify", "--family", "g_alpha", "--alpha", "0.5"]);
    assert_eq!(column(&o, "verdict"), ["convergent"]);
}

#[test]
fn series_below_one_half_diverges() {
    let o = cusplab(&["series", "--alpha", "0.4"]);
    assert!(o.status.success());
    assert_eq!(column(&o, "verdict"), ["divergent"]);
    let o = cusplab(&["series", "--alpha", "0.6"]);
    assert_eq!(column(&o, "verdict"), ["convergent"]);
}

#[test]
fn tent_lyapunov_is_log_two() {
    let o = cusplab(&["lyapunov", "--family", "tent", "--n", "1000"]);
    let chi: f64 = column(&o, "chi")[0].parse().unwrap();
    assert!((chi - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn output_starts_with_the_config_hash() {
    let o = cusplab(&["series", "--alpha", "0.7"]);
    let first = stdout(&o).lines().next().unwrap().to_owned();
    let hash = first.strip_prefix("# config_hash=").expect("hash line");
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    let other = cusplab(&["series", "--alpha", "0.8"]);
    assert_ne!(stdout(&other).lines().next().unwrap(), first);
}

#[test]
fn runs_are_byte_identical() {
    let args = ["density", "--family", "g_alpha", "--alpha", "0.5", "--n", "20000", "--seed", "7"];
    assert_eq!(cusplab(&args).stdout, cusplab(&args).stdout);
    let args = ["pullback", "--family", "g_alpha", "--alpha", "0.5", "--n", "30", "--seed", "7"];
    assert_eq!(cusplab(&args).stdout, cusplab(&args).stdout);
}

#[test]
fn sweeps_do_not_depend_on_the_thread_count() {
    let args = ["sweep", "--family", "g_alpha", "--op", "lyapunov", "--alphas", "0.3,0.5,0.7,0.9,1.1", "--n", "5000"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_cusplab"))
            .args(args)
            .env("CUSPLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(one.stdout, run("4").stdout);
    assert_eq!(column(&one, "alpha").len(), 5);
}

#[test]
fn failed_sweep_rows_are_marked() {
    let o = cusplab(&["sweep", "--op", "series", "--alphas", "0.6,1.5,0.4"]);
    assert!(o.status.success());
    assert_eq!(column(&o, "status"), ["ok", "failed", "ok"]);
    assert_eq!(column(&o, "verdict"), ["convergent", "", "divergent"]);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "family = \"g_alpha\"\nalpha = 0.5\nweight = \"exact\"\n").unwrap();
    let p = path.to_str().unwrap();
    let o = cusplab(&["classify", "--config", p]);
    assert_eq!(column(&o, "verdict"), ["convergent"]);
    let o = cusplab(&["classify", "--config", p, "--alpha", "1.5"]);
    assert_eq!(column(&o, "verdict"), ["divergent"]);

    let out = dir.path().join("out.csv");
    let o = cusplab(&["classify", "--config", p, "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("convergent"));
}

#[test]
fn invalid_config_exits_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "family = \"g_alpha\"\ncolour = 3\n").unwrap();
    let o = cusplab(&["classify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=config"));

    let o = cusplab(&["classify", "--family", "g_alpha", "--alpha", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_nice_interval_exits_four() {
    let o = cusplab(&["induce", "--family", "tent", "--u-lo", "0.1", "--u-hi", "0.5"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error kind=precondition"));
}

#[test]
fn json_output_keeps_column_order() {
    let o = cusplab(&["series", "--alpha", "0.7", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = v["rows"][0].as_object().unwrap();
    assert_eq!(row.keys().next().unwrap(), "alpha");
    assert_eq!(row["verdict"], "convergent");
}
