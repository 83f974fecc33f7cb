use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ies(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ies"))
        .args(args)
        .current_dir(dir)
        .env_remove("IES_SEED")
        .env_remove("RUST_LOG")
        .output()
        .expect("failed to launch ies")
}

fn ies_env(args: &[&str], dir: &Path, key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ies"))
        .args(args)
        .current_dir(dir)
        .env(key, value)
        .output()
        .expect("failed to launch ies")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 2000 rows of x1..x3 in [0, 1] and y = sin(2πx1) + x2² + noise, from a fixed LCG.
fn write_data(dir: &Path) -> PathBuf {
    let mut state: u64 = 12345;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut text = String::from("x1,x2,x3,y\n");
    for _ in 0..2000 {
        let (a, b, c) = (next(), next(), next());
        let y = (2.0 * std::f64::consts::PI * a).sin() + b * b + 0.1 * (next() - 0.5);
        text.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    let path = dir.join("data.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_lists_all_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = ies(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for sub in ["oa-gen", "criterion", "subsample", "fit", "benchmark"] {
        assert!(out.contains(sub), "help lacks {sub}:\n{out}");
    }
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    fs::write(dir.path().join("bad.csv"), "x1,y\n1,oops\n").unwrap();
    let cases: &[(&[&str], i32)] = &[
        (&["oa-gen", "--q", "4", "--p", "3"], 0),
        (&["oa-gen", "--help"], 0),
        (&["--version"], 0),
        (&[], 1),
        (&["frobnicate"], 1),
        (&["oa-gen", "--q", "4", "--p", "3", "--bogus"], 1),
        (&["oa-gen", "--p", "3"], 1),
        (&["oa-gen", "--q", "6", "--p", "3"], 1),
        (&["oa-gen", "--q", "4", "--p", "6"], 1),
        (&["subsample", "--input", "data.csv", "--response", "y", "--n", "10", "--method", "magic"], 1),
        (&["fit", "--input", "data.csv", "--response", "y"], 1),
        (&["fit", "--input", "data.csv", "--response", "y", "--bandwidths", "0.2,0.2"], 1),
        (&["fit", "--input", "data.csv", "--response", "y", "--cv", "--cv-grid", "1:0:1"], 1),
        (&["benchmark", "--N", "100", "--n", "200"], 1),
        (&["--threads", "0", "oa-gen", "--q", "4", "--p", "3"], 1),
        (&["subsample", "--input", "missing.csv", "--response", "y", "--n", "10"], 2),
        (&["subsample", "--input", "data.csv", "--response", "nope", "--n", "10"], 2),
        (&["subsample", "--input", "data.csv", "--response", "y", "--n", "5000"], 2),
        (&["fit", "--input", "bad.csv", "--response", "y", "--bandwidths", "0.3"], 2),
    ];
    for (args, want) in cases {
        let o = ies(args, dir.path());
        assert_eq!(code(&o), *want, "ies {args:?}\nstderr: {}", stderr(&o));
        if *want != 0 {
            assert!(stderr(&o).contains("error"), "ies {args:?} gave no error text");
        }
    }
}

#[test]
fn oa_gen_output_attains_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = ies(&["oa-gen", "--q", "5", "--p", "4", "--output", "oa.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("oa.csv")).unwrap();
    assert_eq!(text.lines().count(), 26);
    let o = ies(&["criterion", "--input", "oa.csv", "--levels", "--q", "5"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["attains_bound"], true);
    assert_eq!(v["lower_bound_exact"], v["lower_bound_weak"]);

    let o = ies(&["oa-gen", "--q", "5", "--p", "4", "--jitter", "--output", "j.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let o = ies(&["criterion", "--input", "j.csv", "--q", "5", "--unit"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["attains_bound"], true, "{v}");
}

#[test]
fn subsample_writes_indices_and_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let args = ["subsample", "--input", "data.csv", "--response", "y", "--n", "100", "--q", "8", "--method", "ies", "--audit"];
    let o = ies(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["audit"], "pass");
    assert_eq!(summary["distinct_rows"], 100);
    let idx = fs::read(dir.path().join("data.subsample.idx")).unwrap();
    let rows = fs::read(dir.path().join("data.subsample.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&idx).lines().count(), 100);
    assert_eq!(String::from_utf8_lossy(&rows).lines().count(), 101);

    let again = ies(&args, dir.path());
    assert_eq!(again.stdout, o.stdout);
    assert_eq!(fs::read(dir.path().join("data.subsample.idx")).unwrap(), idx);
    assert_eq!(fs::read(dir.path().join("data.subsample.csv")).unwrap(), rows);

    // the index file feeds back into the criterion subcommand
    let o = ies(&["criterion", "--input", "data.csv", "--response", "y", "--q", "8", "--indices", "data.subsample.idx"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["l"], summary["criterion"]["l"]);
}

#[test]
fn seed_sources_take_precedence_in_order() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    fs::write(dir.path().join("cfg.toml"), "seed = 11\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>| -> String {
        let mut args = vec!["subsample", "--input", "data.csv", "--response", "y", "--n", "20", "--method", "rand"];
        args.extend_from_slice(extra);
        let o = match env {
            Some(v) => ies_env(&args, dir.path(), "IES_SEED", v),
            None => ies(&args, dir.path()),
        };
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        format!("{}:{}", v["seed"], fs::read_to_string(dir.path().join("data.subsample.idx")).unwrap())
    };
    let default = run(&[], None);
    assert!(default.starts_with("0:"));
    let from_file = run(&["--config", "cfg.toml"], None);
    assert!(from_file.starts_with("11:"));
    assert!(run(&["--config", "cfg.toml"], Some("12")).starts_with("12:"));
    assert!(run(&["--config", "cfg.toml", "--seed", "13"], Some("12")).starts_with("13:"));
    assert_eq!(run(&["--seed", "11"], None), from_file);
    assert_ne!(default, from_file);
}

#[test]
fn fit_emits_summary_and_components() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let args = ["fit", "--input", "data.csv", "--response", "y", "--bandwidths", "0.1,0.3,0.5", "--components", "c.csv"];
    let o = ies(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fit"]["converged"], true);
    assert_eq!(v["fit"]["p"], 3);
    let table = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,m_x1,m_x2,m_x3,fitted,y");
    assert_eq!(lines.count(), 2000);

    let again = ies(&args, dir.path());
    assert_eq!(again.stdout, o.stdout);
    assert_eq!(fs::read_to_string(dir.path().join("c.csv")).unwrap(), table);
}

#[test]
fn fit_with_cross_validation() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let o = ies(
        &["subsample", "--input", "data.csv", "--response", "y", "--n", "200", "--output", "sub.csv", "--emit-indices", "sub.idx"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ies(&["fit", "--input", "sub.csv", "--response", "y", "--cv", "--cv-grid", "0.1:0.9:0.2", "--summary", "s.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(v["cv"]["bandwidths"], v["fit"]["bandwidths"]);
    assert!(v["cv"]["error"].as_f64().unwrap().is_finite());
}

#[test]
fn benchmark_smoke_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "benchmark", "--case", "1", "--N", "2000", "--n", "250", "--q", "16", "--methods", "ies,rand", "--reps", "10", "--out", "r.jsonl",
    ];
    let o = ies(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 20);
    for line in report.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["ase"].as_f64().unwrap().is_finite());
        assert!(v.get("timing").is_none());
    }
    assert!(dir.path().join("r.summary.csv").exists());
    assert!(dir.path().join("r.timing.jsonl").exists());
    assert!(stdout(&o).contains("max_cdf_deviation"));

    let o = ies(&[&args[..args.len() - 1], &["r2.jsonl"]].concat(), dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(dir.path().join("r2.jsonl")).unwrap(), report);
}

#[test]
fn benchmark_real_data_with_log_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("carat,depth,price,label\n");
    let mut s: u64 = 7;
    for _ in 0..1500 {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
        let u = (s >> 11) as f64 / (1u64 << 53) as f64;
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
        let v = (s >> 11) as f64 / (1u64 << 53) as f64;
        let carat = 0.2 + 2.0 * u;
        let depth = 55.0 + 10.0 * v;
        let price = 300.0 * carat.powf(1.7) * (1.0 + 0.05 * (v - 0.5));
        text.push_str(&format!("{carat},{depth},{price},x\n"));
    }
    fs::write(dir.path().join("d.csv"), text).unwrap();
    let o = ies(
        &[
            "benchmark", "--real-data", "d.csv", "--response", "price", "--columns", "carat,depth", "--log-columns", "price,carat",
            "--n", "200", "--reps", "2", "--bandwidths", "0.3,0.3", "--out", "real.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("real.jsonl")).unwrap();
    let methods: Vec<String> = report
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["method"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(methods, ["full", "ies", "rand", "ies", "rand"]);

    let o = ies(&["benchmark", "--real-data", "d.csv", "--response", "price", "--n", "20", "--reps", "1"], dir.path());
    assert_eq!(code(&o), 2, "non-numeric column should fail at load time");
}
