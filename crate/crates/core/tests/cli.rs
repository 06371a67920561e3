use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subspace-merge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_cluster_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let out = dir.path().join("run");
    let o = bin(&[
        "synth",
        "--model",
        "normal",
        "--n",
        "100",
        "--r",
        "7",
        "--L",
        "6",
        "--N",
        "600",
        "--seed",
        "3",
        "--out",
        p(&data),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = bin(&[
        "cluster",
        "--input",
        p(&data),
        "--labeled",
        "--seed",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = json(&out.join("report.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["l_hat"], 6);
    assert_eq!(report["crossed"], true);
    assert_eq!(report["ce"], 0.0);
    let p_initial = report["initial_clusters"].as_u64().unwrap() as usize;
    assert_eq!(report["trace"].as_array().unwrap().len(), p_initial - 1);

    let o = bin(&["eval", "--input", p(&out.join("labels.csv"))]);
    assert!(o.status.success());
    let scored: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(scored["ce"], report["ce"]);
    assert_eq!(scored["nmi"], report["nmi"]);
    assert_eq!(scored["l_pred"], 6);
}

#[test]
fn unlabeled_input_has_no_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    bin(&["synth", "--L", "3", "--N", "150", "--out", p(&data)]);
    // strip the label column
    let stripped: String = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    fs::write(&data, stripped).unwrap();
    let out = dir.path().join("run");
    let o = bin(&["cluster", "--input", p(&data), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&out.join("report.json"));
    assert!(report.get("ce").is_none());
    assert!(report.get("nmi").is_none());
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert!(labels.starts_with("pred\n"));
    assert_eq!(labels.lines().count(), 151);
}

#[test]
fn no_crossing_exits_with_two() {
    // one subspace: merging never finds separated clusters
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    bin(&[
        "synth",
        "--L",
        "1",
        "--N",
        "300",
        "--r",
        "10",
        "--out",
        p(&data),
    ]);
    let out = dir.path().join("run");
    let o = bin(&[
        "cluster",
        "--input",
        p(&data),
        "--labeled",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = json(&out.join("report.json"));
    assert_eq!(report["crossed"], false);
    assert_eq!(report["l_hat"], 1);
}

#[test]
fn external_initial_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    bin(&[
        "synth",
        "--L",
        "3",
        "--N",
        "150",
        "--seed",
        "1",
        "--out",
        p(&data),
    ]);
    // pure initial clusters of 5 points each, in generation order
    let init: String = (0..150).map(|i| format!("{}\n", i / 5)).collect();
    let init_path = dir.path().join("init.txt");
    fs::write(&init_path, init).unwrap();
    let out = dir.path().join("run");
    let o = bin(&[
        "cluster",
        "--input",
        p(&data),
        "--labeled",
        "--init-labels",
        p(&init_path),
        "--out",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = json(&out.join("report.json"));
    assert_eq!(report["initial_clusters"], 30);
    assert_eq!(report["l_hat"], 3);
    assert_eq!(report["ce"], 0.0);

    // clusters of two points cannot be scored
    let bad: String = (0..150).map(|i| format!("{}\n", i / 2)).collect();
    fs::write(&init_path, bad).unwrap();
    let o = bin(&[
        "cluster",
        "--input",
        p(&data),
        "--init-labels",
        p(&init_path),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn trace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    bin(&[
        "synth",
        "--n",
        "100",
        "--r",
        "7",
        "--L",
        "6",
        "--N",
        "600",
        "--seed",
        "11",
        "--out",
        p(&data),
    ]);
    let out = dir.path().join("trace");
    let o = bin(&[
        "trace",
        "--input",
        p(&data),
        "--labeled",
        "--seed",
        "11",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));

    let mut rows = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    let mut crossed_at_six = false;
    for rec in rows.records() {
        let rec = rec.unwrap();
        let k: usize = rec[0].parse().unwrap();
        let gamma: f64 = rec[1].parse().unwrap();
        let zeta: f64 = rec[2].parse().unwrap();
        if k > 6 {
            assert!(gamma <= zeta, "K={k}: {gamma} > {zeta}");
        } else if k == 6 {
            crossed_at_six = gamma > zeta;
        }
    }
    assert!(crossed_at_six);

    let total = |name: &str| -> u64 {
        let mut r = csv::Reader::from_path(out.join(name)).unwrap();
        let counts: Vec<u64> = r
            .records()
            .map(|x| x.unwrap()[2].parse().unwrap())
            .collect();
        assert_eq!(counts.len(), 50);
        counts.iter().sum()
    };
    // six clusters of 100 points
    assert_eq!(total("hist_within.csv"), 6 * 100 * 99 / 2);
    assert_eq!(total("hist_between.csv"), 600 * 599 / 2 - 6 * 100 * 99 / 2);
}

#[test]
fn bounds_table() {
    let o = bin(&["bounds", "--t", "11,51,101,151"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for v in ["0.970174", "0.999567", "0.999980", "0.999998"] {
        assert!(text.contains(v), "{v} missing from\n{text}");
    }

    let o = bin(&["bounds", "--m", "0", "--r", "3,2", "--format", "json"]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows[0]["t"], 1575);
    assert_eq!(rows[1]["no_finite_t"], true);
    assert!(rows[1]["t"].is_null());

    let o = bin(&["bounds", "--m", "0", "--r", "2"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("NoFiniteT"));
}

#[test]
fn bench_writes_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = bin(&[
        "bench",
        "--model",
        "uniform",
        "--n",
        "30",
        "--r",
        "4",
        "--L",
        "3",
        "--N",
        "120",
        "--trials",
        "4",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("bench.csv")).unwrap();
    let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        first,
        ["trial", "0", "1", "2", "3", "mean", "median", "std"]
    );
    let report = json(&out.join("bench.json"));
    assert_eq!(report["trials"].as_array().unwrap().len(), 4);
}

#[test]
fn errors_exit_with_one() {
    let o = bin(&["cluster", "--input", "/nonexistent.csv", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n0,0\n3,4\n").unwrap();
    let o = bin(&[
        "cluster",
        "--input",
        p(&bad),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zero vector"));
}

#[test]
fn deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    bin(&[
        "synth",
        "--model",
        "dp",
        "--N",
        "200",
        "--seed",
        "4",
        "--out",
        p(&data),
    ]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        bin(&[
            "cluster",
            "--input",
            p(&data),
            "--labeled",
            "--seed",
            "9",
            "--out",
            p(&out),
        ]);
        fs::read_to_string(out.join("labels.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
