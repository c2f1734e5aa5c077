use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bustime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bustime")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bustime(&["synth", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(bustime(&["teleport"]).status.code(), Some(1));
    assert_eq!(bustime(&["train", "--model", "knn"]).status.code(), Some(1));
    assert_eq!(bustime(&["--help"]).status.code(), Some(0));
    assert_eq!(bustime(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_inputs_exit_two_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    assert_eq!(bustime(&["synth", "--out", s(&syn), "--trips", "4", "-q"]).status.code(), Some(0));
    let absent = dir.path().join("nowhere");
    let out = bustime(&["align", "--gtfs", s(&syn.join("gtfs")), "--trips", s(&absent), "--out", s(&dir.path().join("al"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(s(&absent.join("trips.csv"))), "{stderr}");

    let out = bustime(&["preprocess", "--gtfs", s(&absent), "--gps", s(&syn.join("gps.csv")), "--out", s(&dir.path().join("pre"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&absent)));
}

#[test]
fn staged_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let run = |args: &[&str]| {
        let out = bustime(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["synth", "--out", s(&p("syn")), "--trips", "60", "--seed", "3", "-q"]);
    run(&["preprocess", "--gtfs", s(&p("syn/gtfs")), "--gps", s(&p("syn/gps.csv")), "--out", s(&p("pre")), "-q"]);
    run(&["align", "--gtfs", s(&p("syn/gtfs")), "--trips", s(&p("pre")), "--out", s(&p("al")), "-q"]);
    for name in ["aligned_stop.csv", "aligned_distance.csv", "anchors_stop.csv", "anchors_distance.csv", "deviation_stats.csv"] {
        assert!(p("al").join(name).is_file(), "{name}");
    }
    let cfg = p("train.conf");
    fs::write(&cfg, "model = knn\nknn_k = 3\nsplit = 0.75\n").unwrap();
    run(&["train", "--config", s(&cfg), "--aligned", s(&p("al/aligned_stop.csv")), "--anchors", s(&p("al/anchors_stop.csv")), "--out", s(&p("m/knn.bin")), "-q"]);
    run(&["predict", "--model", s(&p("m/knn.bin")), "--aligned", s(&p("al/aligned_stop.csv")), "--split", "0.75", "--out", s(&p("rec.csv")), "-q"]);
    run(&["evaluate", "--records", s(&p("rec.csv")), "--mode", "first_query_only", "--out", s(&p("acc.csv")), "-q"]);
    let acc = fs::read_to_string(p("acc.csv")).unwrap();
    let mut lines = acc.lines();
    assert_eq!(lines.next(), Some("mode,mae,rmse,mape,estimate_count"));
    assert!(lines.next().unwrap().starts_with("first_query_only,"));

    // a model trained on stops cannot replay distance-mark trips
    let out = bustime(&["predict", "--model", s(&p("m/knn.bin")), "--aligned", s(&p("al/aligned_distance.csv")), "--out", s(&p("bad.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    fs::write(&plan, "groups = 30, full\nmodels = delay, knn, kr, bam, lstm\nlstm_hidden = 4\nlstm_groups = 30:5\n").unwrap();
    let out_dir = dir.path().join("bench");
    let out = bustime(&["bench", "--plan", s(&plan), "--synth-trips", "120", "--out", s(&out_dir), "--no-timings", "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["mae.csv", "rmse.csv", "mape.csv", "long.csv", "report.csv"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    assert!(!out_dir.join("train_time.csv").exists());
    let mae = fs::read_to_string(out_dir.join("mae.csv")).unwrap();
    assert_eq!(mae.lines().count(), 3, "{mae}");

    fs::write(&plan, "groups = 30\nwarp = 9\n").unwrap();
    let out = bustime(&["bench", "--plan", s(&plan), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&plan)));
}
