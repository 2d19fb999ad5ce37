use std::path::Path;
use std::process::{Command, Output};

fn lissscan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lissscan"))
        .args(args)
        .current_dir(dir)
        .env_remove("LISSSCAN_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn design_prints_exact_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(&["design", "--r", "1.5", "--m", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fx"], "41/28");
    assert_eq!(v["case"], "Case1");
    assert_eq!(v["period"]["coverage_period"], "14/1");

    std::fs::write(
        dir.path().join("s.json"),
        r#"{"fx_res": 2660, "fy_res": 1100, "qx": 30, "qy": 50}"#,
    )
    .unwrap();
    let o = lissscan(
        &[
            "design",
            "--r",
            "2.418181818181818",
            "--m",
            "7",
            "--scanner",
            "s.json",
            "--explain",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fx"], "17/7");
    assert_eq!(v["case"], "Case3");
    assert!((v["fx_hz"].as_f64().unwrap() - 2671.43).abs() < 0.01);

    // 42/28 lies closest to 1.5 but shares a factor of 14 with 28
    let o = lissscan(&["design", "--r", "1.5", "--m", "7", "--explain"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rejected"][0]["k"], 42);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(&["design", "--r", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = lissscan(&["design", "--r", "1.5", "--m", "7", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"));
    let o = lissscan(&["nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        "design",
        "metrics",
        "sweep",
        "pattern",
        "optimize",
        "phase-sim",
        "phase-solve",
    ] {
        let o = lissscan(&[cmd, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn domain_errors_exit_1_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(&["design", "--r", "4", "--m", "7"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: domain: "), "{err}");

    let o = lissscan(&["metrics", "--r", "1.5", "--m", "7", "--samples", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(
        dir.path().join("ms.json"),
        r#"{"x": [1, 0, 0], "xq": [0, 0, 0], "omegas": [5.834386356666759, 6.283185307179586, 6.731984257692414], "frame_time": 14}"#,
    )
    .unwrap();
    let o = lissscan(&["phase-solve", "--samples", "ms.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: ill_conditioned: "));
    assert!(stderr(&o).contains("tones 0 and 2"));
}

#[test]
fn metrics_reports_fill_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(
        &[
            "metrics",
            "--r",
            "1.5",
            "--m",
            "7",
            "--rule",
            "baseline",
            "--phase-deltas",
            "10",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["design"]["fx"], "11/7");
    assert!((v["scanning_range"].as_f64().unwrap() - 0.45).abs() < 0.01);
    assert_eq!(v["phase_tolerance"].as_array().unwrap().len(), 1);
}

#[test]
fn full_sweep_has_one_row_per_cell_and_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(
        &[
            "sweep", "--r-min", "1", "--r-max", "3", "--r-step", "0.05", "--m", "6,7,8,9", "--out", "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,m,rule,status,fill_factor,scanning_range,fx"));
    assert_eq!(lines.count(), 4 * 41 * 2);
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "sweep", "--r-min", "1.8", "--r-max", "2.2", "--r-step", "0.1", "--m", "7,8", "--out", out,
        ]
    };
    assert!(lissscan(&args("a.csv"), dir.path()).status.success());
    assert!(lissscan(&args("b.csv"), dir.path()).status.success());
    let capped = Command::new(env!("CARGO_BIN_EXE_lissscan"))
        .args(args("c.csv"))
        .current_dir(dir.path())
        .env("LISSSCAN_THREADS", "1")
        .output()
        .unwrap();
    assert!(capped.status.success());
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("c.csv"));

    let bad = Command::new(env!("CARGO_BIN_EXE_lissscan"))
        .args(args("d.csv"))
        .current_dir(dir.path())
        .env("LISSSCAN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn pattern_export_has_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = lissscan(&["pattern", "--r", "1.5", "--m", "7", "--out", "p2.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("p2.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);
    let o = lissscan(&["pattern", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_is_deterministic_and_reports_density() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"fx_res": 2, "fy_res": 1, "qx": 20, "qy": 20}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("roi.json"),
        r#"[{"x0": 0.2, "x1": 0.9, "y0": 0.2, "y1": 0.8}]"#,
    )
    .unwrap();
    let run = |out: &str, trace: &str| {
        let o = lissscan(
            &[
                "optimize",
                "--scanner",
                "s.json",
                "--roi",
                "roi.json",
                "--tones",
                "3",
                "--y-tones",
                "1",
                "--n-samples",
                "500",
                "--m",
                "7",
                "--seed",
                "3",
                "--max-iters",
                "30",
                "--out",
                out,
                "--trace",
                trace,
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run("a.json", "a.csv");
    run("b.json", "b.csv");
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.csv"), read("b.csv"));

    let v: serde_json::Value = serde_json::from_slice(&read("a.json")).unwrap();
    assert_eq!(v["x_tones"].as_array().unwrap().len(), 3);
    assert_eq!(v["y_tones"].as_array().unwrap().len(), 1);
    assert!(v["final_loss"].as_f64().unwrap() < v["initial_loss"].as_f64().unwrap());
    let d = &v["roi_density"];
    assert!(d["optimized"].as_u64().unwrap() > d["reference"].as_u64().unwrap());

    // warm start from the saved parameters, then resample
    let o = lissscan(
        &[
            "optimize",
            "--scanner",
            "s.json",
            "--roi",
            "roi.json",
            "--warm",
            "a.json",
            "--max-iters",
            "5",
            "--out",
            "w.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let w: serde_json::Value = serde_json::from_slice(&read("w.json")).unwrap();
    assert_eq!(w["initial_loss"], v["final_loss"]);
    let o = lissscan(
        &["pattern", "--params", "w.json", "--samples", "500", "--out", "w.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn optimize_accepts_pgm_weight_maps() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"fx_res": 1, "fy_res": 1, "qx": 20, "qy": 20}"#,
    )
    .unwrap();
    let mut pgm = String::from("P2\n8 8\n255\n");
    for row in 0..8 {
        let line: Vec<&str> = (0..8)
            .map(|col| if row < 3 && col >= 5 { "255" } else { "0" })
            .collect();
        pgm.push_str(&line.join(" "));
        pgm.push('\n');
    }
    std::fs::write(dir.path().join("w.pgm"), pgm).unwrap();
    let o = lissscan(
        &[
            "optimize",
            "--scanner",
            "s.json",
            "--roi",
            "w.pgm",
            "--max-iters",
            "10",
            "--out",
            "p.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.csv"), "1,1,1\n1,1,1\n").unwrap();
    let o = lissscan(
        &["optimize", "--scanner", "s.json", "--roi", "bad.csv", "--out", "p.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: non_square: "));
}

#[test]
fn phase_sim_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sc.json"),
        r#"{"drift": {"kind": "linear", "rate_hz_per_s": 0.5}, "plant": {"resonance_hz": 2660, "q": 30},
            "frame_time_s": 0.0063636, "control_enabled": true, "noise_deg": 0.5, "drive_hz": 2671.43}"#,
    )
    .unwrap();
    let o = lissscan(
        &[
            "phase-sim",
            "--scenario",
            "sc.json",
            "--duration",
            "2",
            "--out",
            "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(text.starts_with("t,phase_error_deg,corrected,correction_deg\n"));
    assert_eq!(text.lines().count(), 1 + 314);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["frames"], 314);

    let o = lissscan(
        &[
            "phase-sim",
            "--scenario",
            "sc.json",
            "--duration",
            "0.001",
            "--out",
            "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}
