use std::path::Path;
use std::process::{Command, Output};

fn crease() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crease"));
    c.env_remove("CREASE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    crease().args(args).output().expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).expect("golden file")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn assert_json_error(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("error line");
    let v: serde_json::Value = serde_json::from_str(last).expect("single-line json error");
    assert_eq!(v["level"], "error");
}

#[test]
fn help_matches_golden() {
    let cases: Vec<(Vec<&str>, String)> = vec![
        (vec!["--help"], "help.txt".into()),
        (vec!["generate", "--help"], "help_generate.txt".into()),
        (vec!["edges", "--help"], "help_edges.txt".into()),
        (vec!["augment", "--help"], "help_augment.txt".into()),
        (vec!["metrics", "--help"], "help_metrics.txt".into()),
        (
            vec!["bridge-check", "--help"],
            "help_bridge-check.txt".into(),
        ),
        (vec!["verify", "--help"], "help_verify.txt".into()),
        (
            vec!["metrics", "ssim", "--help"],
            "help_metrics_ssim.txt".into(),
        ),
        (
            vec!["metrics", "diversity", "--help"],
            "help_metrics_diversity.txt".into(),
        ),
        (
            vec!["metrics", "fid", "--help"],
            "help_metrics_fid.txt".into(),
        ),
        (
            vec!["metrics", "eer", "--help"],
            "help_metrics_eer.txt".into(),
        ),
        (
            vec!["metrics", "tmr", "--help"],
            "help_metrics_tmr.txt".into(),
        ),
        (
            vec!["metrics", "det", "--help"],
            "help_metrics_det.txt".into(),
        ),
    ];
    for (args, file) in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(
            String::from_utf8_lossy(&out.stdout),
            golden(&file),
            "{file}"
        );
    }
}

#[test]
fn help_lists_every_flag() {
    let expect: &[(&[&str], &[&str])] = &[
        (
            &["generate"],
            &[
                "--variant",
                "--ids",
                "--seed",
                "--out",
                "--canvas",
                "--thickness",
                "--cpd-magnitude",
            ],
        ),
        (
            &["edges"],
            &[
                "--in",
                "--out",
                "--blur-kernel",
                "--blur-sigma",
                "--dilate-kernel",
                "--dilate-iters",
            ],
        ),
        (&["augment"], &["--in", "--out", "--seed", "--only"]),
        (&["bridge-check"], &["--T", "--samples"]),
        (&["verify"], &["--manifest"]),
        (&["metrics", "det"], &["--scores", "--points", "--out"]),
    ];
    for (cmd, flags) in expect {
        let mut args = cmd.to_vec();
        args.push("--help");
        let text = String::from_utf8(run(&args).stdout).unwrap();
        for f in *flags {
            assert!(text.contains(f), "{cmd:?} help lacks {f}");
        }
        for global in ["--jobs", "--config", "--log-level"] {
            assert!(text.contains(global));
        }
    }
}

#[test]
fn generate_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = run(&[
        "generate",
        "--variant",
        "vpd",
        "--ids",
        "2",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--canvas",
        "80x80",
        "--margin",
        "4",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout_json(&o)["images"], 28);
    let manifest = out.join("manifest.json");
    let v = run(&["verify", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout_json(&v)["mismatches"].as_array().unwrap().len(), 0);

    let s = run(&["metrics", "ssim", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    assert!(stdout_json(&s)["mean"].as_f64().unwrap() < 1.0);
    let d = run(&[
        "metrics",
        "diversity",
        "--manifest",
        manifest.to_str().unwrap(),
        "--pool",
        "4",
    ]);
    assert_eq!(stdout_json(&d)["metric"], "pixel_diversity_pool4");

    std::fs::write(out.join("id0001/03_elastic_strong.png"), b"x").unwrap();
    let v = run(&["verify", "--manifest", manifest.to_str().unwrap()]);
    assert_json_error(&v, 1);
    assert_eq!(stdout_json(&v)["mismatches"].as_array().unwrap().len(), 1);

    let s = run(&["metrics", "ssim", "--manifest", manifest.to_str().unwrap()]);
    assert_json_error(&s, 1);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "label,score\n").unwrap();
    assert_json_error(
        &run(&["metrics", "eer", "--scores", empty.to_str().unwrap()]),
        1,
    );
    assert_json_error(
        &run(&["generate", "--variant", "fc", "--ids", "1", "--out", "x"]),
        1,
    );
    assert_json_error(&run(&["generate", "--bogus"]), 1);
    assert_json_error(&run(&["metrics", "tmr", "--scores", "missing.csv"]), 1);
    assert_json_error(
        &run(&[
            "--jobs",
            "0",
            "bridge-check",
            "--T",
            "10",
            "--samples",
            "10",
        ]),
        1,
    );
    assert_json_error(&run(&["bridge-check", "--T", "0"]), 1);
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a dir").unwrap();
    let out = blocker.join("sub");
    let o = run(&[
        "generate",
        "--variant",
        "fc",
        "--ids",
        "1",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_json_error(&o, 2);
}

#[test]
fn seed_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = [
        "--variant",
        "fc",
        "--ids",
        "1",
        "--canvas",
        "64x64",
        "--margin",
        "4",
    ];
    let mut args_a = vec!["generate", "--seed", "1", "--out", a.to_str().unwrap()];
    args_a.extend(common);
    let o = crease()
        .args(&args_a)
        .env("CREASE_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&o)["seed"], 42);
    let mut args_b = vec!["generate", "--seed", "42", "--out", b.to_str().unwrap()];
    args_b.extend(common);
    run(&args_b);
    let ma = std::fs::read_to_string(a.join("manifest.json")).unwrap();
    let mb = std::fs::read_to_string(b.join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let toml_cfg = dir.path().join("c.toml");
    std::fs::write(
        &toml_cfg,
        "variant = \"cpd\"\nids = 3\nseed = 8\ncanvas = \"64x64\"\nmargin = 4\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "--config",
        toml_cfg.to_str().unwrap(),
        "generate",
        "--ids",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = stdout_json(&o);
    assert_eq!(v["identities"], 1);
    assert_eq!(v["variant"], "CPD");
    assert_eq!(v["seed"], 8);

    let json_cfg = dir.path().join("c.json");
    std::fs::write(&json_cfg, r#"{"T": 20, "samples": 500, "unknown_flag": 1}"#).unwrap();
    assert_json_error(
        &run(&["--config", json_cfg.to_str().unwrap(), "bridge-check"]),
        1,
    );
    std::fs::write(&json_cfg, r#"{"T": 20, "samples": 500}"#).unwrap();
    let o = run(&["--config", json_cfg.to_str().unwrap(), "bridge-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["max_step"], 20);
}

#[test]
fn output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifests = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(jobs);
        let o = run(&[
            "--jobs",
            jobs,
            "generate",
            "--variant",
            "vpd",
            "--ids",
            "3",
            "--seed",
            "2",
            "--out",
            out.to_str().unwrap(),
            "--canvas",
            "64x64",
            "--margin",
            "4",
        ]);
        assert_eq!(o.status.code(), Some(0));
        manifests.push(std::fs::read_to_string(out.join("manifest.json")).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn score_metrics_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("s.csv");
    std::fs::write(&scores, "label,score\ngenuine,0.9\ngenuine,0.8\ngenuine,0.4\nimpostor,0.7\nimpostor,0.3\nimpostor,0.2\n").unwrap();
    let s = scores.to_str().unwrap();
    let e = stdout_json(&run(&["metrics", "eer", "--scores", s]));
    let (want, tau) = crease_oracle::eer_sweep(&[0.9, 0.8, 0.4], &[0.7, 0.3, 0.2]);
    assert_eq!(e["eer"].as_f64().unwrap(), want);
    assert_eq!(e["threshold"].as_f64().unwrap(), tau);
    let t = stdout_json(&run(&["metrics", "tmr", "--scores", s, "--fmr", "0.5"]));
    assert_eq!(
        t["points"][0]["tmr"].as_f64().unwrap(),
        crease_oracle::tmr_sweep(&[0.9, 0.8, 0.4], &[0.7, 0.3, 0.2], 0.5)
    );
    let det = dir.path().join("det.csv");
    let o = run(&[
        "metrics",
        "det",
        "--scores",
        s,
        "--out",
        det.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(det).unwrap();
    assert!(text.starts_with("fmr,fnmr\n"));
    assert_eq!(text.lines().count(), 1 + 7);
}

#[test]
fn feature_metrics_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let fa = dir.path().join("a.csv");
    let fb = dir.path().join("b.csv");
    std::fs::write(&fa, "id,f0\na,-1\na,1\nb,-1\nb,1\n").unwrap();
    std::fs::write(&fb, "id,f0\na,2\na,4\nb,2\nb,4\n").unwrap();
    let d = stdout_json(&run(&[
        "metrics",
        "diversity",
        "--features",
        fa.to_str().unwrap(),
    ]));
    assert_eq!(d["mean"].as_f64().unwrap(), 2.0);
    let f = stdout_json(&run(&[
        "metrics",
        "fid",
        "--features-a",
        fa.to_str().unwrap(),
        "--features-b",
        fb.to_str().unwrap(),
    ]));
    assert!((f["value"].as_f64().unwrap() - 9.0).abs() < 1e-9);
    let sa = dir.path().join("sa.json");
    let sb = dir.path().join("sb.json");
    std::fs::write(&sa, r#"{"mean":[0.0],"cov":[[1.0]],"n":10}"#).unwrap();
    std::fs::write(&sb, r#"{"mean":[3.0],"cov":[[1.0]],"n":10}"#).unwrap();
    let f = stdout_json(&run(&[
        "metrics",
        "fid",
        "--stats-a",
        sa.to_str().unwrap(),
        "--stats-b",
        sb.to_str().unwrap(),
    ]));
    assert_eq!(f["value"].as_f64().unwrap(), 9.0);
}

#[test]
fn augment_and_edges_directories() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("g");
    run(&[
        "generate",
        "--variant",
        "fc",
        "--ids",
        "1",
        "--seed",
        "3",
        "--out",
        gen.to_str().unwrap(),
        "--canvas",
        "64x64",
        "--margin",
        "4",
    ]);
    let input = dir.path().join("in");
    std::fs::create_dir(&input).unwrap();
    std::fs::copy(gen.join("id0000/00_fc.png"), input.join("p.png")).unwrap();
    let out = dir.path().join("aug");
    let o = run(&[
        "augment",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["written"], 14);
    assert!(out.join("p_noise_rethreshold.png").exists());
    let first = std::fs::read(out.join("p_elastic_mild.png")).unwrap();
    let again = dir.path().join("aug2");
    run(&[
        "augment",
        "--in",
        input.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--seed",
        "5",
        "--only",
        "elastic_mild",
    ]);
    assert_eq!(
        std::fs::read(again.join("p_elastic_mild.png")).unwrap(),
        first
    );

    let edges = dir.path().join("edges");
    let o = run(&[
        "edges",
        "--in",
        input.to_str().unwrap(),
        "--out",
        edges.to_str().unwrap(),
        "--blur-kernel",
        "4",
    ]);
    assert_json_error(&o, 1);
    let o = run(&[
        "edges",
        "--in",
        input.to_str().unwrap(),
        "--out",
        edges.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(edges.join("p.png").exists());
}
