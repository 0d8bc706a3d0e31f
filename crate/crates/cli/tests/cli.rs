use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use occlugen_cli::{cmd_stats, EXIT_RUNTIME, EXIT_VALIDATION};
use occlugen_core::dataset::{write_demo_inputs, write_manifest, ManifestRecord, SampleStatus};

fn occlugen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occlugen"))
        .args(args)
        .env("OCCLUGEN_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn demo(root: &Path) -> PathBuf {
    write_demo_inputs(root, 3, 48).unwrap();
    let cfg = root.join("gen.toml");
    fs::write(&cfg, "count = 6\nglobal_seed = 11\n[natocc.sot]\niterations = 8\n").unwrap();
    cfg
}

fn record(i: usize, pipeline: &str, alpha: f64, status: SampleStatus) -> ManifestRecord {
    ManifestRecord {
        sample_id: format!("{i:06}"),
        pipeline: pipeline.into(),
        face_id: "f".into(),
        occluder_ids: vec!["t@0,0,4x4".into()],
        seed: i as u64,
        alpha,
        scale: 0.5 + (i % 50) as f64 / 100.0,
        placement: [0, 0],
        config_hash: "x".into(),
        status,
    }
}

#[test]
fn generate_inspect_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo(dir.path());
    let out = dir.path().join("out");
    let o = occlugen(&["mix", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["count"], 6);

    let snapshot = fs::read_to_string(out.join("config.snapshot")).unwrap();
    assert!(snapshot.contains("workers = 2") && snapshot.contains("global_seed = 11"));

    let o = occlugen(&["inspect", "--out", out.to_str().unwrap(), "--id", "000004"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verification passed"));

    // rerun without --force refuses, with --force succeeds
    let o = occlugen(&["mix", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));

    let img = out.join("images/000004.png");
    let mut px = image::open(&img).unwrap().to_rgb8();
    let p = px.get_pixel(5, 6).0;
    px.put_pixel(5, 6, image::Rgb([p[0] ^ 0x80, p[1], p[2]]));
    px.save(&img).unwrap();
    let o = occlugen(&["inspect", "--out", out.to_str().unwrap(), "--id", "000004"]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("image: MISMATCH 1/2304 pixels differ within x 5..=5, y 6..=6"), "{text}");
}

#[test]
fn seed_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo(dir.path());
    let run = |seed: &str, out: &str| {
        let o = occlugen(&["randocc", "--config", cfg.to_str().unwrap(), "--seed", seed, "--count", "2", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["config_hash"].clone()
    };
    let a = run("1", dir.path().join("a").to_str().unwrap());
    let b = run("2", dir.path().join("b").to_str().unwrap());
    assert_ne!(a, b);
    let manifest = fs::read_to_string(dir.path().join("b/manifest.jsonl")).unwrap();
    assert!(manifest.contains(b.as_str().unwrap()));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[randocc]\nalpha_range = [0.9, 0.5]\n").unwrap();
    let o = occlugen(&["randocc", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&o.stderr).contains("randocc.alpha_range"));

    // valid config, missing input tree
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "count = 1\n").unwrap();
    let o = occlugen(&["natocc", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
}

#[test]
fn eval_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = (dir.path().join("pred"), dir.path().join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    let g = image::GrayImage::from_fn(4, 4, |x, _| image::Luma([if x < 2 { 255 } else { 0 }]));
    let p = image::GrayImage::from_fn(4, 4, |x, _| image::Luma([if x < 3 { 255 } else { 0 }]));
    g.save(gt.join("a.png")).unwrap();
    p.save(pred.join("a.png")).unwrap();
    let o = occlugen(&["eval", "--pred", pred.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // gt face 8 px, pred face 12 px: IoU1 = 8/12, IoU0 = 4/8
    assert!((r["mean_iou"].as_f64().unwrap() - (8.0 / 12.0 + 0.5) / 2.0).abs() < 1e-12);
    assert!((r["pixel_accuracy"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(r["image_count"], 1);
}

#[test]
fn stats_counts_transparency() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    let rows: Vec<_> = (0..100).map(|i| record(i, "randocc", if i < 30 { 0.6 } else { 1.0 }, SampleStatus::Ok)).collect();
    write_manifest(&rows, &path).unwrap();
    let s = cmd_stats(&path).unwrap();
    assert_eq!(s.transparent_fraction, Some(0.30));
    assert_eq!(s.scale_histogram.iter().sum::<u64>(), 100);
}

#[test]
fn stats_of_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    fs::write(&path, "").unwrap();
    let o = occlugen(&["stats", "--manifest", path.to_str().unwrap()]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["rows"], 0);
    assert_eq!(r["skipped"], 0);
}

#[test]
fn stats_match_line_count_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    let rows: Vec<_> = (0..57)
        .map(|i| {
            let p = if i % 3 == 0 { "randocc" } else { "natocc" };
            let st = if i % 10 == 0 { SampleStatus::Skipped } else { SampleStatus::Ok };
            record(i, p, 1.0, st)
        })
        .collect();
    write_manifest(&rows, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let grep = |needle: &str| text.lines().filter(|l| l.contains(needle)).count() as u64;
    let s = cmd_stats(&path).unwrap();
    assert_eq!(s.rows, text.lines().count() as u64);
    assert_eq!(s.per_pipeline["natocc"].rows, grep("\"pipeline\":\"natocc\""));
    assert_eq!(s.per_pipeline["randocc"].rows, grep("\"pipeline\":\"randocc\""));
    assert_eq!(s.skipped, grep("\"status\":\"skipped\""));

    fs::write(&path, format!("{text}not json\n")).unwrap();
    let o = occlugen(&["stats", "--manifest", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 58"));
}
