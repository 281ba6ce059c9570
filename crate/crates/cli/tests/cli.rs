use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use elastoct_core::diagnostics::{field_check, FieldCheckConfig};
use elastoct_core::session::{DurableSession, Verdict};
use elastoct_core::stats::{analyze_study, chi_square_2x2, fisher_exact_2x2, ContingencyTable2x2, RateReport};
use elastoct_core::study::{GroundTruth, StudyManifest};
use elastoct_core::{
    build_field, deform, load_image, render_grid_overlay, sample_grid, save_image, BorderPolicy, PixelGrid,
};
use serde_json::Value;

fn elastoct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastoct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = elastoct(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    serde_json::from_str(&ok_stdout(&full)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scan(w: usize, h: usize, salt: usize) -> PixelGrid {
    PixelGrid::from_fn(w, h, |x, y| ((x / 5 + y / 3 + salt) % 9 * 28 + (x + y) % 7) as u8).unwrap()
}

#[test]
fn zero_sigma_deform_copies_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    let output = dir.path().join("out.png");
    let img = scan(60, 40, 1);
    save_image(&img, &input).unwrap();
    ok_stdout(&["deform", "--input", s(&input), "--output", s(&output), "--sigma", "0", "--seed", "1"]);
    assert_eq!(load_image(&output).unwrap(), img);
}

#[test]
fn deform_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    let overlay = dir.path().join("overlay.png");
    let dump = dir.path().join("field.json");
    let img = scan(80, 50, 2);
    save_image(&img, &input).unwrap();
    let args = ["--input", s(&input), "--sigma", "4.5", "--seed", "9", "--grid", "4x3", "--border", "reflect"];

    let mut run = vec!["deform", "--output", s(&output), "--dump-field", s(&dump)];
    run.extend_from_slice(&args);
    let summary = json(&run);
    let expected = deform(&img, 4.5, 9, (4, 3), BorderPolicy::Reflect).unwrap();
    assert_eq!(load_image(&output).unwrap(), expected.image);
    assert_eq!(summary["grid"], "4x3");

    let dumped: Value = serde_json::from_slice(&fs::read(&dump).unwrap()).unwrap();
    let field = build_field(&sample_grid(4, 3, 4.5, 9).unwrap(), 80, 50).unwrap();
    let ux: Vec<f64> = serde_json::from_value(dumped["field"]["ux"].clone()).unwrap();
    assert_eq!(ux, field.ux());
    assert_eq!(dumped["grid"]["cells"].as_array().unwrap().len(), 12);

    let mut run = vec!["deform", "--output", s(&overlay), "--overlay-grid", "10"];
    run.extend_from_slice(&args);
    ok_stdout(&run);
    let drawn = render_grid_overlay(&expected.image, &expected.field, 10).unwrap();
    assert_eq!(load_image(&overlay).unwrap(), drawn);
}

#[test]
fn stats_commands_match_library() {
    let chi = json(&["stats", "chi2", "80", "20", "63", "37"]);
    let direct = chi_square_2x2(&ContingencyTable2x2::new(80, 20, 63, 37), true).unwrap();
    assert_eq!(chi["p_value"].as_f64().unwrap(), direct.p_value);
    assert!((direct.p_value - 0.0122).abs() < 1e-4);
    assert!(ok_stdout(&["stats", "chi2", "80", "20", "63", "37"]).contains("p = 0.012"));

    let plain = json(&["stats", "chi2", "80", "20", "63", "37", "--no-yates"]);
    let direct = chi_square_2x2(&ContingencyTable2x2::new(80, 20, 63, 37), false).unwrap();
    assert_eq!(plain["statistic"].as_f64().unwrap(), direct.statistic);

    let fisher = json(&["stats", "fisher", "20", "0", "13", "7"]);
    assert_eq!(
        fisher["p_value"].as_f64().unwrap(),
        fisher_exact_2x2(&ContingencyTable2x2::new(20, 0, 13, 7))
    );

    let n = ok_stdout(&[
        "stats", "samplesize", "--p-std", "0.80", "--p-test", "0.75", "--margin", "0.20", "--alpha", "0.05", "--power",
        "0.80",
    ]);
    assert_eq!(n.trim(), "96");

    let reference = json(&["stats", "reference"]);
    assert_eq!(reference.as_array().unwrap().len(), 18);
}

#[test]
fn field_check_matches_library() {
    let report = json(&[
        "field-check", "--width", "120", "--height", "90", "--sigma", "9", "--grid", "3x3", "--trials", "40", "--seed",
        "4",
    ]);
    let direct = field_check(&FieldCheckConfig {
        width: 120,
        height: 90,
        sigma: 9.0,
        grid: (3, 3),
        trials: 40,
        seed: 4,
    })
    .unwrap();
    assert_eq!(report["foldovers"], 0);
    assert_eq!(report["min_jacobian"].as_f64().unwrap(), direct.min_jacobian);
    assert_eq!(report["max_magnitude"].as_f64().unwrap(), direct.max_magnitude);
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn augment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    for (i, name) in ["b.png", "a.pgm", "c.png"].iter().enumerate() {
        save_image(&scan(40, 30, i), &input.join(name)).unwrap();
    }
    fs::write(input.join("notes.txt"), "ignored").unwrap();
    let run = |out: &Path| {
        ok_stdout(&[
            "augment", "--input-dir", s(&input), "--output-dir", s(out), "--copies", "3", "--seed", "21",
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    assert_eq!(dir_snapshot(&a), dir_snapshot(&b));
    assert_eq!(dir_snapshot(&a).len(), 10);

    let index: Value = serde_json::from_slice(&fs::read(a.join("augment_index.json")).unwrap()).unwrap();
    let entries = index.as_array().unwrap();
    let sources: Vec<&str> = entries.iter().map(|e| e["source"].as_str().unwrap()).collect();
    assert_eq!(sources, ["a.pgm", "a.pgm", "a.pgm", "b.png", "b.png", "b.png", "c.png", "c.png", "c.png"]);
    for e in entries {
        let sigma = e["sigma"].as_f64().unwrap();
        assert!((0.0..=9.0).contains(&sigma));
        let src = load_image(&input.join(e["source"].as_str().unwrap())).unwrap();
        let expected = deform(&src, sigma, e["seed"].as_u64().unwrap(), (3, 3), BorderPolicy::Clamp).unwrap();
        assert_eq!(load_image(&a.join(e["output"].as_str().unwrap())).unwrap(), expected.image);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(elastoct(&["deform", "--bogus"]).status.code(), Some(1));
    assert_eq!(elastoct(&["stats", "chi2", "1", "2", "3"]).status.code(), Some(1));
    assert_eq!(elastoct(&["deform", "--input", "a.png", "--output", "b.png", "--sigma", "-1", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(elastoct(&["stats", "chi2", "0", "0", "3", "4"]).status.code(), Some(1));
    assert_eq!(elastoct(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let r = elastoct(&[
        "augment", "--input-dir", s(dir.path()), "--output-dir", s(&out), "--copies", "1", "--seed", "1",
        "--sigma-min", "5", "--sigma-max", "2",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());

    let missing = dir.path().join("missing.png");
    let r = elastoct(&["deform", "--input", s(&missing), "--output", s(&dir.path().join("o.png")), "--sigma", "1", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.png"));
}

fn build_small_study(root: &Path) -> (PathBuf, StudyManifest) {
    let pool = root.join("pool");
    fs::create_dir(&pool).unwrap();
    for i in 0..7 {
        save_image(&scan(24, 18, i), &pool.join(format!("p{i}.png"))).unwrap();
    }
    let study = root.join("study");
    let out = json(&[
        "study", "build", "--pool-dir", s(&pool), "--out-dir", s(&study), "--seed", "12", "--category", "LO:1:6:4",
        "--category", "HI:13:18:3",
    ]);
    assert_eq!(out["item_count"], 14);
    (study.clone(), StudyManifest::load_dir(&study).unwrap())
}

#[test]
fn study_build_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let (study, manifest) = build_small_study(dir.path());
    let sessions = dir.path().join("sessions");
    fs::create_dir(&sessions).unwrap();
    let mut session = DurableSession::create(&sessions, "one", "reader", &manifest.study_id, manifest.item_count()).unwrap();
    for pos in 0..manifest.item_count() {
        let v = if pos % 3 == 0 { Verdict::Modified } else { Verdict::Original };
        session.put_verdict(pos, v).unwrap();
    }
    session.finish().unwrap();
    DurableSession::create(&sessions, "open", "reader", &manifest.study_id, manifest.item_count()).unwrap();

    let report: RateReport =
        serde_json::from_value(json(&["study", "analyze", "--study", s(&study), "--sessions-dir", s(&sessions)]))
            .unwrap();
    let direct = analyze_study(&manifest, std::slice::from_ref(session.session())).unwrap();
    assert_eq!(report, direct);
    let text = ok_stdout(&["study", "analyze", "--study", s(&study), "--sessions-dir", s(&sessions)]);
    assert_eq!(text, direct.render_table());

    let item = &manifest.items[1];
    let reveal = json(&["study", "reveal", "--study", s(&study), "--item", &item.item_id]);
    assert_eq!(reveal["ground_truth"], "modified");
    assert_eq!(item.ground_truth, GroundTruth::Modified);
    assert_eq!(elastoct(&["study", "reveal", "--study", s(&study), "--item", "zz"]).status.code(), Some(2));
}

struct Running(Child);

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[tokio::test]
async fn serve_answers_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (study, manifest) = build_small_study(dir.path());
    let sessions = dir.path().join("sessions");
    let mut child = Running(
        Command::new(env!("CARGO_BIN_EXE_elastoct"))
            .args([
                "study", "serve", "--study", s(&study), "--sessions-dir", s(&sessions), "--addr", "127.0.0.1:0",
                "--admin-token", "tok",
            ])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let mut line = String::new();
    BufReader::new(child.0.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();

    let c = reqwest::Client::new();
    let created: Value = c
        .post(format!("{base}/studies/{}/sessions", manifest.study_id))
        .json(&serde_json::json!({ "grader_id": "r" }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(created["item_count"], 14);
    let sid = created["session_id"].as_str().unwrap();
    let img = c.get(format!("{base}/sessions/{sid}/items/0")).send().await.unwrap();
    assert_eq!(img.headers()["content-type"], "image/png");
    let r = c
        .get(format!("{base}/admin/studies/{}/results", manifest.study_id))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), reqwest::StatusCode::UNAUTHORIZED);
    drop(child);
    assert!(sessions.join(format!("{sid}.jsonl")).is_file());
}
