use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use histoblend::core::imaging::RgbImage;
use histoblend::formats::write_png;
use serde_json::Value;

fn histoblend(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histoblend"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = histoblend(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Two strong and two weak correct tiles per case plus one wrong tile.
fn cases_csv(n: usize) -> String {
    let mut s = String::from("case_id,slide_id,label,tile_id,score\n");
    for c in 0..n {
        let label = c % 2;
        let sign = if label == 1 { 1.0 } else { -1.0 };
        for (t, mag) in [0.9, 0.8, 0.7, 0.2, 0.3, 0.4, -0.6].iter().enumerate() {
            s.push_str(&format!("c{c:02},s{c:02},{label},c{c:02}_t{t},{}\n", sign * mag));
        }
    }
    s
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(histoblend(dir.path(), &["screen", "--bogus"]).status.code(), Some(2));
    assert_eq!(histoblend(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let out = histoblend(dir.path(), &["screen", "--seed-range", "3..3", "--out", "r"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    let out = histoblend(dir.path(), &["--config", "missing.json", "fig3", "--seed", "1", "--out", "f"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn screen_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["screen", "--seed-range", "10..=19", "--out", "run"]);
    assert!(stdout.starts_with("100.0% strong"));
    let lines = fs::read_to_string(dir.path().join("run/concordance.jsonl")).unwrap();
    let seeds: Vec<u64> = lines.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, (10..20).collect::<Vec<_>>());
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total"], 10);
}

#[test]
fn fid_of_identical_features_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "# three rows\n1 2 0\n3 4 1\n5 7 2\n2,2,9\n").unwrap();
    let out = ok(dir.path(), &["fid", "--features-a", "a.txt", "--features-b", "a.txt"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["fid"], 0.0);
    assert_eq!(v["dim"], 3);
    assert_eq!(histoblend(dir.path(), &["fid", "--features-a", "a.txt"]).status.code(), Some(2));
}

#[test]
fn blend_and_fig3_write_frames() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["blend", "--seed", "4", "--steps", "3", "--out", "b"]);
    for f in ["frame_000.png", "frame_001.png", "frame_002.png", "trace.json"] {
        assert!(dir.path().join("b").join(f).exists(), "{f}");
    }
    ok(dir.path(), &["fig3", "--seed", "4", "--out", "f"]);
    for f in ["B1.png", "B6.png", "fig3.json"] {
        assert!(dir.path().join("f").join(f).exists(), "{f}");
    }
}

#[test]
fn tile_writes_index_and_accepted_tiles() {
    let dir = tempfile::tempdir().unwrap();
    // 604 px at 1 um/px holds a 2x2 grid of 302 um tiles; left half is tissue.
    let slide = RgbImage::from_fn(604, 604, |x, y| {
        if x < 302 {
            let n = ((x * 7 + y * 13) % 23) as u8;
            [200 - n * 3, 90 + n * 2, 160 + n]
        } else {
            [245, 245, 245]
        }
    });
    write_png(&dir.path().join("slide.png"), &slide).unwrap();
    let out = ok(dir.path(), &["tile", "--slide", "slide.png", "--mpp", "1.0", "--slide-id", "S1", "--out", "tiles"]);
    assert_eq!(out.trim(), "2 of 4 tiles accepted");
    let index = fs::read_to_string(dir.path().join("tiles/index.jsonl")).unwrap();
    assert_eq!(index.lines().count(), 4);
    assert!(dir.path().join("tiles/S1_0_0.png").exists());
    assert!(!dir.path().join("tiles/S1_302_0.png").exists());
}

#[test]
fn curriculum_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("cases.csv"), cases_csv(8)).unwrap();
    ok(d, &["curriculum", "build", "--cases", "cases.csv", "--rng-seed", "11", "--out", "t1"]);
    ok(d, &["curriculum", "build", "--cases", "cases.csv", "--rng-seed", "11", "--out", "t2"]);
    let m1 = fs::read(d.join("t1/manifest.json")).unwrap();
    assert_eq!(m1, fs::read(d.join("t2/manifest.json")).unwrap());

    let manifest: Value = serde_json::from_slice(&m1).unwrap();
    let items = manifest["paper"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 16);
    let key: Vec<(String, u64)> =
        items.iter().map(|i| (i["item_id"].as_str().unwrap().to_string(), i["answer"].as_u64().unwrap())).collect();

    let sheet = |f: &dyn Fn(usize, u64) -> u64| {
        let mut s = String::from("respondent,item_id,answer\n");
        for who in ["r1", "r2", "r3"] {
            for (k, (id, ans)) in key.iter().enumerate() {
                let shift = who.as_bytes()[1] as usize;
                s.push_str(&format!("{who},{id},{}\n", f(k + shift, *ans)));
            }
        }
        s
    };
    fs::write(d.join("pre.csv"), sheet(&|k, a| if k % 3 == 0 { a } else { 1 - a })).unwrap();
    fs::write(d.join("post.csv"), sheet(&|k, a| if k % 5 == 0 { 1 - a } else { a })).unwrap();
    ok(d, &["curriculum", "score", "--manifest", "t1/manifest.json", "--answers", "pre.csv", "--out", "s/pre.json"]);
    ok(d, &["curriculum", "score", "--manifest", "t1/manifest.json", "--answers", "post.csv", "--out", "s/post.json"]);
    let text = ok(d, &["curriculum", "analyze", "--pre", "s/pre.json", "--post", "s/post.json", "--out", "report"]);
    assert!(text.contains(" to "), "{text}");
    assert!(d.join("report/report.json").exists());

    fs::write(d.join("short.csv"), "respondent,item_id,answer\nr1,item-001,1\n").unwrap();
    let out = histoblend(d, &["curriculum", "score", "--manifest", "t1/manifest.json", "--answers", "short.csv", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));

    ok(d, &["curriculum", "split", "--cases", "cases.csv", "--rng-seed", "3", "--out", "split"]);
    let a = fs::read_to_string(d.join("split/half_a.csv")).unwrap();
    assert_eq!(a.lines().count(), 1 + 4 * 7);
}
