use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn patchal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patchal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = patchal(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    write(
        &root.join("spec.json"),
        r#"{"num_images": 8, "shape": [12, 12, 12], "num_classes": 3, "shapes_per_class": [1, 2],
            "noise_std": 0.3, "fg_fraction_target": 0.05, "instance_jitter": 0.2, "seed": 5}"#,
    );
    let data = root.join("data");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let msg = ok(&["gen-data", "--spec", &s(&root.join("spec.json")), "--out", &s(&data)]);
    assert!(msg.contains("wrote 8 images (6 trainpool, 2 test)"));
    assert!(data.join("dataset.json").exists());
    assert!(data.join("images/img_000.navol").exists());
    assert!(data.join("labels/img_007.navol").exists());

    for method in ["Random", "BALD"] {
        write(
            &root.join(format!("{method}.json")),
            &format!(
                r#"{{"dataset": {{"path": "data"}}, "method": "{method}",
                    "label_regime": {{"name": "low", "total_budget_patches": 10, "query_size": 2, "num_loops": 2}},
                    "patch_size": [4, 4, 4], "learner": {{"ensemble_size": 3, "k": 5}},
                    "seeds": [0, 1], "output_dir": "runs"}}"#
            ),
        );
        let out = ok(&["run", "--config", &s(&root.join(format!("{method}.json")))]);
        assert_eq!(out.lines().count(), 2, "{out}");
    }
    let manifest = root.join("runs/BALD/seed_1/loop_002.json");
    let before = fs::read(&manifest).unwrap();
    let results = fs::read(root.join("runs/BALD/seed_1/results.json")).unwrap();
    ok(&["run", "--config", &s(&root.join("BALD.json")), "--seed", "1"]);
    assert_eq!(fs::read(&manifest).unwrap(), before);
    assert_eq!(fs::read(root.join("runs/BALD/seed_1/results.json")).unwrap(), results);

    let q: serde_json::Value = serde_json::from_slice(&before).unwrap();
    assert_eq!(q["loop"], 2);
    assert_eq!(q["method"], "BALD");
    assert_eq!(q["patches"].as_array().unwrap().len(), 2);
    assert!(q["patches"][0]["score"].is_f64());

    let runs = s(&root.join("runs"));
    let report = root.join("report");
    ok(&["eval", "--runs", &runs, "--out", &s(&report), "--kendall", "aubc:final_dice"]);
    for f in ["report.json", "report.md", "loops.csv"] {
        assert!(report.join(f).exists(), "{f}");
    }
    let csv = ok(&["report", "--runs", &runs, "--format", "csv"]);
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(csv, fs::read_to_string(report.join("loops.csv")).unwrap());
    let json = ok(&["report", "--runs", &runs, "--format", "json"]);
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["summaries"].as_array().unwrap().len(), 2);
    assert_eq!(parsed["ppm"]["methods"], serde_json::json!(["BALD", "Random"]));
    let md = ok(&["report", "--runs", &runs, "--format", "md"]);
    assert_eq!(md, ok(&["report", "--runs", &runs, "--format", "md"]));
    assert!(md.contains("| synthetic |") || md.contains("| data |"));
}

#[test]
fn rejects_bad_input() {
    assert!(!patchal(&["report", "--runs", "x", "--format", "xml"]).status.success());
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"dataset": {"path": "nowhere"}, "method": "PE",
            "label_regime": {"total_budget_patches": 10, "query_size": 5, "num_loops": 3},
            "patch_size": [4, 4, 4], "output_dir": "runs"}"#,
    )
    .unwrap();
    let out = patchal(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceed the total budget"));
}
