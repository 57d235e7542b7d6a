use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alphaloss::mnist::{
    labels_to_bytes, IdxImages, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
use tempfile::TempDir;

fn alphaloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alphaloss"))
        .args(args)
        .env_remove("ALPHALOSS_MNIST_DIR")
        .output()
        .unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Small IDX corpus with enough ones and sevens for the split; the two
/// digits differ in the first pixel so a linear model can separate them.
fn fake_mnist() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, digits: Vec<u8>| {
        let pixels = digits
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| {
                let mark = if d == 1 { 220 } else { 20 };
                (0..16).map(move |p| if p == 0 { mark } else { ((i * 7 + p * 13) % 256) as u8 })
            })
            .collect();
        let images = IdxImages {
            count: digits.len(),
            rows: 4,
            cols: 4,
            pixels,
        };
        let (img, lbl) = name.split_once('|').unwrap();
        std::fs::write(dir.path().join(img), images.to_bytes()).unwrap();
        std::fs::write(dir.path().join(lbl), labels_to_bytes(&digits)).unwrap();
    };
    let train: Vec<u8> = (0..13_000).map(|i| [1, 7][i % 2]).collect();
    let test: Vec<u8> = (0..2_200).map(|i| [7, 1][i % 2]).collect();
    write(&format!("{TRAIN_IMAGES}|{TRAIN_LABELS}"), train);
    write(&format!("{TEST_IMAGES}|{TEST_LABELS}"), test);
    dir
}

fn out_in(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn losscurves_reference_points() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_in(&tmp, "curves.csv");
    let status = alphaloss(&[
        "losscurves", "--alphas", "1,2,inf", "--z-min", "-10", "--z-max", "10", "--steps", "21",
        "--out", path_arg(&out),
    ]);
    assert!(status.status.success(), "{status:?}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["alpha", "z", "loss", "d1", "d2"]);
    assert_eq!(rows.len(), 63);
    let at = |a: &str, z: f64| {
        rows.iter()
            .find(|r| r[0] == a && num(&r[1]) == z)
            .unwrap_or_else(|| panic!("no row for {a}, {z}"))
    };
    assert_eq!(num(&at("inf", 0.0)[2]), 0.5);
    assert!((num(&at("1", 0.0)[2]) - 2f64.ln()).abs() < 1e-15);
    assert!((num(&at("1", 0.0)[3]) + 0.5).abs() < 1e-15);
    for a in ["1", "2", "inf"] {
        assert!(num(&at(a, 10.0)[2]) < 0.01);
    }
    assert!(out.with_file_name("curves.csv.manifest.json").exists());
}

#[test]
fn calibration_rows_and_skipped_half() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_in(&tmp, "cal.csv");
    let run = alphaloss(&[
        "calibration", "--alphas", "1,2,inf", "--eta-grid", "0.25,0.3,0.5,0.8", "--out",
        path_arg(&out),
    ]);
    assert!(run.status.success(), "{run:?}");
    assert!(String::from_utf8_lossy(&run.stderr).contains("eta = 0.5 skipped"));
    let (header, rows) = read_csv(&out);
    assert_eq!(
        header,
        [
            "alpha", "eta", "unconstrained_min", "constrained_min", "gap", "argmin",
            "closed_form_argmin", "min_cond_risk_closed_form"
        ]
    );
    assert_eq!(rows.len(), 9);
    let row = |a: &str, e: f64| rows.iter().find(|r| r[0] == a && num(&r[1]) == e).unwrap();
    assert!((num(&row("inf", 0.3)[7]) - 0.3).abs() < 1e-15);
    assert!((num(&row("1", 0.25)[7]) - 0.562_335_144_618_808_5).abs() < 1e-12);
    assert_eq!(row("inf", 0.8)[6], "inf");
    for r in rows.iter().filter(|r| r[0] == "2") {
        assert!(num(&r[4]) > 0.0);
    }
}

#[test]
fn landscape_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        vec![
            "landscape".to_string(),
            "--alphas".into(),
            "1,2".into(),
            "--ns".into(),
            "50,200".into(),
            "--trials".into(),
            "1".into(),
            "--holdout".into(),
            "2000".into(),
            "--seed".into(),
            "4".into(),
            "--out".into(),
            out_in(&tmp, name).to_str().unwrap().into(),
        ]
    };
    let first: Vec<String> = args("a.csv");
    let second: Vec<String> = args("b.csv");
    let run_a = alphaloss(&first.iter().map(String::as_str).collect::<Vec<_>>());
    let run_b = alphaloss(&second.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(run_a.status.success() && run_b.status.success(), "{run_a:?}");
    let bytes = |n: &str| std::fs::read(out_in(&tmp, n)).unwrap();
    assert_eq!(bytes("a.csv"), bytes("b.csv"));
    assert_eq!(bytes("a_summary.csv"), bytes("b_summary.csv"));

    let (header, rows) = read_csv(&out_in(&tmp, "a.csv"));
    assert_eq!(header, ["alpha", "n", "trial", "gap", "hoeffding_eps", "zero_one_test_risk"]);
    for r in &rows {
        assert_eq!(r[4].is_empty(), r[0] == "1");
    }
    assert!(String::from_utf8_lossy(&run_a.stderr).contains("hoeffding_eps left empty for alpha = 1"));
    let (summary_header, _) = read_csv(&out_in(&tmp, "a_summary.csv"));
    assert_eq!(
        summary_header,
        [
            "alpha", "n", "trials", "diverged", "median_gap", "mean_zero_one_risk",
            "se_zero_one_risk", "slope"
        ]
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&bytes("a.csv.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "landscape");
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["flags"]["landscape"]["ns"][1], 200);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn train_is_deterministic_and_matches_a_degenerate_sweep() {
    let data = fake_mnist();
    let tmp = tempfile::tempdir().unwrap();
    let run_train = |name: &str, lr: &str, epochs: &str| {
        let out = out_in(&tmp, name);
        let r = alphaloss(&[
            "train", "--alpha", "2", "--lr", lr, "--epochs", epochs, "--seed", "3",
            "--mnist-dir", path_arg(data.path()), "--out", path_arg(&out),
        ]);
        assert!(r.status.success(), "{r:?}");
        read_csv(&out)
    };
    let (header, a) = run_train("a.csv", "0", "1");
    let (_, b) = run_train("b.csv", "0", "1");
    assert_eq!(
        header,
        ["alpha", "lr", "epochs", "seed", "train_acc", "val_acc", "test_acc", "final_risk"]
    );
    assert_eq!(a, b);

    let (_, trained) = run_train("c.csv", "1.5", "20");
    assert!(num(&trained[0][6]) > 0.9);

    let sweep_out = out_in(&tmp, "sweep.csv");
    let r = alphaloss(&[
        "sweep", "--alphas", "2", "--lr-grid", "1.5", "--epochs", "20", "--seed", "3",
        "--mnist-dir", path_arg(data.path()), "--out", path_arg(&sweep_out),
    ]);
    assert!(r.status.success(), "{r:?}");
    let (header, sweep) = read_csv(&sweep_out);
    assert_eq!(header, ["alpha", "best_lr", "val_acc", "test_acc"]);
    assert_eq!(sweep[0][0], trained[0][0]);
    assert_eq!(sweep[0][1], trained[0][1]);
    assert_eq!(sweep[0][2], trained[0][5]);
    assert_eq!(sweep[0][3], trained[0][6]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_in(&tmp, "x.csv");
    let missing = alphaloss(&[
        "train", "--alpha", "2", "--lr", "1", "--mnist-dir", "/nonexistent/mnist", "--out",
        path_arg(&out),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());

    let data = fake_mnist();
    let diverged = alphaloss(&[
        "train", "--alpha", "1", "--lr", "1e308", "--epochs", "5", "--mnist-dir",
        path_arg(data.path()), "--out", path_arg(&out),
    ]);
    assert_eq!(diverged.status.code(), Some(2), "{diverged:?}");
    assert!(String::from_utf8_lossy(&diverged.stderr).contains("diverged"));

    assert_eq!(alphaloss(&["train", "--alpha", "0.5", "--lr", "1"]).status.code(), Some(1));
    assert_eq!(alphaloss(&["--help"]).status.code(), Some(0));
}
