use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use regretnet::csvio::read_heatmap;
use regretnet::lpfile::read_lp;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regretnet")).args(args).output().expect("spawn regretnet")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const TINY: &[&str] = &[
    "--setting", "I", "--epochs", "1", "--train-size", "256", "--test-size", "200", "--eval-restarts", "2",
    "--eval-steps", "5", "--eval-profiles", "10", "--misreport-steps", "3",
];

fn tiny_train(dir: &Path, seed: &str) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["train", "--out", out, "--seed", seed];
    args.extend_from_slice(TINY);
    ok(&args);
}

fn heatmap_cells(dir: &Path, ckpt: &Path, grid: usize) -> Vec<Vec<Vec<f64>>> {
    let g = grid.to_string();
    ok(&["heatmap", "--checkpoint", ckpt.to_str().unwrap(), "--grid", &g, "--out", dir.to_str().unwrap()]);
    (0..2)
        .map(|item| {
            let (xs, ys, cells) = read_heatmap(&dir.join(format!("heatmap_item{item}.csv"))).unwrap();
            assert_eq!((xs.len(), ys.len()), (grid, grid));
            assert!(cells.iter().all(|r| r.len() == grid));
            cells
        })
        .collect()
}

fn desk_run() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        ok(&["train", "--setting", "I", "--desk-scale", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
        dir
    })
    .path()
}

#[test]
fn desk_training_on_setting_one() {
    let dir = desk_run();
    for f in ["model.ckpt", "history.json", "metrics.json", "metrics.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let m = json(&dir.join("metrics.json"));
    assert_eq!(m["scale"], "desk");
    assert_eq!(m["train_config"]["train_size"], 5000);
    let regret = m["regret_mean"].as_f64().unwrap();
    assert!(regret < 0.005, "regret {regret}");
}

#[test]
fn desk_heatmap_has_plateaus() {
    let dir = desk_run();
    let maps = tempfile::tempdir().unwrap();
    let grids = heatmap_cells(maps.path(), &dir.join("model.ckpt"), 201);
    let cells: Vec<f64> = grids.iter().flatten().flatten().copied().collect();
    assert!(cells.iter().all(|&p| (0.0..=1.0).contains(&p)));
    let plateau = cells.iter().filter(|&&p| p <= 0.1 || p >= 0.9).count() as f64 / cells.len() as f64;
    assert!(plateau > 0.8, "plateau fraction {plateau}");
}

#[test]
fn same_seed_gives_identical_checkpoints() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    tiny_train(a.path(), "3");
    tiny_train(b.path(), "3");
    tiny_train(c.path(), "4");
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("model.ckpt")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn heatmap_of_untrained_model_is_a_probability_grid() {
    let dir = tempfile::tempdir().unwrap();
    tiny_train(dir.path(), "1");
    let grids = heatmap_cells(dir.path(), &dir.path().join("model.ckpt"), 201);
    assert!(grids.iter().flatten().flatten().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn menu_heatmap_is_piecewise_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let entries = 20;
    let e = entries.to_string();
    ok(&[
        "train", "--setting", "I", "--model", "rochetnet", "--menu-entries", &e, "--train-size", "2000", "--epochs", "1",
        "--test-size", "200", "--out", out,
    ]);
    let menu = fs::read_to_string(dir.path().join("menu.csv")).unwrap();
    assert_eq!(menu.lines().count(), entries + 1);
    for grid in heatmap_cells(dir.path(), &dir.path().join("model.ckpt"), 101) {
        let distinct: BTreeSet<i64> = grid.iter().flatten().map(|&p| (p * 1e9).round() as i64).collect();
        assert!(distinct.len() <= entries + 1, "{} distinct values", distinct.len());
    }
}

#[test]
fn baseline_setting_nine() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["baseline", "--setting", "IX", "--out", dir.path().to_str().unwrap()]);
    let b = json(&dir.path().join("baseline.json"));
    let item = b["extra"]["itemwise_myerson"].as_f64().unwrap();
    let bundle = b["extra"]["bundled_myerson"].as_f64().unwrap();
    assert!((item - 2.495).abs() < 0.01, "{item}");
    assert!((bundle - 3.457).abs() < 0.02, "{bundle}");
}

#[test]
fn lp_stats_only() {
    let out = ok(&["lpexport", "-n", "2", "-m", "3", "-D", "5", "--stats-only"]);
    let stats: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["variables"], 125_000);
    assert_eq!(stats["ic_ir"], 3_906_250);
}

#[test]
fn lp_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.lp");
    ok(&["lpexport", "-n", "2", "-m", "1", "-D", "3", "--out", path.to_str().unwrap()]);
    let text = fs::read_to_string(&path).unwrap();
    let lp = read_lp(text.as_bytes()).unwrap();
    let stats = json(&regretnet::checkpoint::sidecar_path(&path));
    assert_eq!(lp.constraints.len() as u64, stats["constraints"].as_u64().unwrap());
    assert_eq!(lp.bounds.len() as u64, stats["variables"].as_u64().unwrap());
    assert!(lp.maximize);
}

#[test]
fn posted_price_is_truthful() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "evaluate", "--setting", "I", "--posted-price", "0.5", "--test-size", "500", "--eval-restarts", "5",
        "--eval-steps", "50", "--eval-profiles", "50", "--out", dir.path().to_str().unwrap(),
    ]);
    let m = json(&dir.path().join("metrics.json"));
    assert!(m["regret_mean"].as_f64().unwrap() < 1e-6);
    assert!(m["extra"]["grid_regret"].as_f64().unwrap() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let widths: Vec<usize> = csv.lines().map(|l| l.split(',').count()).collect();
    assert_eq!(widths.len(), 2);
    assert_eq!(widths[0], widths[1]);
}

#[test]
fn sample_profiles_are_rectangular_and_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&["sample", "--setting", "V", "--count", "50", "--seed", "2", "--out", d.path().to_str().unwrap()]);
    }
    let text = fs::read_to_string(a.path().join("profiles.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(b.path().join("profiles.csv")).unwrap());
    let widths: BTreeSet<usize> = text.lines().map(|l| l.split(',').count()).collect();
    assert_eq!(widths.len(), 1);
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["train", "--setting", "XIV", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["evaluate", "--setting", "I", "--out", out]).status.code(), Some(2));
    let missing = dir.path().join("nope.ckpt");
    assert_eq!(run(&["heatmap", "--checkpoint", missing.to_str().unwrap()]).status.code(), Some(4));
    let mut args = vec!["train", "--out", out, "--learning-rate", "1e307"];
    args.extend_from_slice(TINY);
    assert_eq!(run(&args).status.code(), Some(3));
    let good = tempfile::tempdir().unwrap();
    tiny_train(good.path(), "0");
}
