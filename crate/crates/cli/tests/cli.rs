use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_histocnn"));
    c.env_remove("ACNN_SEED").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth(dir: &Path, per_class: usize, seed: &str) -> Output {
    run(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--images-per-class",
        &per_class.to_string(),
        "--width",
        "320",
        "--height",
        "320",
        "--seed",
        seed,
    ])
}

fn pngs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for class in ["normal", "hp", "ta_lg", "ca"] {
        let mut names: Vec<_> = fs::read_dir(dir.join(class)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
    files
}

#[test]
fn synth_writes_expected_count_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth(a.path(), 3, "11")), 0);
    assert_eq!(code(&synth(b.path(), 3, "11")), 0);
    let (fa, fb) = (pngs(a.path()), pngs(b.path()));
    assert_eq!(fa.len(), 12);
    assert_eq!(fa, fb);
    assert!(a.path().join("patients.csv").exists());
}

#[test]
fn seed_falls_back_to_environment() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = |d: &Path| d.to_str().unwrap().to_string();
    let base = ["synth", "--images-per-class", "1", "--width", "300", "--height", "300", "--out"];
    let o = bin().args(base).arg(out(a.path())).env("ACNN_SEED", "5").output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("seed 5"));
    let o = bin().args(base).arg(out(b.path())).args(["--seed", "5"]).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(pngs(a.path()), pngs(b.path()));
    let o = bin().args(base).arg(out(b.path())).env("ACNN_SEED", "five").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_images_per_class_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = synth(d.path(), 0, "1");
    assert_ne!(code(&o), 0);
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_str().unwrap();
    assert_eq!(code(&run(&["run", "--data", p, "--out", p, "--method", "svm", "--kernel", "sigmoid"])), 2);
    assert_eq!(code(&run(&["run", "--data", p, "--out", p, "--folds", "1"])), 2);
    assert_eq!(code(&run(&["run", "--data", p, "--out", p, "--method", "svm", "--feature", "sift"])), 2);
    assert_eq!(code(&run(&["run", "--out", p])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);

    let cfg = d.path().join("bad.conf");
    fs::write(&cfg, "method = acnn\nlerning-rate = 0.1\n").unwrap();
    assert_eq!(code(&run(&["run", "--config", cfg.to_str().unwrap(), "--data", p, "--out", p])), 2);
}

#[test]
fn data_errors_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_str().unwrap();
    let o = run(&["run", "--data", p, "--out", p, "--method", "svm", "--feature", "lbp", "--kernel", "linear", "--no-grid"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let missing = d.path().join("missing");
    assert_eq!(code(&run(&["features", "--data", missing.to_str().unwrap(), "--descriptor", "lbp"])), 3);
}

#[test]
fn gradcheck_passes_and_catches_perturbation() {
    let o = run(&["gradcheck", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = run(&["gradcheck", "--seed", "3", "--perturb", "1e-3"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn features_emit_one_row_per_patch() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth(d.path(), 1, "2")), 0);
    for (desc, width) in [("lbp", 256), ("urlbp", 10), ("haralick", 4), ("rlbp+haralick", 40)] {
        let o = run(&["features", "--data", d.path().to_str().unwrap(), "--descriptor", desc]);
        assert_eq!(code(&o), 0, "{desc}");
        let text = stdout(&o);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 * 20, "{desc}");
        assert!(lines.iter().all(|l| l.split(',').count() == 4 + width), "{desc}");
    }
}

#[test]
fn vote_demo_picks_mean_argmax() {
    let o = run(&["vote-demo", "0.6,0.4,0,0", "0.1,0.8,0,0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("image label: hp (class 1)"));
    assert_eq!(code(&run(&["vote-demo", "1,2,3"])), 2);
}

#[test]
fn small_runs_write_reports() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&synth(data.path(), 2, "4")), 0);
    let dp = data.path().to_str().unwrap();

    let svm_out = out.path().join("svm");
    let o = run(&[
        "run", "--data", dp, "--out", svm_out.to_str().unwrap(), "--method", "svm", "--feature", "urlbp", "--kernel", "linear",
        "--no-grid", "--c", "4", "--folds", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(svm_out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["images"], 8);
    assert_eq!(report["folds"].as_array().unwrap().len(), 2);
    assert_eq!(report["method"], "svm-urlbp-linear");
    let csv = fs::read_to_string(svm_out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("method,config,folds,images,identification_acc"));
    assert!(svm_out.join("models/fold1.asvm").exists());

    let cfg = out.path().join("acnn.conf");
    fs::write(&cfg, "# tiny network\nmethod = acnn\ncnn-layers = 2,2,2\nmlp-layers = 4\nmax-iterations = 2\nfolds = 2\n").unwrap();
    let acnn_out = out.path().join("acnn");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--data", dp, "--out", acnn_out.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(acnn_out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["config"]["training"]["max_iterations"], 2);
    let total: u64 = report["confusion4"]["counts"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 8);
    assert!(acnn_out.join("models/fold2.acnn").exists());
}
