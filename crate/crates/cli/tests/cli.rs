use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn desboves(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_desboves")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = desboves(&["render", "--lambda", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parameter must be nonzero"));
    let o = desboves(&["continuity", "--lambda", "0+0i", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["render", "--lambda", "2", "--resolution", "1"][..],
        &["render", "--lambda", "2", "--chart", "w"],
        &["sweep", "--rect", "1,2,0,1", "--step", "0.5"],
        &["sweep", "--rect", "1,2,0", "--step", "0.5", "--seed", "1"],
        &["misiurewicz", "--max-depth", "40"],
    ] {
        assert_eq!(desboves(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn render_is_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["render", "--lambda", "2", "--chart", "z", "--resolution", "96"];
    assert!(desboves(&[&args[..], &["--threads", "1"]].concat(), a.path()).status.success());
    assert!(desboves(&[&args[..], &["--threads", "3"]].concat(), b.path()).status.success());
    for f in ["render.pgm", "render.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn y_slice_is_a_constant_image() {
    let dir = tempfile::tempdir().unwrap();
    assert!(desboves(&["render", "--lambda=-0.7+1.3i", "--chart", "y", "--resolution", "64"], dir.path()).status.success());
    let pgm = fs::read(dir.path().join("render.pgm")).unwrap();
    let header = b"P5\n64 64\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert!(pgm[header.len()..].iter().all(|&p| p == 255));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("render.cfg");
    fs::write(&cfg, "# slice\nlambda = 0.5\nchart = x\nresolution = 32\nseed = 5\n").unwrap();
    let o = desboves(&["render", "--config", cfg.to_str().unwrap(), "--resolution", "16"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let side = fs::read_to_string(dir.path().join("render.txt")).unwrap();
    assert!(side.contains("resolution=16") && side.contains("lambda=0.5,0") && side.contains("seed=5"), "{side}");
    fs::write(&cfg, "lambda = 0.5\nstep = 3\n").unwrap();
    assert_eq!(desboves(&["render", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn resumed_sweep_matches_uninterrupted_sweep() {
    let whole = tempfile::tempdir().unwrap();
    let parts = tempfile::tempdir().unwrap();
    let args = ["sweep", "--rect=1.5,2.5,-0.5,0.5", "--step", "0.25", "--samples", "400", "--depth", "20", "--seed", "9", "--heatmap"];
    assert!(desboves(&args, whole.path()).status.success());

    let o = desboves(&[&args[..], &["--stop-after-rows", "2"]].concat(), parts.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(parts.path().join("sweep.checkpoint.json").exists());
    assert!(!parts.path().join("sweep.csv").exists());
    let o = desboves(&args, parts.path());
    assert!(stderr(&o).contains("resuming after 2 of 5 rows"), "{}", stderr(&o));
    assert!(!parts.path().join("sweep.checkpoint.json").exists());
    for f in ["sweep.csv", "manifest.json", "laplacian.pgm"] {
        assert_eq!(fs::read(whole.path().join(f)).unwrap(), fs::read(parts.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn checkpoint_of_another_sweep_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--rect=1.5,2.5,-0.5,0.5", "--step", "0.25", "--samples", "64", "--depth", "10", "--seed", "1"];
    assert!(desboves(&[&args[..], &["--stop-after-rows", "1"]].concat(), dir.path()).status.success());
    let other = ["sweep", "--rect=1.5,2.5,-0.5,0.5", "--step", "0.25", "--samples", "64", "--depth", "10", "--seed", "2"];
    assert_eq!(desboves(&other, dir.path()).status.code(), Some(2));
}

#[test]
fn misiurewicz_depth_one_lists_lambda_three() {
    let dir = tempfile::tempdir().unwrap();
    assert!(desboves(&["misiurewicz", "--target", "x0", "--max-depth", "1"], dir.path()).status.success());
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("misiurewicz.json")).unwrap()).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert!(reports.iter().any(|r| {
        let l = &r["candidate"]["lambda"];
        (l[0].as_f64().unwrap() - 3.0).abs() < 1e-9 && l[1].as_f64().unwrap().abs() < 1e-9 && r["failed"].as_array().unwrap().is_empty()
    }));
}

#[test]
fn misiurewicz_probe_reports_misses() {
    let dir = tempfile::tempdir().unwrap();
    let o = desboves(&["misiurewicz", "--lambda", "3.01", "--radius", "0.05", "--max-depth", "2"], dir.path());
    assert!(o.status.success());
    let o = desboves(&["misiurewicz", "--lambda", "3.01", "--radius", "1e-6", "--max-depth", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no verified candidate"));
}

#[test]
fn continuity_writes_a_dyadic_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let o = desboves(&["continuity", "--lambda", "2", "--samples", "200", "--depth", "12", "--seed", "3"], dir.path());
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("continuity.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,d_H");
    let deltas: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(deltas, vec![0.2, 0.1, 0.05, 0.025]);
    let side = fs::read_to_string(dir.path().join("continuity.txt")).unwrap();
    assert!(side.contains("seed=3") && side.contains("noise_floor="));
    let verdict_pass = side.contains("trend=pass");
    assert_eq!(verdict_pass, o.status.success());
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_desboves")).arg("selftest").current_dir(dir.path()).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 10);
    assert!(!text.contains("FAIL"));
}
