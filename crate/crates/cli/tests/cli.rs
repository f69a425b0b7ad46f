use std::path::Path;
use std::process::{Command, Output};

use eikonal_core::field::{GridSpec, ScalarField};
use eikonal_core::io::{self, GrayImage};
use eikonal_core::plan::PathStatus;

fn eikonal(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eikonal"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("running eikonal")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> std::collections::BTreeMap<String, String> {
    io::parse_key_values(&std::fs::read_to_string(dir.join("report.txt")).unwrap()).unwrap()
}

fn write_field(path: &Path, f: &ScalarField) {
    io::save_field(path, f).unwrap();
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["solve", "--help"], &["--version"]] {
        let o = eikonal(args, dir.path());
        assert_eq!(code(&o), 0, "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["solve", "--fixture", "example1", "--backend", "bogus", "--out", "o"],
        &["solve", "--f", "missing.eikf", "--source", "0,0", "--out", "o"],
        &["solve", "--fixture", "example1", "--hbar", "-1", "--out", "o"],
        &["solve", "--fixture", "nope", "--out", "o"],
        &["plan", "--fixture", "open-room", "--start", "99,99", "--out", "o"],
    ];
    for args in cases {
        let o = eikonal(args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
        assert!(!dir.path().join("o").exists(), "{args:?} left output behind");
    }
    let o = eikonal(&["solve", "--f", "missing.eikf", "--source", "0,0", "--out", "o"], dir.path());
    assert!(stderr(&o).contains("--f"), "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = eikonal(
        &["solve", "--fixture", "example2", "--backend", "sparse", "--solver", "cg", "--max-iter", "1", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn compare_identical_and_mismatched() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::square(0.0, 1.0, 0.25).unwrap();
    let a = ScalarField::from_fn(grid, |x, y| 1.0 + x + y).unwrap();
    write_field(&dir.path().join("a.eikf"), &a);
    let other = ScalarField::constant(GridSpec::square(0.0, 1.0, 0.5).unwrap(), 1.0).unwrap();
    write_field(&dir.path().join("b.eikf"), &other);
    let o = eikonal(&["compare", "a.eikf", "a.eikf"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "0.000000 0.000000\n");
    let o = eikonal(&["compare", "a.eikf", "b.eikf"], dir.path());
    assert_eq!(code(&o), 1);
    let shifted = a.map(|v| v * 1.01).unwrap();
    write_field(&dir.path().join("c.eikf"), &shifted);
    let o = eikonal(&["compare", "c.eikf", "a.eikf"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let pe: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!((pe - 1.0).abs() < 1e-6, "{text}");
}

#[test]
fn solve_example1_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = eikonal(
        &["solve", "--backend", "perturb", "--hbar", "0.006", "--terms", "6", "--f", "example1", "--source", "0,0", "--csv", "--out", "p"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("p"));
    let pe: f64 = r["percent_error"].parse().unwrap();
    assert!(pe <= 2.5, "{pe}");
    for name in ["s_star.eikf", "s_star.csv", "report.txt", "manifest.txt"] {
        assert!(dir.path().join("p").join(name).exists(), "{name}");
    }
    let s = io::load_field(&dir.path().join("p/s_star.eikf")).unwrap();
    assert_eq!(s.grid().dims(), &[257, 257]);

    let o = eikonal(&["solve", "--backend", "sweep", "--sweeps", "15", "--f", "example1", "--out", "s"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pe: f64 = report(&dir.path().join("s"))["percent_error"].parse().unwrap();
    assert!((pe - 1.1).abs() < 0.1, "{pe}");
}

#[test]
fn solve_from_files_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::square(-1.0, 1.0, 1.0 / 32.0).unwrap();
    write_field(&dir.path().join("f.eikf"), &ScalarField::constant(grid.clone(), 1.0).unwrap());
    write_field(&dir.path().join("r.eikf"), &ScalarField::from_fn(grid, |x, y| x.hypot(y)).unwrap());
    let o = eikonal(
        &["solve", "--f", "f.eikf", "--source", "0,0", "--backend", "sweep", "--reference", "r.eikf", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("percent_error "));
    let pe: f64 = report(&dir.path().join("o"))["percent_error"].parse().unwrap();
    assert!(pe < 5.0, "{pe}");
    let small = GridSpec::square(0.0, 1.0, 0.5).unwrap();
    write_field(&dir.path().join("bad.eikf"), &ScalarField::constant(small, 1.0).unwrap());
    let o = eikonal(
        &["solve", "--f", "f.eikf", "--source", "0,0", "--reference", "bad.eikf", "--out", "x"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--reference"));
}

#[test]
fn plan_open_room_and_step_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = eikonal(&["plan", "--fixture", "open-room", "--out", "room"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = io::read_path_csv(&std::fs::read_to_string(dir.path().join("room/path_0.csv")).unwrap()).unwrap();
    assert_eq!(path.status, PathStatus::ReachedSource);
    // the path stops one cell short of the source
    let straight = 6.0 * 2f64.sqrt() - 1.0;
    assert!((path.length() - straight).abs() < 0.1 * straight, "{}", path.length());

    let o = eikonal(&["plan", "--fixture", "open-room", "--max-steps", "1", "--out", "short"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = report(&dir.path().join("short"));
    assert_eq!(r["path.0.status"], "max_steps");
}

#[test]
fn plan_from_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let n = 16;
    let mut pixels = vec![0u16; n * n];
    for r in 0..12 {
        for c in 7..10 {
            pixels[r * n + c] = 255;
        }
    }
    let mut buf = Vec::new();
    io::write_pgm_ascii(&mut buf, &GrayImage::new(n, n, 255, pixels).unwrap()).unwrap();
    std::fs::write(dir.path().join("maze.pgm"), buf).unwrap();
    let o = eikonal(
        &["plan", "--maze", "maze.pgm", "--source", "1,3", "--start", "1,12", "--hbar", "8", "--out", "m"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = io::read_path_csv(&std::fs::read_to_string(dir.path().join("m/path_0.csv")).unwrap()).unwrap();
    assert!(path.points.iter().any(|p| p[0] >= 11.5));
    let o = eikonal(&["plan", "--maze", "maze.pgm", "--start", "1,12", "--out", "m2"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn sfs_flat_image_and_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let mut buf = Vec::new();
    io::write_pgm(&mut buf, &GrayImage::new(21, 21, 255, vec![255; 441]).unwrap()).unwrap();
    std::fs::write(dir.path().join("flat.pgm"), buf).unwrap();
    let o = eikonal(&["sfs", "--image", "flat.pgm", "--seed", "10,10,0", "--out", "flat"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let h = io::load_field(&dir.path().join("flat/height.eikf")).unwrap();
    let worst = h.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // within ten hbar, where a unit-slope surface would reach 14 at the corners
    assert!(worst < 10.0, "{worst}");

    let o = eikonal(&["sfs", "--fixture", "cone", "--resolution", "51", "--out", "cone"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let improvement: f64 = report(&dir.path().join("cone"))["improvement"].parse().unwrap();
    assert!(improvement >= 5.0, "{improvement}");

    let o = eikonal(&["sfs", "--fixture", "cone", "--backend", "sweep", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1);
    let o = eikonal(&["sfs", "--image", "flat.pgm", "--out", "x"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(!dir.path().join("x").exists());
}

#[test]
fn replay_rejects_bad_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let o = eikonal(&["replay", "none.txt"], dir.path());
    assert_eq!(code(&o), 1);
    std::fs::write(dir.path().join("m.txt"), "command = solve\n").unwrap();
    let o = eikonal(&["replay", "m.txt"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn manifest_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = eikonal(&["--threads", "1", "solve", "--fixture", "example1", "--backend", "sweep", "--out", "o"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = io::parse_key_values(&std::fs::read_to_string(dir.path().join("o/manifest.txt")).unwrap()).unwrap();
    assert_eq!(m["command"], "solve");
    assert_eq!(m["param.backend"], "sweep");
    assert_eq!(m["param.sweeps"], "15");
    assert!(m.contains_key("time.total_ms"));
    let args: Vec<&str> = (0..m["args"].parse::<usize>().unwrap()).map(|i| m[&format!("arg.{i}")].as_str()).collect();
    assert!(!args.contains(&"--out") && !args.contains(&"--threads"));
}

#[test]
fn example3_compare_with_negative_sources() {
    let dir = tempfile::tempdir().unwrap();
    for (out, backend) in [("p", "perturb"), ("s", "sweep")] {
        let o = eikonal(&["solve", "--fixture", "example3", "--backend", backend, "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let o = eikonal(
        &[
            "compare",
            "p/s_star.eikf",
            "s/s_star.eikf",
            "--source",
            "0,0",
            "--source",
            "0.048828125,0.09765625",
            "--source",
            "-0.0244140625,-0.0732421875",
            "--source",
            "0.029296875,-0.0390625",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let v: Vec<f64> = text.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert!((v[0] - 4.5).abs() < 1.0, "{text}");
    assert!((v[1] - 0.0109).abs() < 0.002, "{text}");
}
