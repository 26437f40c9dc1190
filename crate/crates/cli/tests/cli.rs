use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rbf_pielm::assembly::read_dump;
use rbf_pielm::RunReport;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rbf-pielm"));
    cmd.env_remove("RBF_PIELM_THREADS");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small cavity setup that solves in well under a second.
fn small_cavity_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "preset = \"cavity\"\nnx = 12\nny = 12\nboundary_per_wall = 16\nn_units = 60\nfield_nx = 11\nfield_ny = 11\n",
    )
    .unwrap();
    path
}

fn report(dir: &Path) -> RunReport {
    RunReport::from_toml_str(&fs::read_to_string(dir.join("report.toml")).unwrap()).unwrap()
}

#[test]
fn solve_writes_report_and_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_cavity_config(tmp.path());
    let out = tmp.path().join("run");
    run_ok(
        bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "4"]),
    );

    let r = report(&out);
    assert_eq!(r.preset, "cavity");
    assert_eq!(r.seed, 4);
    assert_eq!(r.n_units, 60);
    assert_eq!(r.rows, 144 + 2 * 64);
    assert!(r.error.is_none());
    for name in ["u_centerline.csv", "v_centerline.csv", "field.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(!out.join("error_map.csv").exists());
    assert!(!out.join("matrix.rplm").exists());
    let field = fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("x,y,psi,u,v,speed\n"));
    assert_eq!(field.lines().count(), 1 + 11 * 11);
}

#[test]
fn manufactured_run_reports_error_and_map() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mms");
    run_ok(
        bin()
            .args([
                "solve",
                "--preset",
                "mms-custom",
                "--k1",
                "1",
                "--k2",
                "1",
                "--clamped",
            ])
            .args(["--grid", "14x14", "--n-units", "60"])
            .arg("--out")
            .arg(&out),
    );
    let r = report(&out);
    assert!(r.config.clamped);
    let e = r.error.expect("manufactured runs report an error");
    assert!(e.mean_abs < 1e-2, "{e:?}");
    let map = fs::read_to_string(out.join("error_map.csv")).unwrap();
    assert!(map.starts_with("x,y,abs_error\n"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_cavity_config(tmp.path());
    let out = tmp.path().join("o");
    run_ok(
        bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .args([
                "--no-pai",
                "--sigma0",
                "0.4",
                "--rcond",
                "1e-9",
                "--grid",
                "10x10",
                "--emit-matrix",
            ])
            .arg("--out")
            .arg(&out)
            .env("RBF_PIELM_THREADS", "1"),
    );
    let r = report(&out);
    assert!(!r.config.pai);
    assert_eq!(r.config.sigma0, 0.4);
    assert_eq!(r.config.rcond, 1e-9);
    assert_eq!((r.config.nx, r.config.n_units), (10, 60));
    assert_eq!(r.config.threads, 1);
    let (a, b) = read_dump(fs::File::open(out.join("matrix.rplm")).unwrap()).unwrap();
    assert_eq!(a.dim(), (r.rows, 60));
    assert_eq!(b.len(), r.rows);
}

#[test]
fn repeated_solves_give_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_cavity_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        run_ok(
            bin()
                .args(["solve", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(dir),
        );
    }
    let (ra, rb) = (report(&a).without_timing(), report(&b).without_timing());
    assert_eq!(ra.config_hash, rb.config_hash);
    assert_eq!(ra.solve, rb.solve);
    assert_eq!(
        (ra.seed, ra.rows, ra.n_units),
        (rb.seed, rb.rows, rb.n_units)
    );
}

#[test]
fn malformed_config_exits_2_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\nn_units = \"many\"\n").unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("line 2, column 11"),
        "{}",
        stderr(&out)
    );

    fs::write(&cfg, "colour = 3\n").unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn invalid_values_exit_2() {
    for args in [
        &["solve", "--preset", "square"][..],
        &["solve", "--grid", "12by12"],
        &["solve", "--rcond", "2"],
        &["solve", "--n-units", "0"],
        &["sweep", "--axis1", "width=1,2"],
        &["sweep", "--axis1", "sigma0=0.5,0.2"],
    ] {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn underdetermined_solve_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--grid", "6x6", "--n-units", "4000"])
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(
        msg.contains("[assembly]") && msg.contains("underdetermined"),
        "{msg}"
    );
}

#[test]
fn single_cell_sweep_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_cavity_config(tmp.path());
    let solve_dir = tmp.path().join("solve");
    run_ok(
        bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .args(["--seed", "2"])
            .arg("--out")
            .arg(&solve_dir),
    );
    let sweep_dir = tmp.path().join("sweep");
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--axis1", "sigma0=0.3", "--seeds", "2"])
            .arg("--out")
            .arg(&sweep_dir),
    );
    let csv = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("axis1,axis2,mean_residual,std_residual,mean_time_s,status")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.3");
    assert_eq!(row[1], "");
    assert_eq!(row[5], "ok");
    let swept: f64 = row[2].parse().unwrap();
    assert_eq!(swept, report(&solve_dir).solve.residual_mean_abs);
}

#[test]
fn default_sweep_grid_has_100_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tiny.toml");
    fs::write(
        &cfg,
        "nx = 6\nny = 6\nboundary_per_wall = 8\nn_units = 20\n",
    )
    .unwrap();
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--seeds", "0"])
            .arg("--out")
            .arg(tmp.path()),
    );
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(!tmp.path().join("sweep.tmp").exists());
}

#[test]
fn sweep_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_cavity_config(tmp.path());
    let spec = tmp.path().join("sweep.toml");
    fs::write(
        &spec,
        "seeds = [0, 1]\n[axis1]\nname = \"n_units\"\nvalues = [20, 40]\n[axis2]\nname = \"sigmac\"\nvalues = [0.5, 0.93]\n",
    )
    .unwrap();
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--spec")
            .arg(&spec)
            .arg("--out")
            .arg(tmp.path()),
    );
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let firsts: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(firsts, ["20", "20", "40", "40"]);

    fs::write(&spec, "[axis1]\nname = \"n_units\"\nvalues = 3\n").unwrap();
    let out = bin().args(["sweep", "--spec"]).arg(&spec).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}
