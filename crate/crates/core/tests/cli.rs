use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nil3_dual::io::{read_obj, Sidecar};
use serde_json::Value;

fn nil3(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nil3")).args(args).env("NIL3_OUT", out).output().expect("binary runs")
}

fn run_dir(out: &Path, prefix: &str) -> PathBuf {
    fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .expect("run directory exists")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_closed_form_paraboloid() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nil3(tmp.path(), &["generate", "--example", "paraboloid", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(tmp.path(), "paraboloid-");
    let (v, f) = read_obj(&dir.join("f-minus-0.obj")).unwrap();
    assert_eq!(v.len(), 41 * 41);
    assert_eq!(f.len(), 2 * 40 * 40);
    // vertex k = i*nx + j against (−x, −sinh y, (x/2) sinh y), up to one translation
    let closed = |i: usize, j: usize| {
        let (x, y) = (-1.0 + j as f64 / 20.0, -1.0 + i as f64 / 20.0);
        [-x, -y.sinh(), 0.5 * x * y.sinh()]
    };
    let base = v[20 * 41 + 20];
    for i in 0..41 {
        for j in 0..41 {
            let p = v[i * 41 + j];
            let c = closed(i, j);
            // left translation by the inverse of the base point
            let t = [p[0] - base[0], p[1] - base[1], p[2] - base[2] + 0.5 * (-base[0] * p[1] + p[0] * base[1])];
            for k in 0..3 {
                assert!((t[k] - c[k]).abs() < 1e-6, "node ({i},{j}) coord {k}: {} vs {}", t[k], c[k]);
            }
        }
    }
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(dir.join("f-minus-0.json")).unwrap()).unwrap();
    assert_eq!(side.schema, 1);
    assert_eq!(side.config_hash.len(), 64);
    assert!(side.masked.is_empty());
    assert!(side.residuals["conformality"] < 1e-6);
    for name in ["fields.csv", "frames.json", "potential.json", "config.json", "f-minus-0.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    assert_eq!(json(&dir.join("config.json"))["schema"], 1);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["generate", "--example", "paraboloid", "--lambda", "1,60deg", "--grid", "-1,1,-1,1,21,21"];
    assert_eq!(nil3(a.path(), &args).status.code(), Some(0));
    assert_eq!(nil3(b.path(), &args).status.code(), Some(0));
    let da = run_dir(a.path(), "paraboloid-");
    let db = run_dir(b.path(), "paraboloid-");
    assert_eq!(da.file_name(), db.file_name());
    let mut names: Vec<_> = fs::read_dir(&da).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(fs::read(da.join(&n)).unwrap(), fs::read(db.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn dual_and_export_reuse_the_frame_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--example", "paraboloid", "--grid", "-1,1,-1,1,21,21"];
    let with = |cmd: &str, extra: &[&str]| {
        let mut v = vec![cmd];
        v.extend_from_slice(&args);
        v.extend_from_slice(extra);
        nil3(tmp.path(), &v)
    };
    assert_eq!(with("generate", &[]).status.code(), Some(0));
    let dir = run_dir(tmp.path(), "paraboloid-");
    let cache = fs::read(dir.join("frames.json")).unwrap();

    let o = with("dual", &["--allow-reflection"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(dir.join("frames.json")).unwrap(), cache);
    let rep = json(&dir.join("dual.json"));
    assert_eq!(rep["schema"], 1);
    let fit = &rep["entries"][0]["congruence"];
    assert_eq!(fit["equivalent"], true);
    assert_eq!(fit["reflected"], true);
    assert!(fit["residual"].as_f64().unwrap() < 1e-6);
    for name in ["f-plus-0.obj", "f-plus-0.json", "invariants-0.csv", "dual-spinors-0.csv", "dual-spinor-0.obj"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let o = with("dual", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.join("dual.json"))["entries"][0]["congruence"]["equivalent"], false);

    fs::remove_file(dir.join("f-minus-0.obj")).unwrap();
    assert_eq!(with("export", &[]).status.code(), Some(0));
    assert!(dir.join("f-minus-0.obj").exists());
    assert!(dir.join("f-plus-0.obj").exists());
}

#[test]
fn smyth_sidecar_records_the_excluded_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nil3(tmp.path(), &["generate", "--example", "smyth-1", "--grid", "-0.5,0.5,-0.5,0.5,41,41"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(tmp.path(), "smyth-1-");
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(dir.join("f-minus-0.json")).unwrap()).unwrap();
    assert_eq!(side.exclusion_radius, 0.05);
    assert!(side.masked.contains(&(20, 20)));
    assert_eq!(side.mask_reasons["exclusion-disk"], side.masked.len());
    let (_, faces) = read_obj(&dir.join("f-minus-0.obj")).unwrap();
    assert!(faces.len() < 2 * 40 * 40);
    assert!(faces.iter().all(|f| !f.contains(&(20 * 41 + 20 + 1))));
}

#[test]
fn verify_exit_code_follows_the_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nil3(tmp.path(), &["verify", "--example", "paraboloid", "--grid", "-1,1,-1,1,41,41"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("conformality") && !text.contains("FAIL"));
    let dir = run_dir(tmp.path(), "paraboloid-");
    let rep = json(&dir.join("report.json"));
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["entries"].as_array().unwrap().len(), 21);

    let o = nil3(tmp.path(), &["verify", "--example", "paraboloid", "--tol", "su11=1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn sweep_writes_pairs_and_lambda_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nil3(tmp.path(), &["sweep", "--example", "paraboloid", "--lambda", "1,60deg,i"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let dir = run_dir(tmp.path(), "paraboloid-");
    for n in 0..3 {
        assert!(dir.join(format!("f-minus-{n}.obj")).exists());
        assert!(dir.join(format!("f-plus-{n}.obj")).exists());
    }
    let rep = json(&dir.join("sweep.json"));
    assert_eq!(rep["entries"].as_array().unwrap().len(), 4);
    for d in rep["potential_drift"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 8] = [
        &["generate", "--example", "paraboloid", "--lambda", ""],
        &["sweep", "--example", "paraboloid", "--lambda", "1"],
        &["generate", "--example", "paraboloid", "--lambda", "2"],
        &["generate", "--example", "paraboloid", "--grid", "1,-1,-1,1,41,41"],
        &["verify", "--example", "paraboloid", "--tol", "nonsense=1"],
        &["generate", "--example", "smyth-0"],
        &["export", "--example", "paraboloid"],
        &["generate"],
    ];
    for args in cases {
        let o = nil3(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn output_flag_overrides_environment() {
    let env = tempfile::tempdir().unwrap();
    let flag = tempfile::tempdir().unwrap();
    let o = nil3(
        env.path(),
        &["generate", "--example", "paraboloid", "--grid", "-1,1,-1,1,9,9", "--out", flag.path().to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_dir(env.path()).unwrap().next().is_none());
    run_dir(flag.path(), "paraboloid-");
}

#[test]
fn spinor_input_generates_and_dualizes() {
    let tmp = tempfile::tempdir().unwrap();
    // paraboloid spinors ψ = (cosh(y/2), sinh(y/2))/√2 on a 21x21 grid
    let mut csv = String::from("i,j,psi1_re,psi1_im,psi2_re,psi2_im\n");
    for i in 0..21 {
        let y = -1.0 + i as f64 / 10.0;
        let (a, b) = ((y / 2.0).cosh() / 2f64.sqrt(), (y / 2.0).sinh() / 2f64.sqrt());
        for j in 0..21 {
            csv.push_str(&format!("{i},{j},{a:.17e},0,{b:.17e},0\n"));
        }
    }
    let path = tmp.path().join("parab.csv");
    fs::write(&path, csv).unwrap();
    let p = path.to_str().unwrap();
    let grid = "-1,1,-1,1,21,21";
    let o = nil3(tmp.path(), &["generate", "--spinors", p, "--grid", grid]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = nil3(tmp.path(), &["dual", "--spinors", p, "--grid", grid]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(tmp.path(), "parab-");
    assert!(dir.join("spinor-surface.obj").exists());
    assert!(dir.join("dual-spinor.obj").exists());
    let rep = json(&dir.join("dual.json"));
    assert!(rep["entries"][0]["local"]["eu"].as_f64().unwrap() < 1e-10);
    let o = nil3(tmp.path(), &["dual", "--spinors", p]);
    assert_eq!(o.status.code(), Some(2));
}
