use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fmpd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmpd"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FMPD_CATALOG_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|c| c.parse().ok()).collect())
            .collect();
        Table { header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().filter_map(|r| r[i]).collect()
    }
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn config(space: &str, closure: Value, x: &[f64], dir: &[f64], tau_end: f64, stem: &str) -> Value {
    json!({
        "schema_version": 1,
        "space": { "name": space },
        "closure": closure,
        "initial": { "x": x, "direction": dir },
        "integrator": { "tau_end": tau_end, "rel_tol": 1e-10, "abs_tol": 1e-13 },
        "output": { "dir": ".", "stem": stem },
    })
}

fn run_ok(dir: &Path, name: &str, cfg: &Value) -> (Table, Table) {
    let path = write_config(dir, name, cfg);
    let out = fmpd(&["run", path.to_str().unwrap()], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (
        Table::read(&dir.join(format!("{name}.trajectory.csv"))),
        Table::read(&dir.join(format!("{name}.monitors.csv"))),
    )
}

/// Points of every `<polyline>` in an SVG.
fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
            pts.split(' ')
                .map(|p| {
                    let (a, b) = p.split_once(',').unwrap();
                    (a.parse().unwrap(), b.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn flat_geodesic_is_a_straight_line_with_constant_monitors() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("euclidean-3", json!({"kind": "geodesic"}), &[0.5, 0.0, -1.0], &[1.0, 2.0, 2.0], 5.0, "flat");
    let (traj, mon) = run_ok(tmp.path(), "flat", &cfg);
    assert_eq!(traj.header.len(), 1 + 3 + 3 + 3);
    assert_eq!(traj.header, ["tau", "x0", "x1", "x2", "p0", "p1", "p2", "s01", "s02", "s12"]);
    let tau = traj.col("tau");
    for (k, want) in [(0, 0.5), (1, 0.0), (2, -1.0)] {
        let d = [1.0, 2.0, 2.0][k];
        let x = traj.col(&format!("x{k}"));
        for (t, x) in tau.iter().zip(&x) {
            assert!((x - (want + d * t)).abs() <= 1e-12, "x{k}({t}) = {x}");
        }
    }
    assert_eq!(mon.header.len(), 1 + 6 + 6, "{:?}", mon.header);
    for name in &mon.header[1..] {
        assert!(spread(&mon.col(name)) <= 1e-14, "{name}");
    }
}

#[test]
fn spinoptics_ray_in_flat_space_follows_the_geodesic() {
    let tmp = TempDir::new().unwrap();
    let spin = config(
        "euclidean-3",
        json!({"kind": "spinoptics3d", "p": 3.0, "s": 0.2, "helicity": 1.0}),
        &[0.0; 3],
        &[1.0, 2.0, 2.0],
        4.0,
        "spin",
    );
    let geo = config("euclidean-3", json!({"kind": "geodesic"}), &[0.0; 3], &[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], 4.0, "geo");
    let (ray, _) = run_ok(tmp.path(), "spin", &spin);
    let (line, _) = run_ok(tmp.path(), "geo", &geo);
    // Both are parametrized by arc length along the unit direction l.
    let l = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    for t in [&ray, &line] {
        for (i, tau) in t.col("tau").iter().enumerate() {
            for (k, lk) in l.iter().enumerate() {
                let x = t.col(&format!("x{k}"))[i];
                assert!((x - tau * lk).abs() <= 1e-12);
            }
        }
    }
    let last = |t: &Table, k: usize| *t.col(&format!("x{k}")).last().unwrap();
    for k in 0..3 {
        assert!((last(&ray, k) - last(&line, k)).abs() <= 1e-12);
    }
}

#[test]
fn massive_orbit_conserves_energy() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = config(
        "schwarzschild-weak",
        json!({"kind": "massive4d", "m": 1.0, "s": 0.5, "j": [0.0, 0.0, 0.0, 1.0]}),
        &[0.0, 10.0, 0.0, 0.0],
        &[1.0, 0.0, 0.1f64.sqrt(), 0.0],
        20.0,
        "orbit",
    );
    cfg["integrator"]["max_step"] = json!(5.0);
    let (traj, mon) = run_ok(tmp.path(), "orbit", &cfg);
    assert_eq!(traj.header.len(), 1 + 4 + 4 + 6);
    let psi = mon.col("psi:time-translation");
    assert!(psi.len() > 10);
    assert!(spread(&psi) <= 1e-6, "Ψ drift {}", spread(&psi));
    assert!(spread(&mon.col("pp")) <= 1e-9);
    assert!(mon.header.iter().any(|h| h == "r_s_s"));
}

#[test]
fn manifest_reruns_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        "randers-axisym3",
        json!({"kind": "spinoptics3d", "p": 1.0, "s": 0.1, "helicity": -1.0}),
        &[0.4, -0.2, 0.0],
        &[0.3, 0.5, 1.0],
        2.0,
        "ray",
    );
    run_ok(tmp.path(), "ray", &cfg);
    let manifest_path = tmp.path().join("ray.manifest.json");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["termination"]["status"], "completed");
    assert_eq!(manifest["versions"]["fmpd"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["space"]["name"], "randers-axisym3");

    let again = tmp.path().join("again");
    let out = fmpd(&["run", manifest_path.to_str().unwrap(), "--out-dir", again.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["ray.trajectory.csv", "ray.monitors.csv"] {
        let a = std::fs::read(tmp.path().join(f)).unwrap();
        let b = std::fs::read(again.join(f)).unwrap();
        assert!(a == b, "{f} differs on rerun");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let good = config("euclidean-2", json!({"kind": "geodesic"}), &[0.0, 0.0], &[1.0, 0.0], 1.0, "g");
    let mut cases = Vec::new();
    let mut v = good.clone();
    v["schema_version"] = json!(2);
    cases.push(v);
    let mut v = good.clone();
    v["initial"]["speed"] = json!(1.0);
    cases.push(v);
    let mut v = good.clone();
    v["initial"]["x"] = json!([0.0, 0.0, 0.0]);
    cases.push(v);
    let mut v = good.clone();
    v["space"]["name"] = json!("no-such-space");
    cases.push(v);
    let mut v = good.clone();
    v["closure"] = json!({"kind": "spinoptics3d", "p": 1.0, "s": 0.1, "helicity": 1.0});
    cases.push(v);
    let mut v = good.clone();
    v["integrator"]["rel_tol"] = json!(-1.0);
    cases.push(v);
    for (i, case) in cases.iter().enumerate() {
        let path = write_config(tmp.path(), &format!("bad{i}"), case);
        let out = fmpd(&["run", path.to_str().unwrap()], tmp.path());
        assert_eq!(code(&out), 2, "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(code(&fmpd(&["run", "broken.json"], tmp.path())), 2);
}

#[test]
fn singular_closure_exits_3() {
    // Flat spacetime has R(S)(S) = 0, where the exact massless closure divides.
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        "minkowski-4",
        json!({"kind": "massless4d_exact", "s": 1.0, "helicity": 1.0, "observer": "static"}),
        &[0.0; 4],
        &[0.3, 0.4, 1.0],
        1.0,
        "null",
    );
    let path = write_config(tmp.path(), "null", &cfg);
    let out = fmpd(&["run", path.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn step_underflow_exits_4_and_keeps_the_partial_record() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = config("sphere", json!({"kind": "geodesic"}), &[1.0, 0.0], &[0.3, 1.0], 10.0, "stiff");
    cfg["integrator"] = json!({
        "tau_end": 10.0, "rel_tol": 1e-12, "abs_tol": 1e-15,
        "min_step": 0.5, "max_step": 1.0, "initial_step": 1.0,
    });
    let path = write_config(tmp.path(), "stiff", &cfg);
    let out = fmpd(&["run", path.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("stiff.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["termination"]["status"], "stiffness");
    assert!(!Table::read(&tmp.path().join("stiff.trajectory.csv")).rows.is_empty());
}

#[test]
fn verify_flat_space_reports_roundoff_level_identities() {
    let tmp = TempDir::new().unwrap();
    let out = fmpd(&["verify", "euclidean-2", "--seed", "3", "--points", "10", "-o", "flat.csv"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("first Bianchi") && report.contains("antisymmetry defect"));
    let mut r = csv::Reader::from_path(tmp.path().join("flat.csv")).unwrap();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[4], "true");
        // The stencil oracle carries double-double round-off amplified by h⁻⁵.
        if !rec[0].starts_with("jet vs stencil") {
            assert!(rec[1].parse::<f64>().unwrap() <= 1e-12, "{}: {}", &rec[0], &rec[1]);
        }
        rows += 1;
    }
    assert!(rows >= 10);
}

#[test]
fn verify_randers_passes_and_rejects_a_corrupt_one_form() {
    let tmp = TempDir::new().unwrap();
    let ok = fmpd(&["verify", "randers-const", "--points", "8"], tmp.path());
    assert_eq!(code(&ok), 0);
    assert!(tmp.path().join("randers-const.verify.csv").is_file());
    let bad = fmpd(&["verify", "randers-const", "--param", "b1=1.2"], tmp.path());
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("construction"));
    assert_eq!(code(&fmpd(&["verify", "no-such-space"], tmp.path())), 2);
}

#[test]
fn catalog_directory_presets() {
    let tmp = TempDir::new().unwrap();
    let cat = tmp.path().join("catalog");
    std::fs::create_dir(&cat).unwrap();
    std::fs::write(cat.join("strong-wind.json"), r#"{"base": "randers-const", "params": {"b1": 0.6, "b2": 0.2}}"#).unwrap();
    std::fs::write(cat.join("gale.json"), r#"{"base": "randers-const", "params": {"b1": 1.5}}"#).unwrap();
    let with_catalog = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_fmpd"))
            .args(args)
            .current_dir(tmp.path())
            .env("FMPD_CATALOG_DIR", &cat)
            .output()
            .unwrap()
    };
    assert_eq!(code(&with_catalog(&["verify", "strong-wind", "--points", "4"])), 0);
    assert_eq!(code(&with_catalog(&["verify", "gale"])), 2);
    assert_eq!(code(&fmpd(&["verify", "strong-wind"], tmp.path())), 2);
}

#[test]
fn plots_preserve_shape_and_order() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    run_ok(dir, "flat", &config("euclidean-2", json!({"kind": "geodesic"}), &[0.0, 1.0], &[1.0, 0.5], 3.0, "flat"));

    let out = fmpd(&["plot", "flat.trajectory.csv", "--kind", "xy-projection", "-o", "line.svg"], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = polylines(&std::fs::read_to_string(dir.join("line.svg")).unwrap());
    assert_eq!(lines.len(), 1);
    let p = &lines[0];
    let (a, b) = (p[0], *p.last().unwrap());
    for q in p {
        let cross = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
        assert!(cross.abs() <= 1.0, "{q:?} off the line");
    }

    let out = fmpd(&["plot", "flat.monitors.csv", "--kind", "monitor-vs-tau", "-o", "psi.svg"], dir);
    assert_eq!(code(&out), 0);
    let lines = polylines(&std::fs::read_to_string(dir.join("psi.svg")).unwrap());
    assert!(lines[0].iter().all(|q| q.1 == lines[0][0].1), "constant Ψ must plot flat");

    let ray = config(
        "randers-axisym3",
        json!({"kind": "spinoptics3d", "p": 1.0, "s": 0.1, "helicity": 1.0}),
        &[0.4, -0.2, 0.0],
        &[0.3, 0.5, 1.0],
        3.0,
        "ray",
    );
    let (traj, _) = run_ok(dir, "ray", &ray);
    let out = fmpd(
        &["plot", "ray.trajectory.csv", "--kind", "xy-projection", "--columns", "x0,x2", "-o", "ray.svg"],
        dir,
    );
    assert_eq!(code(&out), 0);
    let pts = &polylines(&std::fs::read_to_string(dir.join("ray.svg")).unwrap())[0];
    let (x0, x2) = (traj.col("x0"), traj.col("x2"));
    assert_eq!(pts.len(), x0.len());
    // Screen coordinates are affine in the data, so row order must carry over.
    let affine = |data: &[f64], screen: Vec<f64>| {
        let (i, j) = (0, data.len() - 1);
        let k = (screen[j] - screen[i]) / (data[j] - data[i]);
        data.iter().zip(&screen).all(|(d, s)| (screen[i] + k * (d - data[i]) - s).abs() <= 5e-3)
    };
    assert!(affine(&x2, pts.iter().map(|p| p.1).collect()));
    assert!(affine(&x0, pts.iter().map(|p| p.0).collect()));
    assert!(x2.windows(2).all(|w| w[1] > w[0]) && pts.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn malformed_csv_exits_2() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("text.csv"), "tau,x0,x1\n0.0,1.0,oops\n").unwrap();
    std::fs::write(dir.join("back.csv"), "tau,x0,x1\n1.0,0.0,0.0\n0.5,1.0,1.0\n").unwrap();
    std::fs::write(dir.join("ragged.csv"), "tau,x0,x1\n0.0,1.0\n").unwrap();
    std::fs::write(dir.join("notau.csv"), "x0,x1\n0.0,1.0\n").unwrap();
    for f in ["text.csv", "back.csv", "ragged.csv", "notau.csv", "missing.csv"] {
        let out = fmpd(&["plot", f, "--kind", "xy-projection", "-o", "x.svg"], dir);
        assert_eq!(code(&out), 2, "{f}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
