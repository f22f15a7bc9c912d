use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::Vector3;
use vkrod::cli::{ledger_path, main_with_args, parse_config_str};
use vkrod::cross_section::{BuiltinShape, CrossSectionMesh};
use vkrod::rescale::Field3D;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn vkrod(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vkrod"))
        .args(args)
        .env_remove("VKROD_THREADS")
        .output()
        .unwrap()
}

fn status(args: &[&str]) -> i32 {
    vkrod(args).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const SMALL_RUN: &str = r#"{
  "material": {"lambda": 1.0, "mu": 1.0},
  "section": {"shape": "square", "resolution": 4},
  "rod": {"length": 1.0, "n_elem": 8},
  "dynamics": {"dt": 0.01, "t_final": 0.05},
  "initial": {"mode": {"index": 1, "amplitude": 0.05, "component": 2}},
  "io": {"output_stride": 1}
}"#;

#[test]
fn shipped_configs_parse() {
    for name in ["disk.json", "square.json", "l_section.json"] {
        let text = std::fs::read_to_string(assets().join(name)).unwrap();
        let cfg = parse_config_str(&text, Path::new(name)).unwrap();
        assert!(cfg.violations().is_empty(), "{name}");
    }
}

#[test]
fn axial_force_density_is_rejected_by_name() {
    let text = r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "disk", "resolution": 2},
                  "forcing": {"f1": {"space": {"kind": "constant", "value": 1.0}}}}"#;
    let err = parse_config_str(text, Path::new("inline")).unwrap_err();
    assert!(err.violations().iter().any(|v| v.starts_with("forcing.f1")), "{err}");
}

#[test]
fn every_violation_is_reported() {
    let text = r#"{"material": {"lambda": 1.0, "mu": -1.0}, "section": {"shape": "square", "resolution": 0},
                  "rod": {"n_elem": 1}, "dynamics": {"dt": 0.0, "t_final": 1.0}}"#;
    let err = parse_config_str(text, Path::new("inline")).unwrap_err();
    let v = err.violations();
    for key in ["material.mu", "section.resolution", "rod.n_elem", "dynamics.dt"] {
        assert!(v.iter().any(|s| s.starts_with(key)), "{key} missing from {v:?}");
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "disk", "resolution": 2}, "extra": 1}"#;
    assert!(parse_config_str(text, Path::new("inline")).is_err());
    assert!(parse_config_str("{not json", Path::new("inline")).is_err());
}

#[test]
fn cell_writes_symmetric_stiffness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "disk", "resolution": 4}}"#,
    );
    let out = dir.path().join("q.json");
    assert_eq!(status(&["cell", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let q = json["stiffness"].as_array().unwrap();
    assert_eq!(q.len(), 4);
    for i in 0..4 {
        for j in 0..4 {
            let a = q[i][j].as_f64().unwrap();
            let b = q[j][i].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
    // stretch is exact for every section: E_Y times the unit area
    assert!((q[0][0].as_f64().unwrap() - 2.5).abs() < 1e-10);
}

#[test]
fn zero_data_stays_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.json",
        r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "square", "resolution": 2},
            "rod": {"n_elem": 4}, "dynamics": {"dt": 0.1, "t_final": 0.3}}"#,
    );
    let out = dir.path().join("z.csv");
    let o = vkrod(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first linearized period"));
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header, ["t", "x1", "u", "v2", "v3", "w", "vel2", "vel3", "N", "T"]);
    assert_eq!(rows.len(), 4 * 5);
    assert!(rows.iter().all(|r| r[2..].iter().all(|v| *v == 0.0)));
    let (lh, ledger) = parse_csv(&std::fs::read_to_string(ledger_path(&out)).unwrap());
    assert_eq!(lh, ["t", "kinetic", "elastic", "work"]);
    assert_eq!(ledger.len(), 4);
    assert!(ledger.iter().all(|r| r[1..].iter().all(|v| *v == 0.0)));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.json", SMALL_RUN);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(status(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_vkrod"))
        .args(["run", "--config", &cfg, "--out", b.to_str().unwrap()])
        .env("VKROD_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(ledger_path(&a)).unwrap(), std::fs::read(ledger_path(&b)).unwrap());
}

#[test]
fn shipped_exact_family_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.csv");
    let family = assets().join("family_exact.json");
    let code = main_with_args(["vkrod", "convergence", "--family", family.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("quantity,rate,err_h="));
    let mut n = 0;
    for line in lines {
        let rate = line.split(',').nth(1).unwrap();
        if rate != "exact" {
            let r: f64 = rate.parse().unwrap();
            assert!(r >= 0.9, "{line}");
        }
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn rescale_writes_one_row_per_slice() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = CrossSectionMesh::generate(BuiltinShape::Square { resolution: 2 })
        .unwrap()
        .normalize()
        .unwrap()
        .0;
    let h = 0.1;
    let n1 = 5;
    let mut values = Vec::new();
    for i in 0..n1 {
        let x1 = i as f64 / (n1 - 1) as f64;
        for p in mesh.nodes() {
            values.push(Vector3::new(x1, h * p[0], h * p[1]));
        }
    }
    let field = Field3D::new(mesh.clone(), 1.0, h, values, None).unwrap();
    let fp = write(dir.path(), "f.txt", &field.to_text());
    let mp = write(dir.path(), "m.msh", &mesh.to_text());
    let out = dir.path().join("r.csv");
    let args = ["rescale", "--field", &fp, "--mesh", &mp, "--out", out.to_str().unwrap(), "--lambda", "1", "--mu", "1"];
    assert_eq!(status(&args), 0);
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header.len(), 12 + 9);
    assert_eq!(rows.len(), n1);
    for r in &rows {
        assert!(r[1..].iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("o.csv");
    let out = out.to_str().unwrap();

    assert_eq!(status(&["cell"]), 2);
    assert_eq!(status(&["bogus"]), 2);

    let bad = write(d, "bad.json", r#"{"material": {"lambda": 1.0}}"#);
    assert_eq!(status(&["cell", "--config", &bad, "--out", out]), 3);
    let missing = d.join("nope.json");
    assert_eq!(status(&["cell", "--config", missing.to_str().unwrap(), "--out", out]), 3);

    let good = write(d, "g.json", r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "square", "resolution": 2}}"#);
    let unwritable = d.join("no_such_dir").join("q.json");
    assert_eq!(status(&["cell", "--config", &good, "--out", unwritable.to_str().unwrap()]), 4);

    write(d, "broken.msh", "3 1\n0 0\n1 0\n");
    let mesh_cfg = write(
        d,
        "m.json",
        r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "file", "mesh": "broken.msh"}}"#,
    );
    assert_eq!(status(&["cell", "--config", &mesh_cfg, "--out", out]), 5);

    let mode = write(
        d,
        "mode.json",
        r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "square", "resolution": 2},
            "rod": {"n_elem": 2}, "dynamics": {"dt": 0.1, "t_final": 0.1},
            "initial": {"mode": {"index": 500, "amplitude": 0.1}}}"#,
    );
    assert_eq!(status(&["run", "--config", &mode, "--out", out]), 7);

    let newton = write(
        d,
        "newton.json",
        r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "square", "resolution": 2},
            "rod": {"n_elem": 8}, "dynamics": {"dt": 0.5, "t_final": 1.0, "newton_max": 1},
            "initial": {"mode": {"index": 1, "amplitude": 0.8}}}"#,
    );
    assert_eq!(status(&["run", "--config", &newton, "--out", out]), 8);

    let raw = CrossSectionMesh::generate(BuiltinShape::Square { resolution: 2 }).unwrap();
    let mp = write(d, "raw.msh", &raw.to_text());
    let nv = raw.nodes().len();
    let mut field = format!("2 {nv} 0.1 0\n");
    for _ in 0..2 * nv {
        field.push_str("0 0 0\n");
    }
    let fp = write(d, "f.txt", &field);
    assert_eq!(status(&["rescale", "--field", &fp, "--mesh", &mp, "--out", out]), 9);
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g.json", r#"{"material": {"lambda": 1.0, "mu": 1.0}, "section": {"shape": "square", "resolution": 2}}"#);
    let out = dir.path().join("q.json");
    let o = Command::new(env!("CARGO_BIN_EXE_vkrod"))
        .args(["cell", "--config", &cfg, "--out", out.to_str().unwrap()])
        .env("VKROD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}
