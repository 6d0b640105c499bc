use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvflow::io::{save_mesh, MeshFormat};
use curvflow::TriMesh;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curvflow"));
    cmd.env_remove("CURVFLOW_OUT");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn curvflow");
    if std::env::var_os("CURVFLOW_TEST_VERBOSE").is_some() {
        eprintln!("{}", String::from_utf8_lossy(&out.stdout));
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn manifest(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn small_flow(out: &Path) -> Command {
    let mut cmd = bin();
    cmd.args(["flow", "--shape", "icosphere:2", "--flow", "cmcf", "--dt", "1e-3", "--steps", "16", "--out"])
        .arg(out);
    cmd
}

fn sorted_listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn flow_writes_snapshots_csv_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = run(&mut small_flow(tmp.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let listing = sorted_listing(tmp.path());
    let expected: Vec<String> = [1, 2, 4, 8, 16]
        .iter()
        .map(|s| format!("icosphere_step{s:05}.obj"))
        .chain(["icosphere_metrics.csv".to_string(), "manifest.json".to_string()])
        .collect();
    let mut expected_sorted = expected.clone();
    expected_sorted.sort();
    assert_eq!(listing, expected_sorted);

    let m = manifest(tmp.path());
    assert_eq!(m["status"], "finished");
    assert_eq!(m["steps_completed"], 16);
    assert_eq!(m["vertices"], 162);
    assert_eq!(m["config"]["flow"], "cmcf");
    assert!(m.get("singular").is_none());
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 6);
    for o in outputs {
        let path = tmp.path().join(o["path"].as_str().unwrap());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(o["sha256"].as_str().unwrap(), curvflow_cli_sha(&bytes));
    }

    let csv = std::fs::read_to_string(tmp.path().join("icosphere_metrics.csv")).unwrap();
    let records = curvflow::metrics::parse_csv(csv.as_bytes()).unwrap();
    assert_eq!(records.len(), 17);
    assert_eq!(records[0].step, 0);
    assert_eq!(records[16].status, curvflow::metrics::RecordStatus::Finished);
}

fn curvflow_cli_sha(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let first = TempDir::new().unwrap();
    assert_eq!(code(&run(&mut small_flow(first.path()))), 0);
    let second = TempDir::new().unwrap();
    let out = run(bin()
        .args(["flow", "--config"])
        .arg(first.path().join("manifest.json"))
        .arg("--out")
        .arg(second.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (a, b) = (manifest(first.path()), manifest(second.path()));
    assert_eq!(a["config"], b["config"]);
    assert_eq!(a["outputs"], b["outputs"]);
    for o in a["outputs"].as_array().unwrap() {
        let rel = o["path"].as_str().unwrap();
        assert_eq!(
            std::fs::read(first.path().join(rel)).unwrap(),
            std::fs::read(second.path().join(rel)).unwrap(),
            "{rel}"
        );
    }
}

#[test]
fn toml_config_with_flag_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "shape = \"icosphere:1\"\nflow = \"heat\"\ndt = 0.01\nsteps = 100\nsnapshots = \"none\"\nname = \"hot\"\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(bin().args(["flow", "--config"]).arg(&cfg).args(["--steps", "3", "--out"]).arg(&out_dir));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m["config"]["steps"], 3);
    assert_eq!(m["config"]["flow"], "heat");
    assert_eq!(sorted_listing(&out_dir), vec!["hot_metrics.csv", "manifest.json"]);
}

#[test]
fn out_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .env("CURVFLOW_OUT", tmp.path())
        .args(["flow", "--shape", "icosphere:1", "--flow", "mcf", "--dt", "1e-3", "--steps", "2", "--snapshots", "none"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("manifest.json").exists());
    assert!(tmp.path().join("icosphere_metrics.csv").exists());
}

#[test]
fn input_mesh_is_hashed_and_format_respected() {
    let tmp = TempDir::new().unwrap();
    let mesh = curvflow::shapes::generate(&curvflow::ShapeSpec::icosphere(1, 1.0)).unwrap();
    let input = tmp.path().join("ball.off");
    save_mesh(&mesh, &input, MeshFormat::Off).unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(bin()
        .args(["flow", "--input"])
        .arg(&input)
        .args(["--flow", "mcf", "--dt", "1e-3", "--steps", "2", "--format", "ply", "--out"])
        .arg(&out_dir));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(
        m["input_sha256"].as_str().unwrap(),
        curvflow_cli_sha(&std::fs::read(&input).unwrap())
    );
    assert!(out_dir.join("ball_step00002.ply").exists());
}

#[test]
fn singular_run_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .args(["flow", "--shape", "dumbbell:default", "--flow", "mcf", "--dt", "1e-3", "--steps", "64", "--snapshots", "none", "--out"])
        .arg(tmp.path()));
    assert_eq!(code(&out), 2);
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "singular");
    let step = m["singular"]["step"].as_u64().unwrap();
    assert!((1..=64).contains(&step));
    assert_eq!(m["steps_completed"].as_u64().unwrap(), step - 1);
    let csv = std::fs::read_to_string(tmp.path().join("dumbbell_metrics.csv")).unwrap();
    let records = curvflow::metrics::parse_csv(csv.as_bytes()).unwrap();
    assert!(records.iter().all(|r| (r.step as u64) < step));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["flow", "--shape", "icosphere:1", "--flow", "cmcf", "--dt", "-1"],
        &["flow", "--shape", "icosphere:1", "--flow", "cmcf"],
        &["flow", "--shape", "teapot", "--flow", "cmcf", "--dt", "1e-3"],
        &["flow", "--shape", "icosphere:1", "--flow", "cmcf", "--dt", "1e-3", "--bogus"],
        &["flow", "--input", "/nonexistent/mesh.obj", "--flow", "cmcf", "--dt", "1e-3"],
        &["oracle", "--cases", "torus"],
        &[],
    ];
    for args in cases {
        let out = run(bin().args(*args).env("CURVFLOW_OUT", tmp.path()));
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    let out = run(bin().arg("--help"));
    assert_eq!(code(&out), 0);
}

fn grid(nx: usize, ny: usize) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([i as f64 / nx as f64, j as f64 / ny as f64, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut f = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

fn metrics_rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mesh,qc_error,sphericity_variance,dirichlet_energy,tildeEA,tildeEC,EA,EC,area"
    );
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn metrics_subcommand() {
    let tmp = TempDir::new().unwrap();
    let rest = grid(6, 5);
    let rest_path = tmp.path().join("rest.obj");
    save_mesh(&rest, &rest_path, MeshFormat::Obj).unwrap();
    let scaled_path = tmp.path().join("scaled.ply");
    save_mesh(&rest.map_positions(|p| [3.0 * p[0] + 1.0, 3.0 * p[1], 3.0 * p[2]]), &scaled_path, MeshFormat::Ply).unwrap();
    let stretched_path = tmp.path().join("stretched.off");
    save_mesh(&rest.map_positions(|p| [2.0 * p[0], p[1], p[2]]), &stretched_path, MeshFormat::Off).unwrap();

    let out = run(bin()
        .arg("metrics")
        .arg("--reference")
        .arg(&rest_path)
        
        .args([&rest_path, &scaled_path, &stretched_path]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = metrics_rows(&out);
    assert_eq!(rows.len(), 3);
    let qc: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((qc[0] - 1.0).abs() < 1e-12);
    assert!((qc[1] - 1.0).abs() < 1e-12);
    assert!((qc[2] - 2.0).abs() < 1e-12);
    // Identity: no conformal energy, Dirichlet energy equals area.
    let ec: f64 = rows[0][5].parse().unwrap();
    let e: f64 = rows[0][3].parse().unwrap();
    assert!(ec.abs() < 1e-12 && (e - 1.0).abs() < 1e-12);
    // x-stretch by 2: E = (1/2)(4 + 1) per unit rest area.
    let e: f64 = rows[2][3].parse().unwrap();
    assert!((e - 2.5).abs() < 1e-12, "{e}");

    let csv = tmp.path().join("m.csv");
    let out = run(bin().arg("metrics").arg("--reference").arg(&rest_path).arg(&stretched_path).arg("--csv").arg(&csv));
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);

    let other_path = tmp.path().join("other.obj");
    save_mesh(&grid(5, 6), &other_path, MeshFormat::Obj).unwrap();
    let out = run(bin().arg("metrics").arg("--reference").arg(&rest_path).arg(&other_path));
    assert_eq!(code(&out), 1);
}

#[test]
fn oracle_catenoid_passes() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("oracle.csv");
    let out = run(bin().args(["oracle", "--cases", "catenoid", "--csv"]).arg(&csv));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("3 of 3 cases passed"), "{stdout}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(text.lines().filter(|l| *l == header).count(), 1);
    assert!(text.lines().count() > 3);
}

#[test]
fn oracle_sphere_and_cylinder_cmcf() {
    let out = run(bin().args(["oracle", "--cases", "sphere,cylinder", "--flows", "cmcf", "--jobs", "2"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("2 of 2 cases passed"), "{stdout}");
}

fn assert_svg(text: &str) {
    assert!(text.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<svg").count(), 1);
    assert_eq!(text.matches("<g ").count(), text.matches("</g>").count());
    assert_eq!(text.matches("<text").count(), text.matches("</text>").count());
}

#[test]
fn plot_three_panels() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin().arg("plot").arg("--csv").arg(data("run_a.csv")).arg("--out").arg(tmp.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["convergence.svg", "conformality.svg", "sphericity.svg"] {
        let text = std::fs::read_to_string(tmp.path().join(name)).unwrap();
        assert_svg(&text);
        assert_eq!(text.matches("class=\"series\"").count(), 1, "{name}");
        assert_eq!(text.matches("class=\"legend\"").count(), 1, "{name}");
    }
}

#[test]
fn plot_two_runs_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin()
        .arg("plot")
        .arg("--csv")
        .arg(data("run_a.csv"))
        .arg("--csv")
        .arg(data("run_b.csv"))
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in ["convergence.svg", "conformality.svg", "sphericity.svg"] {
        let text = std::fs::read_to_string(tmp.path().join(name)).unwrap();
        assert_svg(&text);
        assert_eq!(text.matches("class=\"legend\"").count(), 2);
        assert!(text.contains(">run_a</text>") && text.contains(">run_b</text>"));
        let golden = golden_dir.join(name);
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&golden, &text).unwrap();
        }
        assert_eq!(text, std::fs::read_to_string(&golden).unwrap(), "{name} differs from golden");
    }
}

#[test]
fn plot_rejects_header_only_csv() {
    let tmp = TempDir::new().unwrap();
    let out = run(bin().arg("plot").arg("--csv").arg(data("header_only.csv")).arg("--out").arg(tmp.path()));
    assert_eq!(code(&out), 1);
    assert!(!tmp.path().join("convergence.svg").exists());
}
