use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_condensate"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(dir: &TempDir, body: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir.path(), body);
    bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Rows of a CSV artifact after the manifest line, split on commas.
fn csv(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let hash = lines.next().unwrap().strip_prefix("# manifest_sha256=").unwrap().to_string();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (hash, header, rows)
}

fn column<'a>(header: &[String], rows: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].as_str()).collect()
}

const STEADY: &str = r#"
scenario = "steady-state"
[model]
zeta0 = 0.0
[model.saturation]
law = "linear"
f = 2.0
rho_m = 200.0
[integrator]
n_traj = 2000
burn_in = 5.0
bootstrap = 50
"#;

#[test]
fn empty_scenario_names_the_key() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir, "scenario = \"\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["path"], "scenario");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pairing_outside_stable_region_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir, &STEADY.replace("zeta0 = 0.0", "zeta0 = 1.2"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["path"], "model.zeta0");
}

#[test]
fn validate_fills_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"quench\"\n[model]\nzeta0 = 0.6\n[model.saturation]\nlaw = \"linear\"\nf = 2.0\nrho_m = 200.0\n",
    );
    let o = bin().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["model"]["gamma"], 1.0);
    assert_eq!(v["model"]["eta"], 1.0);
    assert_eq!(v["integrator"]["dt"], 1e-3);
    assert_eq!(v["integrator"]["n_traj"], 10_000);
    assert_eq!(v["integrator"]["seed"], 42);
    let again = bin().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn missing_equilibrium_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let body = r#"
scenario = "steady-state"
[model.saturation]
law = "nonlinear"
pump = 0.5
scatter_rate = 1.0
reservoir_decay = 1.0
[integrator]
n_traj = 200
"#;
    let o = run(&dir, body, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "no_equilibrium");
}

#[test]
fn factorized_steady_state_is_separable() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir, STEADY, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read(dir.path().join("out/manifest.json")).unwrap();
    let (hash, header, rows) = csv(&dir.path().join("out/steady_state.csv"));
    assert_eq!(hash, sha256_hex(&manifest));
    assert_eq!(rows.len(), 1);
    let xi: f64 = column(&header, &rows, "xi")[0].parse().unwrap();
    assert!(xi.abs() < 4.0 / 2000f64.sqrt(), "ξ = {xi}");
    assert_eq!(column(&header, &rows, "xi_analytic")[0], "0");
    assert_eq!(column(&header, &rows, "verdict")[0], "separable");
    assert_eq!(column(&header, &rows, "verdict_analytic")[0], "separable");
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let body = STEADY.replace("zeta0 = 0.0", "zeta0 = 0.6");
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let names = ["manifest.json", "steady_state.csv"];
    let mut first = Vec::new();
    for seed in ["42", "42", "7"] {
        let o = run(&dir, &body, &["--format", "csv", "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let bytes: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
        fs::remove_dir_all(&out).unwrap();
        if first.is_empty() {
            first = bytes;
        } else if seed == "42" {
            for (n, (x, y)) in names.iter().zip(first.iter().zip(&bytes)) {
                assert!(x == y, "{n} differs");
            }
        } else {
            assert_ne!(first[1], bytes[1]);
        }
    }
}

#[test]
fn phase_diagram_boundary_and_crossing() {
    let dir = TempDir::new().unwrap();
    let body = r#"
scenario = "phase-diagram"
[phase_diagram]
law = "linear"
f_values = [1.0]
eta_values = [1.0, 2.0]
zeta_points = 51
kappa_max = 100.0
kappa_points = 201
"#;
    let o = run(&dir, body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");

    let (_, header, rows) = csv(&out.join("boundary_00_eta_1.csv"));
    for z in column(&header, &rows, "zeta_crit") {
        let z: f64 = z.parse().unwrap();
        assert!((0.4..=2.0 / 3.0 + 1e-12).contains(&z), "{z}");
    }

    // κ = 1 + ζ at f = 1: 6ζ² + (5(1+ζ) − 4)ζ − 2(1+ζ) = 11ζ² − ζ − 2.
    let root = (1.0 + 89f64.sqrt()) / 22.0;
    let (_, header, rows) = csv(&out.join("crossings.csv"));
    let z: f64 = column(&header, &rows, "zeta_crit")[0].parse().unwrap();
    assert!((z - root).abs() < 1e-9, "{z} vs {root}");

    let (_, header, rows) = csv(&out.join("phase_diagram.csv"));
    assert_eq!(header, ["model", "f", "eta", "zeta", "kappa", "F_PT", "entangled"]);
    assert_eq!(rows.len(), 2 * 51);
    let zeta = column(&header, &rows, "zeta");
    let eta = column(&header, &rows, "eta");
    let ent = column(&header, &rows, "entangled");
    for i in 0..rows.len() {
        let z: f64 = zeta[i].parse().unwrap();
        if eta[i] == "1" {
            assert_eq!(ent[i] == "true", z > root, "ζ = {z}");
        }
        if z == 0.0 {
            assert_eq!(ent[i], "false");
        }
    }
}

#[test]
fn quench_json_reports_analytic_disentanglement_time() {
    let dir = TempDir::new().unwrap();
    let body = r#"
scenario = "quench"
format = "json"
snapshots = true
[model]
zeta0 = 0.6
[model.saturation]
law = "linear"
f = 2.0
rho_m = 200.0
[integrator]
n_traj = 500
burn_in = 3.0
bootstrap = 20
[observe]
t_max = 1.0
n_points = 5
"#;
    let o = run(&dir, body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let manifest = fs::read(out.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("quench.json")).unwrap()).unwrap();
    assert_eq!(v["manifest_sha256"], sha256_hex(&manifest));
    assert_eq!(v["series"].as_array().unwrap().len(), 5);
    assert_eq!(v["analytic"].as_array().unwrap().len(), 5);
    let td = v["summary"]["tau_d_analytic"].as_f64().unwrap();
    let bound = v["summary"]["tau_d_late_time"].as_f64().unwrap();
    assert!(td > 0.0 && td <= bound, "{td} vs {bound}");
    assert_eq!(v["series"][0]["verdict_analytic"], "entangled");

    let snap = fs::read_to_string(out.join("snapshots/snapshot_0004.csv")).unwrap();
    let mut lines = snap.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(header["params_hash"], sha256_hex(&manifest));
    assert_eq!(header["t"], 1.0);
    assert_eq!(lines.next(), Some("x1,p1,x2,p2"));
    assert_eq!(lines.count(), 500);
}

#[test]
fn vacuum_check_starts_at_zero_and_relaxes_to_a_quarter() {
    let dir = TempDir::new().unwrap();
    let body = "scenario = \"vacuum-check\"\n[integrator]\nn_traj = 4000\ndt = 0.01\n[observe]\nt_max = 10.0\nn_points = 3\n";
    let o = run(&dir, body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, header, rows) = csv(&dir.path().join("out/vacuum_check.csv"));
    assert_eq!(column(&header, &rows, "var_x1")[0], "0");
    for name in ["var_x1", "var_p1", "var_x2", "var_p2"] {
        let v: f64 = column(&header, &rows, name)[2].parse().unwrap();
        assert!((v - 0.25).abs() < 4.0 * 0.25 * (2.0 / 4000f64).sqrt(), "{name} = {v}");
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::Digest;
    hex::encode(sha2::Sha256::digest(bytes))
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = bin().arg("validate").arg("--config").arg(&path).output().unwrap();
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert_eq!(n, 4);
}
