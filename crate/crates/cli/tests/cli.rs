use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wingqed_cli::config::{RunConfig, Stage};
use wingqed_cli::stages::{run_stage, Context};
use wingqed_cli::table::ParsedCsv;

fn wingqed(args: &[&str], config: &Path, extra_env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wingqed"));
    cmd.args(args)
        .arg("--config")
        .arg(config)
        .env_remove("WINGQED_CACHE_DIR")
        .env("RUST_LOG", "info");
    for (k, v) in extra_env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPECTRUM: &str = r#"schema_version = 1
[qed]
omega_ghz = 45.2
gamma_hz = 2500.0
g_over_gamma = 832.0
kappa_hz = 4.5e5
omega_drive_over_gamma = 12.0
n_max = 4
delta_min_over_gamma = -900.0
delta_max_over_gamma = 900.0
delta_points = 7
"#;

#[test]
fn unknown_key_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "schema_version = 1\n[qed]\ngama_hz = 1.0\n");
    let o = wingqed(&["qed-spectrum"], &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qed.gama_hz"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    assert_eq!(wingqed(&["modes"], &missing, &[]).status.code(), Some(2));

    let no_stage = write(dir.path(), "a.toml", SPECTRUM);
    assert_eq!(wingqed(&["sweep"], &no_stage, &[]).status.code(), Some(2));

    let over = format!(
        "{SPECTRUM}[sweep]\nbudget = 1\naxes = [{{ path = \"qed.kappa_hz\", values = [1e5, 2e5] }}]\n"
    );
    let over = write(dir.path(), "b.toml", &over);
    let o = wingqed(&["qed-spectrum"], &over, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budget"));

    // the modes stage needs a [geometry] section
    assert_eq!(wingqed(&["modes"], &no_stage, &[]).status.code(), Some(2));
}

#[test]
fn mirror_sweep_conserves_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "schema_version = 1\n[mirror]\nn_h = 6.0\nk_h = 0.0003\nn_l = 1.2\nk_l = 0.0001\n\
         lambda0_mm = 6.633\nlambda_min_mm = 4.0\nlambda_max_mm = 10.0\nlambda_points = 61\n",
    );
    let o = wingqed(&["mirror"], &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = ParsedCsv::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(csv.header, ["lambda_m", "R", "T", "A", "status"]);
    assert_eq!(csv.rows.len(), 61);
    for r in 0..61 {
        let s: f64 = ["R", "T", "A"].iter().map(|c| csv.f64_at(r, c).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    // centre of the stop band
    let best = (0..61).map(|r| csv.f64_at(r, "R").unwrap()).fold(0.0, f64::max);
    assert!(best > 0.9999);
}

#[test]
fn cache_hit_and_tampered_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SPECTRUM);
    let cache = dir.path().join("cache");
    let args = ["qed-spectrum", "--cache", cache.to_str().unwrap()];

    let first = wingqed(&args, &cfg, &[]);
    assert_eq!(first.status.code(), Some(0));
    assert!(stderr(&first).contains("event=cache_miss"));

    let second = wingqed(&args, &cfg, &[]);
    assert!(stderr(&second).contains("event=cache_hit"));
    assert!(!stderr(&second).contains("event=stage_start"));
    assert_eq!(first.stdout, second.stdout);

    let entry = fs::read_dir(&cache)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .unwrap();
    let mut bytes = fs::read(&entry).unwrap();
    let last = bytes.len() - 2;
    bytes[last] ^= 0x01;
    fs::write(&entry, bytes).unwrap();

    let third = wingqed(&args, &cfg, &[]);
    assert_eq!(third.status.code(), Some(0));
    assert!(stderr(&third).contains("event=cache_corruption"));
    assert!(stderr(&third).contains("event=stage_start"));
    assert_eq!(first.stdout, third.stdout);
    assert_eq!(fs::read(&entry).unwrap(), first.stdout);
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SPECTRUM);
    let cache = dir.path().join("env-cache");
    let o = wingqed(&["qed-spectrum"], &cfg, &[("WINGQED_CACHE_DIR", &cache)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 2);
    let o = wingqed(&["qed-spectrum"], &cfg, &[("WINGQED_CACHE_DIR", &cache)]);
    assert!(stderr(&o).contains("event=cache_hit"));
}

#[test]
fn sweep_rows_follow_axis_order_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SPECTRUM}[sweep]\nstage = \"qed-spectrum\"\n\
         axes = [{{ path = \"qed.kappa_hz\", values = [1.4e6, 4.5e5] }}, \
         {{ path = \"qed.omega_drive_over_gamma\", values = [6.0, 12.0] }}]\n"
    );
    let cfg = write(dir.path(), "s.toml", &text);
    let one = wingqed(&["sweep", "--jobs", "1"], &cfg, &[]);
    let four = wingqed(&["sweep", "--jobs", "4"], &cfg, &[]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let csv = ParsedCsv::parse(&String::from_utf8(one.stdout).unwrap()).unwrap();
    assert_eq!(
        csv.header[..3],
        ["qed.kappa_hz", "qed.omega_drive_over_gamma", "delta_over_gamma"]
    );
    assert_eq!(csv.rows.len(), 4 * 7);
    let kappas: Vec<f64> = (0..28).map(|r| csv.f64_at(r, "qed.kappa_hz").unwrap()).collect();
    assert!(kappas[..14].iter().all(|&k| k == 1.4e6));
    assert!(kappas[14..].iter().all(|&k| k == 4.5e5));
}

#[test]
fn failed_points_are_flagged_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    // a drive this weak leaves too few photons for a g2 estimate
    let text = SPECTRUM.replace("omega_drive_over_gamma = 12.0", "omega_drive_over_gamma = 1e-9");
    let cfg = write(dir.path(), "s.toml", &text);
    let o = wingqed(&["qed-spectrum"], &cfg, &[]);
    assert_eq!(o.status.code(), Some(5));
    let csv = ParsedCsv::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(csv.rows.len(), 7);
    for r in 0..7 {
        assert_eq!(csv.str_at(r, "status"), Some("steady_state_error"));
        assert!(csv.f64_at(r, "delta_over_gamma").is_some());
    }
}

const GEOMETRY: &str = r#"schema_version = 1
[geometry]
d_over_L = 0.3
[solver]
shift_ghz = 45.0
ppw = 30.0
[mirror]
n_h = 6.0
k_h = 0.0003
n_l = 1.2
k_l = 0.0001
[qed]
omega_ghz = 45.2
gamma_hz = 2500.0
"#;

#[test]
fn qed_couplings_from_a_pipeline_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache_s = cache.to_str().unwrap();
    let pipe = write(dir.path(), "p.toml", GEOMETRY);
    let o = wingqed(&["pipeline", "--cache", cache_s], &pipe, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    let id = log
        .split("run_id=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .to_string();
    let row = ParsedCsv::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();

    let qed = format!(
        "schema_version = 1\n[qed]\nomega_ghz = 45.2\ngamma_hz = 2500.0\nderive_g_from_V = true\n\
         derive_kappa_from_pipeline = true\npipeline_run_id = \"{id}\"\npipeline_d_over_L = 0.3\n\
         n_max = 3\nt_end_us = 0.5\n"
    );
    let q = write(dir.path(), "q.toml", &qed);
    let o = wingqed(&["qed-dynamics", "--cache", cache_s], &q, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    let g = row.f64_at(0, "g_hz").unwrap();
    assert!(log.contains(&format!("g_hz={g:.6e}")), "{log}");

    // no artifact for that wing width
    let wrong = write(dir.path(), "w.toml", &qed.replace("= 0.3\n", "= 0.2\n"));
    assert_eq!(wingqed(&["qed-dynamics", "--cache", cache_s], &wrong, &[]).status.code(), Some(2));
    // no cache to look in
    assert_eq!(wingqed(&["qed-dynamics"], &q, &[]).status.code(), Some(2));
}

fn ctx() -> Context {
    Context {
        jobs: 1,
        cache: None,
    }
}

#[test]
fn perfect_mirrors_make_c_track_q() {
    let mut cfg = RunConfig::from_toml_str(GEOMETRY).unwrap();
    cfg = cfg
        .with_value("mirror.kappa_mirror_hz", &toml::Value::Float(0.0))
        .unwrap();
    let mut rows = Vec::new();
    for d in [0.1, 0.3] {
        let c = cfg.with_value("geometry.d_over_L", &toml::Value::Float(d)).unwrap();
        let out = run_stage(&c, Stage::Pipeline, &ctx()).unwrap();
        let csv = ParsedCsv::parse(&out.table.to_csv()).unwrap();
        let f = |k| csv.f64_at(0, k).unwrap();
        rows.push((f("Q_geom"), f("C"), f("V_m3") * f("freq_hz")));
    }
    // C = g^2 Q / (omega gamma) with g^2 proportional to 1 / V
    let norm = |(q, c, vf): (f64, f64, f64)| c * vf / q;
    assert!((norm(rows[0]) / norm(rows[1]) - 1.0).abs() < 1e-12);
    assert!(rows[1].1 / rows[0].1 > 10.0);
}

#[test]
fn lossy_mirrors_make_c_plateau() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes/c_plateau.toml");
    let cfg = RunConfig::load(&path).unwrap();
    let out = run_stage(&cfg, Stage::Pipeline, &ctx()).unwrap();
    assert_eq!(out.exit_code(), 0);
    let csv = ParsedCsv::parse(&out.table.to_csv()).unwrap();
    let c: Vec<f64> = (0..csv.rows.len()).map(|r| csv.f64_at(r, "C").unwrap()).collect();
    assert_eq!(c.len(), 7);
    assert!(c.windows(2).all(|w| w[1] > w[0]), "{c:?}");
    assert!(c[1] / c[0] > 3.0);
    assert!(c[6] / c[5] < 1.1, "{c:?}");
    // the plateau is the mirror-limited value g^2 / (kappa_mirror gamma)
    let a = csv.f64_at(6, "A").unwrap();
    assert!(a > 0.0 && csv.f64_at(6, "R").unwrap() < 1.0);
}
