use std::path::Path;
use std::process::{Command, Output};

use brn_core::output::OutputBundle;

fn brn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brn"))
        .args(args)
        .output()
        .expect("run brn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn eval_baseline_is_epidemic() {
    let o = brn(&["eval", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = OutputBundle::from_json(&stdout(&o)).unwrap();
    let v = b.verdict.unwrap();
    assert!((v.i0 - 81.60).abs() / 81.60 < 0.01);
    assert!(v.epidemic);
    assert_eq!(b.metadata.command, "eval");
    assert_eq!(b.metadata.config_hash.len(), 64);
}

#[test]
fn eval_corner_scenario_is_subcritical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[female]\ndelta = 208\n[male]\ndelta = 26\n",
    );
    let o = brn(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("R0       0.90"), "{text}");
    assert!(text.contains("subcritical"));
}

#[test]
fn unknown_key_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[female]\nalpha1 = 1.3\nalpha9 = 0.5\n",
    );
    let o = brn(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("alpha9") && err.contains("line 3"), "{err}");
}

#[test]
fn invalid_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[male]\nbeta = -1\n");
    let o = brn(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
    let o = brn(&["eval", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quadrature_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.toml",
        "[quadrature]\norder = 2\ntolerance = 1e-15\nmax_refinements = 1\n",
    );
    let o = brn(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("quadrature"));
}

#[test]
fn trajectory_rows() {
    let o = brn(&["trajectory", "--iad", "7", "--step", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["ia", "LVl", "ptr", "ptr_x1000", "G", "NCA"]
    );
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][4], 1.0);
    assert_eq!(rows[0][5], 82.0);
    let peak = rows.iter().find(|r| r[0] == 6.0).unwrap();
    assert!((peak[1] - 4.8).abs() < 1e-12);
    assert_eq!(rows.last().unwrap()[0], 7.0);
    let max = rows.iter().max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
    assert!(
        (max[3] - 8.0).abs() < 0.05 && (max[0] - 0.4).abs() < 0.02,
        "{max:?}"
    );
}

#[test]
fn trajectory_flag_errors_exit_2() {
    assert_eq!(brn(&["trajectory", "--step", "0"]).status.code(), Some(2));
    assert_eq!(brn(&["trajectory", "--iad", "41"]).status.code(), Some(2));
}

#[test]
fn phase_rows() {
    let o = brn(&["phase", "--format", "json", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = OutputBundle::from_json(&stdout(&o)).unwrap().phase.unwrap();
    let json = |r: &brn_core::output::PhaseRow| serde_json::to_string(&r.kind).unwrap();
    let fixed: Vec<_> = rows
        .iter()
        .filter(|r| json(r) == "\"fixed_point\"")
        .collect();
    assert_eq!(fixed.len(), 3);
    assert!((fixed[0].delta_m - 81.60).abs() / 81.60 < 0.01);
    assert_eq!(fixed[0].delta_m, fixed[0].delta_f);
    let hyper = rows.iter().filter(|r| json(r) == "\"hyperbola\"").count();
    assert_eq!(hyper, 15);
    let corner = |dm: f64, df: f64| {
        rows.iter()
            .find(|r| json(r) == "\"corner\"" && r.delta_m == dm && r.delta_f == df)
            .unwrap()
            .r0
    };
    assert!((corner(26.0, 208.0) - 0.90).abs() < 0.01);
    assert!((corner(104.0, 468.0) - 2.70).abs() < 0.02);
    assert_eq!(brn(&["phase", "--dm-min", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_contract() {
    let o = brn(&["sweep", "--factors", "0.5,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let i0: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    for (got, want) in i0.iter().zip([163.2, 81.60, 40.8]) {
        assert!((got - want).abs() / want < 0.01, "{got} vs {want}");
    }

    let o = brn(&["sweep", "--factors", ""]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "factor,mode,integral_f,integral_m,i0\n");

    let o = brn(&["sweep", "--factors", "500"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(">= 1"));

    assert_eq!(brn(&["sweep", "--factors", "-1"]).status.code(), Some(2));
}

#[test]
fn simulate_contract() {
    assert_eq!(brn(&["simulate", "--samples", "0"]).status.code(), Some(2));

    let args = [
        "simulate",
        "--samples",
        "3000",
        "--seed",
        "5",
        "--sex",
        "female",
    ];
    let a = brn(&args);
    let b = brn(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let bundle = OutputBundle::from_json(&stdout(&a)).unwrap();
    assert_eq!(bundle.metadata.seed, Some(5));
    let row = bundle.simulation.unwrap()[0];
    assert!(row.quadrature > 0.0);
    assert_eq!(row.z, Some(row.abs_diff / row.std_error));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.toml", "[female]\ndelta = 0\n");
    assert_eq!(
        brn(&["simulate", "--config", &cfg, "--samples", "10"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn out_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = brn(&["sweep", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let bundle = OutputBundle::from_json(&text).unwrap();
    assert_eq!(bundle.to_json().unwrap(), text);
}

#[test]
fn config_hash_tracks_file_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.toml", "");
    let b = write(dir.path(), "b.toml", "# comment\n");
    let hash = |cfg: &str| {
        let o = brn(&["eval", "--config", cfg, "--format", "json"]);
        OutputBundle::from_json(&stdout(&o))
            .unwrap()
            .metadata
            .config_hash
    };
    let (ha, hb) = (hash(&a), hash(&b));
    assert_eq!(
        ha,
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
    assert_ne!(ha, hb);
}
