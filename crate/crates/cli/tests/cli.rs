use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use arrayloc_cli::config::{load_scenario, parse_config};
use arrayloc_cli::experiments::{self, Variant};
use arrayloc_cli::table::Cell;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const POINT: &str = r#"
schema = 1
experiment = "point"

[signal]
carrier = "100 MHz"
beta = "1 MHz"

[array]
kind = "ula"
elements = 4
diameter = "0.5 m"

[pose]
x = "0 m"
y = "0 m"
orientation = "0 deg"

[[anchor]]
x = "10 m"
y = "5 m"
snr = "20 dB"
"#;

#[test]
fn bundled_configs_load() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.experiment.is_some(), "{}", path.display());
    }
    let cfg = load_scenario(&configs().join("fig5_parallel_grid.toml")).unwrap();
    assert_eq!(cfg.scenario.unwrap().anchors.len(), 5);
    assert_eq!(
        experiments::grid_points(
            &load_scenario(&configs().join("fig5_parallel_grid.toml")).unwrap()
        )
        .unwrap()
        .len(),
        241 * 241
    );
}

#[test]
fn inline_config_parses() {
    assert!(parse_config(POINT, Path::new(".")).is_ok());
}

#[test]
fn bare_numbers_are_rejected() {
    let text = POINT.replace(r#"beta = "1 MHz""#, "beta = 1e6");
    assert!(parse_config(&text, Path::new(".")).is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    let text = POINT.replace("[pose]", "[pose]\nheading = \"3 deg\"");
    assert!(parse_config(&text, Path::new(".")).is_err());
}

#[test]
fn wideband_moving_agent_is_rejected() {
    let text = POINT.replace(r#"beta = "1 MHz""#, r#"beta = "200 MHz""#)
        + "\n[motion]\nspeed = \"30 m/s\"\ndirection = \"0 deg\"\nreference_time = \"0 s\"\n";
    let err = parse_config(&text, Path::new("."))
        .err()
        .expect("beta above carrier with motion");
    assert!(
        err.to_string().contains("carrier") || err.to_string().contains("beta"),
        "{err}"
    );
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(v) => *v,
        Cell::Int(v) => *v as f64,
        Cell::Text(t) => panic!("text cell {t}"),
    }
}

#[test]
fn point_matches_far_field_by_hand() {
    let cfg = load_scenario(&configs().join("point.toml")).unwrap();
    let t = experiments::point(&cfg, Variant::FarField).unwrap();
    let row = &t.rows[0];
    let get = |name: &str| num(&row[t.column(name).unwrap()]);

    // ULA of 6 elements over 0.5 m at 30 deg, reference (3, -4); anchors on y = 20.
    let (px, py, psi) = (3.0_f64, -4.0_f64, PI / 6.0);
    let elems: Vec<(f64, f64)> = (0..6)
        .map(|k| -0.25 + 0.1 * k as f64)
        .map(|d| (d * psi.cos(), d * psi.sin()))
        .collect();
    let c = 299_792_458.0_f64;
    let lambda = 8.0 * PI * PI * 1000.0 / (c * c);
    let (b2, f2) = (1e12, 1e16);
    let mut j = [[0.0; 2]; 2];
    for ax in [-20.0_f64, -10.0, 0.0, 10.0, 20.0] {
        let (dx, dy) = (ax - px, 20.0 - py);
        let r = (dx * dx + dy * dy).sqrt();
        let u = [dx / r, dy / r];
        let n = [-u[1], u[0]];
        let proj: Vec<f64> = elems.iter().map(|e| e.0 * n[0] + e.1 * n[1]).collect();
        let mean = proj.iter().sum::<f64>() / 6.0;
        let var = proj.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 6.0;
        for a in 0..2 {
            for b in 0..2 {
                j[a][b] += lambda * 6.0 * (b2 * u[a] * u[b] + f2 * var / (r * r) * n[a] * n[b]);
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[0][1];
    let speb = (j[0][0] + j[1][1]) / det;
    for (got, want) in [
        (get("j_xx"), j[0][0]),
        (get("j_xy"), j[0][1]),
        (get("j_yy"), j[1][1]),
        (get("speb"), speb),
    ] {
        assert!(((got - want) / want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn agent_on_anchor_line_is_singular() {
    // Anchors and agent all on y = 20 with a ULA along the line give no cross-range information.
    let cfg = load_scenario(&configs().join("point.toml")).unwrap();
    let mut s = cfg.scenario.clone().unwrap();
    s.pose.reference = arrayloc::Position2D::new(30.0, 20.0);
    s.pose.orientation = 0.0;
    let sp = experiments::position_efim(&s, Variant::FarField, None)
        .unwrap()
        .speb();
    assert!(sp.singular && sp.value.is_infinite());
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_arrayloc"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let point = configs().join("point.toml");
    let ok = run(&["point", "--config", point.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let csv = String::from_utf8(ok.stdout).unwrap();
    assert!(csv.lines().next().unwrap().contains("root_speb"));

    assert_eq!(run(&["grid"]).status.code(), Some(1));
    let wrong = run(&["grid", "--config", point.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&wrong.stderr).is_empty());

    let bad = std::env::temp_dir().join(format!("arrayloc-bad-{}.toml", std::process::id()));
    std::fs::write(&bad, POINT.replace(r#"snr = "20 dB""#, "snr = 100")).unwrap();
    assert_eq!(
        run(&["point", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let _ = std::fs::remove_file(&bad);
}

#[test]
fn rank_table_runs_without_config() {
    let out = run(&["rank-table"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with("true")), "{csv}");
}
