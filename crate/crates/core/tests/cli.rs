use std::fs;
use std::path::Path;

use clap::Parser;
use weylgas::cli::{execute, exit_code, run, Cli, RunConfig, EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE};
use weylgas::Error;

const SQUARE: &str = r#"
[domain]
kind = "rectangle"
lengths = [1.0, 1.0]

[basis]
source = "analytic"
k = 256

[run]
n = [64, 128]
symbol = "product"

[samples]
y_radius = 2.0
y_spacing = 0.5
x_per_axis = 4
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("weylgas").chain(args.iter().copied())).unwrap()
}

#[test]
fn spectrum_then_cache_hit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SQUARE);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    let first = execute(&cli(&["spectrum", "--config", &cfg, "--out", &out_s])).unwrap();
    assert!(!first.cached);
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,lambda");
    assert_eq!(lines.len(), 257);
    let lambdas: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));

    let second = execute(&cli(&["spectrum", "--config", &cfg, "--out", &out_s])).unwrap();
    assert!(second.cached);
    assert!(second.notes.iter().any(|n| n == "cached"));
    assert!(second.timings.iter().all(|t| t.stage != "basis_solve"));
    assert_eq!(first.basis_hash, second.basis_hash);
    assert_eq!(csv, fs::read_to_string(out.join("spectrum.csv")).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("spectrum_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cached"], true);
    assert_eq!(manifest["outputs"][0], "spectrum.csv");
}

#[test]
fn localweyl_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SQUARE);
    let mut tables = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let m = execute(&cli(&["localweyl", "--config", &cfg, "--out", &out.to_string_lossy()])).unwrap();
        assert!(m.checks.iter().any(|c| c.name == "localweyl_path_gap" && c.pass));
        assert!(m.tolerances.contains_key("localweyl_rel_err"));
        tables.push(fs::read(out.join("localweyl.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables.remove(0)).unwrap();
    assert!(text.starts_with("N,lhs_direct,lhs_wigner,rhs,abs_err,rel_err,path_gap,flag"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",OK")));
}

#[test]
fn constant_symbol_rows_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SQUARE.replace("\"product\"", "\"constant\""));
    let out = dir.path().join("out");
    execute(&cli(&["localweyl", "--config", &cfg, "--out", &out.to_string_lossy()])).unwrap();
    let text = fs::read_to_string(out.join("localweyl.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<&str> = line.split(',').collect();
        let (lhs, rhs): (f64, f64) = (v[1].parse().unwrap(), v[3].parse().unwrap());
        assert!((lhs - 1.0).abs() < 1e-12 && (rhs - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn weyl_and_correlation_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SQUARE);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    let w = execute(&cli(&["weyl", "--config", &cfg, "--out", &out_s])).unwrap();
    assert_eq!(w.checks[0].name, "weyl_ratio_gap");
    assert!(fs::read_to_string(out.join("weyl.csv")).unwrap().starts_with("k,lambda_k,h_k,weyl_ratio"));
    let c = execute(&cli(&["correlation", "--config", &cfg, "--out", &out_s])).unwrap();
    assert!(c.budgets.contains_key("q_tail_l2"));
    let summary = fs::read_to_string(out.join("correlation_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(out.join("q_field.csv").exists());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();

    let cfg = write_config(dir.path(), SQUARE);
    let e = execute(&cli(&["exchange", "--config", &cfg, "--out", &out_s])).unwrap_err();
    assert!(matches!(e, Error::DimensionUnsupported(2)));
    assert_eq!(exit_code(&e), EXIT_CONFIG);

    let cfg = write_config(dir.path(), &SQUARE.replace("n = [64, 128]", "n = [300]"));
    let e = execute(&cli(&["localweyl", "--config", &cfg, "--out", &out_s])).unwrap_err();
    assert!(matches!(e, Error::NTooLarge { n: 300, .. }));

    let cfg = write_config(dir.path(), &SQUARE.replace("\"product\"", "\"nope\""));
    assert_eq!(run(cli(&["localweyl", "--config", &cfg, "--out", &out_s])), EXIT_CONFIG);

    let cfg = write_config(dir.path(), &SQUARE.replace("[samples]", "[samples]\nbogus = 1"));
    assert_eq!(run(cli(&["spectrum", "--config", &cfg, "--out", &out_s])), EXIT_CONFIG);

    assert_eq!(run(cli(&["spectrum", "--out", &out_s])), EXIT_CONFIG);
}

#[test]
fn grid_guard_and_empty_basis() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let disk = r#"
[domain]
kind = "disk"
radius = 1.0

[basis]
source = "grid"
resolution = 10.0
k = 5000

[run]
"#;
    let cfg = write_config(dir.path(), disk);
    let e = execute(&cli(&["spectrum", "--config", &cfg, "--out", &out_s])).unwrap_err();
    assert!(matches!(e, Error::KTooLarge { .. }), "{e}");
    assert!(fs::read_dir(out.join("cache")).unwrap().all(|f| {
        let name = f.unwrap().file_name();
        !name.to_string_lossy().ends_with(".wqeb")
    }));

    let cfg = write_config(dir.path(), &disk.replace("k = 5000", "k = 0"));
    let e = execute(&cli(&["weyl", "--config", &cfg, "--out", &out_s])).unwrap_err();
    assert!(matches!(e, Error::InsufficientSpectrum(_)));
}

#[test]
fn tolerance_breach_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let tight = format!("{SQUARE}\n[check]\nweyl_ratio_2d = 1e-9\n");
    let cfg = write_config(dir.path(), &tight);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    assert_eq!(run(cli(&["weyl", "--config", &cfg, "--out", &out_s])), EXIT_OK);
    assert_eq!(run(cli(&["weyl", "--config", &cfg, "--out", &out_s, "--check"])), EXIT_TOLERANCE);
}

#[test]
fn exchange_limit_source() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[domain]
kind = "rectangle"
lengths = [1.0, 1.0, 1.0]

[basis]
k = 64

[run]
m = 2
exchange_source = "limit"

[samples]
y_radius = 60.0
y_spacing = 0.01
x_margin = 0.25
x_per_axis = 1
shells_polar = 2
shells_azimuth = 1
"#;
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let m = execute(&cli(&["exchange", "--config", &cfg, "--out", &out.to_string_lossy(), "--check"])).unwrap();
    assert!(m.all_pass(), "{:?}", m.checks);
    let csv = fs::read_to_string(out.join("exchange.csv")).unwrap();
    assert!(csv.starts_with("source,N,m,a_N,b_N,E_x,LDA,LDA_limit,rel_gap,rel_gap_limit\nlimit,0,2,0,0,"));
}

#[test]
fn config_hash_tracks_content() {
    let base = Path::new(".");
    let a = RunConfig::parse(SQUARE, base).unwrap();
    let b = RunConfig::parse(&SQUARE.replace("k = 256", "k = 257"), base).unwrap();
    assert_ne!(a.hash(), b.hash());
    let domain = a.domain_spec().unwrap();
    assert_ne!(a.basis_key(&domain), b.basis_key(&domain));
    let mut c = a.clone();
    c.run.symbol = "constant".into();
    assert_eq!(a.basis_key(&domain), c.basis_key(&domain));
}

#[test]
fn exchange_from_basis_skips_heavy() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[domain]
kind = "rectangle"
lengths = [1.0, 1.0, 1.0]

[basis]
k = 2048

[run]
n = [64, 4096]
m = 2
skip_heavy = true

[samples]
y_radius = 10.0
y_spacing = 0.2
x_margin = 0.25
x_per_axis = 2
shells_polar = 4
shells_azimuth = 8
"#;
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let m = execute(&cli(&["exchange", "--config", &cfg, "--out", &out.to_string_lossy()])).unwrap();
    assert!(m.notes.iter().any(|n| n.contains("4096")));
    let csv = fs::read_to_string(out.join("exchange.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let v: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(&v[..3], &["basis", "64", "2"]);
    let (a, b): (usize, usize) = (v[3].parse().unwrap(), v[4].parse().unwrap());
    assert_eq!(2 * a + b, 64);
    let e_x: f64 = v[5].parse().unwrap();
    assert!(e_x < 0.0);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.domain_spec().unwrap();
            count += 1;
        }
    }
    assert!(count >= 5);
}
