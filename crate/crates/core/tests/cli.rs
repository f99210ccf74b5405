use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flotation::cli::csv::TrajectoryCsv;
use flotation::dynamics::{EventKind, Regime};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flotation"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn flotation")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .to_string()
}

const CYLINDER_4: &str = r#"{
  "shape": {"kind": "cylinder", "h": 0.5, "area": 0.02},
  "rho": 250.0,
  "rho0": 1000.0,
  "sim": {"t_end": 1.0, "sample_interval": 0.005}
}"#;

#[test]
fn simulate_cylinder_reports_half_height_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "c.json", CYLINDER_4);
    let out = dir.path().join("c.csv");
    let o = run(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let summary = field(&text, "outcome: DoesNotSubmerge x_max =");
    let x_max: f64 = summary.split_whitespace().next().unwrap().parse().unwrap();
    assert!((x_max - 0.25).abs() <= 1e-8 * 0.25, "{text}");

    let csv = TrajectoryCsv::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let omega = (4.0 * 9.81 / 0.5f64).sqrt();
    let (_, t) = csv
        .events
        .iter()
        .find(|(k, _)| *k == EventKind::TurningPoint)
        .copied()
        .unwrap();
    assert!((t - PI / omega).abs() < 1e-8 * PI / omega);
    assert!(csv.rows.windows(2).all(|w| w[0].t < w[1].t));
    assert!(csv.rows.iter().all(|r| r.regime == Regime::PartlySubmerged));
}

#[test]
fn simulate_paraboloid_energy_column_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "p.json",
        r#"{"shape": {"kind": "paraboloid", "h": 0.4, "p": 0.1},
            "rho": 500, "rho0": 3000, "sim": {"t_end": 4.0}}"#,
    );
    let o = run(&["simulate", "--scenario", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = TrajectoryCsv::parse(&stdout(&o)).unwrap();
    let e0 = csv.rows[0].energy;
    let drift = csv
        .rows
        .iter()
        .map(|r| (r.energy - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-9 * 9.81 * 0.4, "drift {drift}");
    // the summary goes to stderr when the CSV takes stdout
    assert!(String::from_utf8_lossy(&o.stderr).contains("outcome: DoesNotSubmerge"));
}

#[test]
fn nondimensional_columns() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "c.json", CYLINDER_4);
    let o = run(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--nondimensional",
        "--t-end",
        "0.2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("T,X,V,regime,E\n"));
    let csv = TrajectoryCsv::parse(&text).unwrap();
    assert!(csv.nondimensional);
    // X'' = 1 − 4X for the cylinder at ratio 4: X = (1 − cos 2T) / 4
    for r in &csv.rows {
        assert!(
            (r.x - (1.0 - (2.0 * r.t).cos()) / 4.0).abs() < 1e-9,
            "T = {}",
            r.t
        );
    }
}

#[test]
fn simulate_output_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "c.json", CYLINDER_4);
    let a = run(&["simulate", "--scenario", sc.to_str().unwrap()]);
    let b = run(&["simulate", "--scenario", sc.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(TrajectoryCsv::parse(&text).unwrap().render(), text);
}

#[test]
fn malformed_scenarios_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{\"shape\": "),
        (
            "unknown.json",
            r#"{"shape": {"kind": "cone", "h": 1, "area": 1}, "rho": 1, "rho0": 2, "colour": "red"}"#,
        ),
        (
            "missing.json",
            r#"{"shape": {"kind": "cone", "h": 1}, "rho": 1, "rho0": 2}"#,
        ),
        (
            "negative.json",
            r#"{"shape": {"kind": "cone", "h": 1, "area": 1}, "rho": -1, "rho0": 2}"#,
        ),
        (
            "kind.json",
            r#"{"shape": {"kind": "sphere", "h": 1}, "rho": 1, "rho0": 2}"#,
        ),
        (
            "release.json",
            r#"{"shape": {"kind": "cone", "h": 1, "area": 1}, "rho": 1, "rho0": 2, "release": "throw"}"#,
        ),
        (
            "tol.json",
            r#"{"shape": {"kind": "cone", "h": 1, "area": 1}, "rho": 1, "rho0": 2, "sim": {"rel_tol": 0}}"#,
        ),
    ];
    for (name, json) in cases {
        let sc = write_scenario(dir.path(), name, json);
        for cmd in ["simulate", "classify", "verify"] {
            let o = run(&[cmd, "--scenario", sc.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(2), "{cmd} {name}");
        }
    }
    let o = run(&[
        "classify",
        "--scenario",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "u.json",
        "{\n  \"shape\": {\"kind\": \"cone\", \"h\": 1, \"area\": 1},\n  \"rho\": 1, \"rho0\": 2,\n  \"colour\": 3\n}",
    );
    let o = run(&["classify", "--scenario", sc.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("line 4"), "{err}");
}

#[test]
fn classify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"shape": {"kind": "cone", "h": 0.3, "area": 0.05}, "rho": 1000, "rho0": 3900}"#,
            "FullySubmerges",
            "4",
        ),
        (
            r#"{"shape": {"kind": "cylinder", "h": 1, "area": 1}, "rho": 1, "rho0": 2}"#,
            "Grazes",
            "2",
        ),
        (
            r#"{"shape": {"kind": "power_law", "h": 1, "k": 1, "d": 2}, "rho": 1, "rho0": 7}"#,
            "DoesNotSubmerge",
            "6",
        ),
    ];
    for (i, (json, outcome, critical)) in cases.iter().enumerate() {
        let sc = write_scenario(dir.path(), &format!("{i}.json"), json);
        let o = run(&["classify", "--scenario", sc.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(field(&text, "outcome:").starts_with(outcome), "{text}");
        assert_eq!(field(&text, "critical ratio:"), *critical);
    }
}

#[test]
fn verify_paths() {
    let dir = tempfile::tempdir().unwrap();
    let ok = [
        r#"{"shape": {"kind": "paraboloid", "h": 0.5, "p": 0.2}, "rho": 1, "rho0": 6}"#,
        r#"{"shape": {"kind": "cylinder", "h": 0.5, "area": 0.2}, "rho": 1, "rho0": 1.5}"#,
        r#"{"shape": {"kind": "cone", "h": 0.5, "area": 0.2}, "rho": 1, "rho0": 2.5}"#,
        r#"{"shape": {"kind": "cylinder", "h": 0.5, "area": 0.2}, "rho": 1, "rho0": 5, "release": "launch"}"#,
    ];
    for (i, json) in ok.iter().enumerate() {
        let sc = write_scenario(dir.path(), &format!("ok{i}.json"), json);
        let o = run(&["verify", "--scenario", sc.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{json}: {}", stdout(&o));
        let text = stdout(&o);
        let err: f64 = field(&text, "max |x_closed - x_numeric| / h:")
            .parse()
            .unwrap();
        assert!(err <= 1e-8);
        assert_eq!(field(&text, "verdict:"), "ok");
    }

    let unsupported = [
        r#"{"shape": {"kind": "cone", "h": 0.5, "area": 0.2}, "rho": 1, "rho0": 6, "release": "launch"}"#,
        r#"{"shape": {"kind": "power_law", "h": 1, "k": 1, "d": 2}, "rho": 1, "rho0": 7}"#,
        // the launch lattice degenerates at ratio 4
        r#"{"shape": {"kind": "paraboloid", "h": 1, "p": 1}, "rho": 1, "rho0": 4, "release": "launch"}"#,
    ];
    for (i, json) in unsupported.iter().enumerate() {
        let sc = write_scenario(dir.path(), &format!("un{i}.json"), json);
        let o = run(&["verify", "--scenario", sc.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(5), "{json}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn eval_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "p.json",
        r#"{"shape": {"kind": "paraboloid", "h": 0.5, "p": 0.2}, "rho": 1, "rho0": 6}"#,
    );
    let sc = sc.to_str().unwrap();
    let o = run(&["eval", "--scenario", sc, "--t", "0,0.05", "--t", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .filter(|f| *f != "partly")
                .map(|f| f.parse().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], vec![0.0, 0.0, 0.0, 0.0]);
    for r in &rows {
        assert!(r[3].abs() <= 1e-9 * 9.81 * 0.5);
    }
    // free fall over the first instants
    assert!((rows[1][1] - 0.5 * 9.81 * 0.05 * 0.05).abs() <= 1e-3 * rows[1][1]);

    let below = write_scenario(
        dir.path(),
        "c.json",
        r#"{"shape": {"kind": "cylinder", "h": 0.5, "area": 0.2}, "rho": 1, "rho0": 1.5}"#,
    );
    let o = run(&["eval", "--scenario", below.to_str().unwrap(), "--t", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--scenario", below.to_str().unwrap(), "--t", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# valid_until,"));
}

#[test]
fn verify_fails_with_loose_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "p.json",
        r#"{"shape": {"kind": "paraboloid", "h": 0.5, "p": 0.2}, "rho": 1, "rho0": 6}"#,
    );
    let o = run(&[
        "verify",
        "--scenario",
        sc.to_str().unwrap(),
        "--rel-tol",
        "1e-3",
        "--abs-tol",
        "1e-3",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert_eq!(field(&stdout(&o), "verdict:"), "FAILED");
}

#[test]
fn sweep_finds_cylinder_boundary() {
    let o = run(&[
        "sweep",
        "--shape",
        "cylinder",
        "--ratio-min",
        "1.5",
        "--ratio-max",
        "2.5",
        "--steps",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ratio,outcome,x_turn_over_h,t_event");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("1.5000000000000000e0,FullySubmerges,,"));
    let last: Vec<&str> = lines[5].split(',').collect();
    assert_eq!(&last[..2], ["2.5000000000000000e0", "DoesNotSubmerge"]);
    assert!((last[2].parse::<f64>().unwrap() - 0.8).abs() < 1e-9);
    let b: f64 = lines[6]
        .strip_prefix("# boundary,")
        .unwrap()
        .parse()
        .unwrap();
    assert!((b - 2.0).abs() <= 1e-6);

    let again = run(&[
        "sweep",
        "--shape",
        "cylinder",
        "--ratio-min",
        "1.5",
        "--ratio-max",
        "2.5",
        "--steps",
        "5",
    ]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn sweep_power_law_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&[
        "sweep",
        "--shape",
        "power-law",
        "--d",
        "2",
        "--ratio-min",
        "5",
        "--ratio-max",
        "7",
        "--steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("boundary: 6.0000000"),
        "{}",
        stdout(&o)
    );
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("# boundary,6.0000000"));
}

#[test]
fn sweep_rejects_bad_ranges() {
    for args in [
        ["--ratio-min", "0.5", "--ratio-max", "2", "--steps", "5"],
        ["--ratio-min", "3", "--ratio-max", "2", "--steps", "5"],
        ["--ratio-min", "2", "--ratio-max", "21", "--steps", "5"],
        ["--ratio-min", "1", "--ratio-max", "2", "--steps", "5"],
        ["--ratio-min", "1.5", "--ratio-max", "2", "--steps", "1"],
    ] {
        let mut full = vec!["sweep", "--shape", "cone"];
        full.extend(args);
        assert_eq!(run(&full).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn wp_examples() {
    let o = run(&[
        "wp",
        "--re",
        "1.8540746773013719",
        "--im",
        "0",
        "--g2",
        "1",
        "--g3",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let re = |s: String| -> f64 { s.split_whitespace().next().unwrap().parse().unwrap() };
    assert!((re(field(&text, "wp:")) - 0.5).abs() < 1e-12);
    assert!(re(field(&text, "wp':")).abs() < 1e-12);
    assert!((re(field(&text, "omega1:")) - 1.8540746773013719).abs() < 1e-12);

    let o = run(&[
        "wp", "--re", "0.37", "--im", "-1.21", "--g2", "-2", "--g3", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let res: f64 = field(&stdout(&o), "residual:").parse().unwrap();
    assert!(res <= 1e-10);
}

#[test]
fn wp_errors() {
    assert_eq!(
        run(&["wp", "--re", "0", "--im", "0", "--g2", "1", "--g3", "0"])
            .status
            .code(),
        Some(6)
    );
    // 2ω₃ for the lemniscatic lattice
    let o = run(&[
        "wp",
        "--re",
        "0",
        "--im",
        "3.7081493546027438",
        "--g2",
        "1",
        "--g3",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(6));
    // g2³ = 27 g3²
    assert_eq!(
        run(&["wp", "--re", "0.3", "--g2", "3", "--g3", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["wp", "--re", "NaN", "--g2", "1", "--g3", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["launch-rocket"]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        run(&["wp", "--re", "x", "--g2", "1", "--g3", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
