use std::path::PathBuf;
use std::process::{Command, Output};

fn laminar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laminar"))
        .args(args)
        .env("LAMINAR_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse::<f64>().unwrap()))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("laminar-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn bound_check_on_two_layers() {
    let o = laminar(&["bound-check", "a=[1,1/9]"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = stdout(&o);
    assert!((field(&r, "norm_upper") - 0.5).abs() < 1e-12);
    assert!((field(&r, "bound") - 0.5f64.atanh().tan()).abs() < 1e-14);
    assert!(r.contains("status PASS"));
}

#[test]
fn fr_table_at_quarter_pi_approaches_one() {
    let dir = scratch_dir("fr");
    let o = laminar(&[
        "fr-table",
        "x=0.7853981633974483",
        "r=1",
        "n_max=20",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("fr_table.csv")).unwrap();
    let lower: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lower.len(), 20);
    assert!(lower.windows(2).all(|w| w[1] > w[0]));
    assert!(lower[19] > 0.9 && lower[19] < 1.0);
    assert!(dir.join("config.json").exists());
}

#[test]
fn counterexample_writes_medium_and_certificate() {
    let dir = scratch_dir("ce");
    let o = laminar(&["counterexample", "alpha=1.5707963267948966", "N=10", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(field(&stdout(&o), "norm_lower") >= 10.0);
    let medium = std::fs::read_to_string(dir.join("medium.json")).unwrap();
    let m = laminar::LaminarMedium::from_json(&medium).unwrap();
    assert!(m.lower_bound() > 0.5 && m.upper_bound() < 2.0);
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["parts"], 84);
}

#[test]
fn oracle_test_output_is_reproducible() {
    let (d1, d2) = (scratch_dir("o1"), scratch_dir("o2"));
    for d in [&d1, &d2] {
        let o = laminar(&["oracle-test", "seed=11", "layers=5", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stdout(&o));
    }
    let a = std::fs::read(d1.join("oracle.csv")).unwrap();
    let b = std::fs::read(d2.join("oracle.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.len() > 1000);
}

#[test]
fn simulate_wave_writes_trains() {
    let dir = scratch_dir("wave");
    let o = laminar(&[
        "simulate-wave",
        "a=[1,0.5,2]",
        "source=-1",
        "probes=[-0.5,0.5,2.5]",
        "t_max=20",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("train_2.csv")).unwrap();
    assert!(csv.starts_with("t,amplitude\n"));
    assert!(std::fs::read_to_string(dir.join("train_0.svg")).unwrap().contains("<svg"));
}

#[test]
fn simulate_schrodinger_free_ratio() {
    let o = laminar(&[
        "simulate-schrodinger",
        "t_final=2",
        "half_width=20",
        "sponge_width=40",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let peak = field(&stdout(&o), "max_ratio");
    assert!((peak / 0.28209 - 1.0).abs() < 0.02, "{peak}");
}

#[test]
fn config_errors_exit_two() {
    let o = laminar(&["bound-check", "a=[1,-2]"]);
    assert_eq!(o.status.code(), Some(2));
    let o = laminar(&["bound-check", "degree_cap=abc", "a=[1,2]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree_cap"));
    let o = laminar(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    let o = laminar(&["bound-check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_arguments() {
    let dir = scratch_dir("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("run.json");
    std::fs::write(&file, r#"{"a": [1, 4], "degree_cap": 12}"#).unwrap();
    let out = dir.join("out");
    let o = laminar(&[
        "bound-check",
        "--config",
        file.to_str().unwrap(),
        "degree_cap=20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["degree_cap"], 20);
    assert_eq!(echo["a"], serde_json::json!([1.0, 4.0]));
}

#[test]
fn failing_assertion_exits_one() {
    // A sponge this thin lets the a ≡ 4 field reach the edge.
    let o = laminar(&[
        "simulate-schrodinger",
        "a=[4]",
        "t_final=3",
        "half_width=10",
        "sponge_width=2",
        "sponge_strength=1",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("sponge violation"));
}
