use std::fs;
use std::process::{Command, Output};

use ratecert::iqc::IqcKind;
use ratecert::sweep::read_csv;

fn ratecert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratecert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn certify_gradient_rate() {
    let o = ratecert(&[
        "certify", "--m", "1", "--L", "10", "--c", "1", "--grid", "10", "--iqc", "sector",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rho: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho_star"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((rho - 0.9).abs() <= 1e-3, "{text}");
    for key in ["cond_p", "lambda", "grid", "bisection_iters"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn certify_exit_codes() {
    let o = ratecert(&[
        "certify", "--m", "1", "--L", "10", "--c", "2.1", "--iqc", "sector",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("no certificate"));

    let o = ratecert(&["certify", "--m", "1", "--L", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    assert_eq!(
        ratecert(&["certify", "--c", "1.1", "--c2", "1.2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ratecert(&["certify", "--kappa", "4", "--m", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ratecert(&["certify", "--grid", "ten"]).status.code(),
        Some(1)
    );
}

#[test]
fn certify_json_and_asymmetric_interval() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let o = ratecert(&[
        "certify",
        "--kappa",
        "10",
        "--c1",
        "1.2",
        "--c2",
        "1.1",
        "--json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(printed, saved);
    let lo = printed["interval"]["lo"].as_f64().unwrap();
    let hi = printed["interval"]["hi"].as_f64().unwrap();
    assert!((lo - 1.0 / 12.0).abs() < 1e-15 && (hi - 0.11).abs() < 1e-15);
}

#[test]
fn sweep_kappa_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let svg = dir.path().join("k.svg");
    let o = ratecert(&[
        "sweep-kappa",
        "--c",
        "1",
        "--kappa-min",
        "2",
        "--kappa-max",
        "100",
        "--kappa-count",
        "3",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("kappa,c,rho_star,feasible,cond_p\n"));
    let rows = read_csv(text.as_bytes(), 10, IqcKind::Sector).unwrap();
    let want = [0.5, 1.0 - 1.0 / 200f64.sqrt(), 0.99];
    for (r, w) in rows.iter().zip(want) {
        assert!((r.rho_star.unwrap() - w).abs() <= 2e-4, "{r:?}");
    }
    let chart = fs::read_to_string(&svg).unwrap();
    assert!(chart.contains("<svg") && chart.contains("polyline"));

    // the chart is a side output only
    let plain = ratecert(&[
        "sweep-kappa",
        "--kappa-min",
        "2",
        "--kappa-max",
        "100",
        "--kappa-count",
        "3",
    ]);
    assert_eq!(stdout(&plain), text);
}

#[test]
fn sweep_kappa_marks_infeasible_rows() {
    let o = ratecert(&[
        "sweep-kappa",
        "--c",
        "1.8",
        "--kappa-min",
        "50",
        "--kappa-max",
        "50",
        "--kappa-count",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "kappa,c,rho_star,feasible,cond_p\n50.0000000000,1.80000000000,,false,\n"
    );
}

#[test]
fn sweep_c_runs_and_validates_range() {
    let o = ratecert(&[
        "sweep-c",
        "--kappa",
        "2",
        "--c-min",
        "1",
        "--c-max",
        "1.9",
        "--c-count",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_csv(o.stdout.as_slice(), 10, IqcKind::Sector).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.feasible));

    assert_eq!(
        ratecert(&["sweep-c", "--c-max", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        ratecert(&["sweep-kappa", "--kappa-min", "0.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ratecert(&["sweep-c", "--out", "/nonexistent/dir/out.csv"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_summary() {
    let o = ratecert(&[
        "simulate", "--kappa", "10", "--c", "1", "--trials", "100", "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,seed,max_ratio,violated"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 100);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        assert_eq!(r[1], (5 + i).to_string());
        assert!(r[2].parse::<f64>().unwrap() <= 1.0);
        assert_eq!(r[3], "false");
    }

    let again = ratecert(&[
        "simulate", "--kappa", "10", "--c", "1", "--trials", "100", "--seed", "5",
    ]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn simulate_exit_codes() {
    assert_eq!(
        ratecert(&["simulate", "--kappa", "10", "--c", "2.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ratecert(&["simulate", "--policy", "chaotic"]).status.code(),
        Some(1)
    );

    let o = ratecert(&["simulate", "--kappa", "10", "--steps", "0", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        assert_eq!(line.split(',').nth(2), Some("1.00000000000"));
    }
}

#[test]
fn config_file_presets_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ratecert.cfg");
    fs::write(&cfg, "# shared settings\nkappa = 10\nc = 2.1\ntrials = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(ratecert(&["certify", "--config", c]).status.code(), Some(2));
    assert_eq!(
        ratecert(&["certify", "--config", c, "--c", "1"])
            .status
            .code(),
        Some(0)
    );
    let o = ratecert(&["simulate", "--config", c, "--c", "1.2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);

    let o = ratecert(&["--show-config"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "grid=10"));
}
