use std::process::{Command, Output};

fn duffkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duffkg")).args(args).output().expect("spawn duffkg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Second line of a two-line CSV as a header-keyed lookup.
fn row(o: &Output) -> impl Fn(&str) -> String {
    let text = stdout(o);
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let values: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    move |key| values[header.iter().position(|h| h == key).unwrap()].clone()
}

#[test]
fn classify_kminus_blows_up() {
    let o = duffkg(&["classify", "--u0", "1.5", "--u1", "0", "--gamma", "1"]);
    assert!(o.status.success());
    assert_eq!(row(&o)("kind"), "BlowUp");
}

#[test]
fn critical_gamma_bracket_in_unit_interval() {
    let o = duffkg(&["critical-gamma", "--u0", "0", "--u1", "1", "--width", "1e-6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = row(&o);
    let lo: f64 = r("lo").parse().unwrap();
    let hi: f64 = r("hi").parse().unwrap();
    assert!(0.0 <= lo && lo < hi && hi <= 1.0);
    assert!(hi - lo <= 1e-6);
}

#[test]
fn critical_gamma_mirrors_and_rejects() {
    let a = duffkg(&["critical-gamma", "--u0", "0", "--u1", "1", "--width", "1e-5"]);
    let b = duffkg(&["critical-gamma", "--u0", "0", "--u1", "-1", "--width", "1e-5"]);
    assert_eq!(row(&a)("lo"), row(&b)("lo"));
    let o = duffkg(&["critical-gamma", "--u0", "0.1", "--u1", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn critical_gamma_n3_has_two_rows() {
    let o = duffkg(&["critical-gamma", "--u0", "-1.5", "--u1", "2", "--width", "1e-5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let targets: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(targets, ["gamma0", "gamma1"]);
}

#[test]
fn kg_ground_below_constant_level() {
    let o = duffkg(&["kg-ground", "--dim", "1", "--L", "8", "--n", "256"]);
    assert!(o.status.success());
    let r = row(&o);
    let d: f64 = r("d").parse().unwrap();
    assert!(d < 2.0 && d > 1.0, "d = {d}");
    assert_eq!(r("volume_over_4").parse::<f64>().unwrap(), 2.0);
}

#[test]
fn kg_witness_reports_negative_alpha() {
    let o = duffkg(&["kg-witness", "--L", "8", "--n", "64"]);
    let r = row(&o);
    assert!(r("alpha").parse::<f64>().unwrap() < 0.0);
    assert!(r("K").parse::<f64>().unwrap().abs() < 1e-10);
    assert!(r("J").parse::<f64>().unwrap() < 2.0);
}

#[test]
fn kg_fate_rows() {
    let o = duffkg(&["kg-fate", "--n", "64", "--u0", "-1", "--u1", "4.65", "--gamma", "1", "--d-upper", "1.32"]);
    assert!(o.status.success());
    let r = row(&o);
    assert_eq!(r("kind"), "BlowUp");
    assert!(r("energy").parse::<f64>().unwrap() < 0.0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(duffkg(&["classify", "--bogus"]).status.code(), Some(2));
    assert_eq!(duffkg(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(duffkg(&["classify", "--u0", "0"]).status.code(), Some(2));
    assert_eq!(duffkg(&["classify", "--u0", "0", "--u1", "0", "--gamma", "-1"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    // a one-probe budget cannot settle the bracket
    let o = duffkg(&["critical-gamma", "--u0", "0", "--u1", "1", "--t-max", "0.01", "--width", "1e-3"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let o = duffkg(&[
        "simulate",
        "--u0",
        "0",
        "--u1",
        "0.5",
        "--gamma",
        "0.2",
        "--t-max",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,u,v,E,dissipation\n"));
    let last_t: f64 = text.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((last_t - 5.0).abs() < 1e-12);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let from_file = dir.path().join("file.csv");
    std::fs::write(&cfg, format!("# test\nt_max = 2\nout = {}\n", from_file.display())).unwrap();
    let o = duffkg(&["simulate", "--config", cfg.to_str().unwrap(), "--u0", "0", "--u1", "0.1"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&from_file).unwrap();
    assert!(text.lines().last().unwrap().starts_with("2.0000000000000000e0,"));

    let from_flag = dir.path().join("flag.csv");
    let o = duffkg(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--t-max",
        "1",
        "--out",
        from_flag.to_str().unwrap(),
        "--u0",
        "0",
        "--u1",
        "0.1",
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&from_flag).unwrap();
    assert!(text.lines().last().unwrap().starts_with("1.0000000000000000e0,"));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = duffkg(&["classify", "--config", cfg.to_str().unwrap(), "--u0", "0", "--u1", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn basin_output_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let pgm = dir.path().join(format!("{tag}.pgm"));
        let o = duffkg(&[
            "basin",
            "--nx",
            "40",
            "--ny",
            "30",
            "--gamma",
            "0.5",
            "--threads",
            threads,
            "--out",
            csv.to_str().unwrap(),
            "--pgm",
            pgm.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (std::fs::read(csv).unwrap(), std::fs::read(pgm).unwrap())
    };
    let a = run("1", "a");
    let b = run("4", "b");
    assert_eq!(a, b);
    assert!(a.1.starts_with(b"P5\n40 30\n255\n"));
    assert_eq!(a.1.len(), b"P5\n40 30\n255\n".len() + 1200);
}
