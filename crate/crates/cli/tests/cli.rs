use std::io::Write;
use std::process::{Command, Output};

fn cde_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cde-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn equilibria_lists_three_levels() {
    let out = cde_lab(&["equilibria"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "cde-lab/1");
    let h: Vec<f64> = v["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["H"].as_f64().unwrap())
        .collect();
    assert_eq!(h, vec![0.0, -0.125, -0.125]);
}

#[test]
fn equilibria_csv_has_header() {
    let out = cde_lab(&["equilibria", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,u,v,a,b,H\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_homoclinic_passes() {
    let out = cde_lab(&["verify", "homoclinic"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("INFO alpha = 1.2247448713915"));
    assert!(text.contains("ODE residual"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn ground_state_emits_orbit_record() {
    let out = cde_lab(&["ground-state", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "cde-lab/1");
    assert_eq!(v["T"].as_f64().unwrap(), 10.0);
    assert_eq!(v["field"]["K"].as_u64().unwrap(), 63);
    let delta = v["field"]["energy"]["total"].as_f64().unwrap();
    assert!((delta - 9.0 * std::f64::consts::PI / 32.0).abs() < 1e-3);
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn integrate_backward_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = cde_lab(&[
        "integrate",
        "--state",
        "0.5,0,0.1,-0.1",
        "--t-final",
        "-0.5",
        "--dt",
        "0.01",
        "--method",
        "rk4",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u,v,a,b,H"));
    assert_eq!(lines.count(), 51);
    assert!(text.trim_end().lines().last().unwrap().starts_with("-0.5,"));
}

#[test]
fn invalid_inputs_exit_two() {
    for args in [
        vec!["ground-state", "--epsilon", "-1"],
        vec!["lyapunov", "--amplitudes", "-0.1"],
        vec!["verify", "no-such-suite"],
        vec!["integrate", "--state", "1,2,3", "--t-final", "1"],
        vec!["integrate", "--state", "1,0,0,0", "--t-final", "1", "--method", "euler"],
        vec!["transform", "--from", "cylinder", "--to", "euclidean", "--input", "/nonexistent.csv"],
    ] {
        let out = cde_lab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn solver_failure_exits_one() {
    let out = cde_lab(&["lyapunov", "--amplitudes", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn transform_cylinder_to_sphere_carries_convention() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "t,u,a,b").unwrap();
    for k in 0..=40 {
        let t = -4.0 + 0.2 * k as f64;
        let u = t.cosh().powf(-0.5);
        writeln!(f, "{t:?},{u:?},{:?},{:?}", 0.1 * u, 0.2 * u).unwrap();
    }
    f.flush().unwrap();
    let out = cde_lab(&["transform", "--from", "cylinder", "--to", "sphere", "--input", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["convention"]["scalar_weight"].as_f64(), Some(0.5));
    let u: Vec<f64> = v["profile"]["u"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // cosh^{-1/2} on the cylinder is the constant 1 on the sphere.
    assert!(u.iter().all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn continuation_table() {
    let out = cde_lab(&["continuation", "--eps-grid", "0.2,0.1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "epsilon,T,delta_eps,gap,converged");
    assert!(rows[1].starts_with("0.2,5.0,") && rows[1].ends_with(",true"));
}
