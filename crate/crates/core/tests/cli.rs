mod common;

use std::fs;

use common::run_ppe;

fn args(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# unit modulus\nu = 1\ndomain = 0 1.5\nsamples = 4\n").unwrap();
    let base = format!("forward --config {} --rho cos(theta)", cfg.display());

    let (code, out, _) = run_ppe(&args(&base));
    assert_eq!(code, 0);
    let from_file = String::from_utf8(out).unwrap();
    assert_eq!(from_file.lines().count(), 1 + 4);

    let (code, out, _) = run_ppe(&args(&format!("{base} --samples 7")));
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1 + 7);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "u = 1\ncolour = red\n").unwrap();
    let (code, _, err) = run_ppe(&args(&format!("critical --config {} --domain 0 1", cfg.display())));
    assert_eq!(code, 2);
    assert!(String::from_utf8(err).unwrap().contains("colour"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maximal.json");
    let cmd = "maximal --u 1 --domain 0 1.5";
    let (_, stdout, _) = run_ppe(&args(cmd));
    let (code, quiet, _) = run_ppe(&args(&format!("{cmd} -o {}", path.display())));
    assert_eq!(code, 0);
    assert!(quiet.is_empty());
    assert_eq!(fs::read(&path).unwrap(), stdout);
    let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn csv_dir_gets_one_file_per_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = format!(
        "enumerate --u 1 --domain 0 1.5707963267948966 --ic 0.6 0.8253356149096783 --max-switches 1 --csv-dir {}",
        dir.path().display()
    );
    let (code, _, _) = run_ppe(&args(&cmd));
    assert_eq!(code, 0);
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["solution_000.csv", "solution_001.csv", "solution_002.csv"]);
    let text = fs::read_to_string(dir.path().join("solution_000.csv")).unwrap();
    assert!(text.starts_with("theta,rho,drho,x,y,residual\n"));
}

#[test]
fn bad_domain_and_missing_modulus_exit_two() {
    for cmd in ["critical --u 1 --domain 1 0", "maximal --domain 0 1", "solve --u 1 --domain 0 1 --order 2"] {
        let (code, _, err) = run_ppe(&args(cmd));
        assert_eq!(code, 2, "{cmd}: {}", String::from_utf8_lossy(&err));
    }
}

#[test]
fn ic_above_the_maximal_curve_is_a_solver_error() {
    let (code, _, err) = run_ppe(&args("solve --u 1 --domain 0 1 --ic 0.5 1.5 --sign +"));
    assert_eq!(code, 1, "{}", String::from_utf8_lossy(&err));
}
