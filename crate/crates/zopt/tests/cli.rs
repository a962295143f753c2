use std::process::Command;

fn zopt() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zopt"));
    cmd.env_remove("ZOPT_SEED");
    cmd
}

const CONFIG: &str = r#"[experiment]
scenario = "unconstrained"
num_runs = 3
run_seed_base = 5

[problem]
m = 4
n = 10
seed = 2

[solver]
mu = 1e-5
step_size = "theorem"
num_iters = 200

[output]
csv = "out.csv"
"#;

#[test]
fn suggest_prints_constrained_parameters() {
    let out = zopt()
        .args([
            "suggest", "--mode", "con", "--eps", "0.01", "--n", "1", "--lip", "2", "--pl", "2",
            "--dx", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mu = 6.25e-4"), "{text}");
    assert!(text.contains("num_iters = 100"), "{text}");
}

#[test]
fn suggest_without_diameter_fails() {
    let out = zopt()
        .args([
            "suggest", "--mode", "con", "--eps", "0.1", "--n", "3", "--lip", "1", "--pl", "1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn invalid_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, CONFIG.replace("num_runs = 3", "num_runs = 0")).unwrap();
    let out = zopt()
        .arg("run")
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn seed_environment_variable_overrides_run_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, CONFIG).unwrap();
    let run = |seed: Option<&str>, sub: &str| {
        let mut cmd = zopt();
        cmd.arg("run")
            .arg("--config")
            .arg(&path)
            .arg("--out-dir")
            .arg(dir.path().join(sub));
        if let Some(s) = seed {
            cmd.env("ZOPT_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(dir.path().join(sub).join("out.csv")).unwrap()
    };
    let plain = run(None, "a");
    let pinned = run(Some("5"), "b");
    let other = run(Some("77"), "c");
    assert_eq!(plain, pinned);
    assert_ne!(plain, other);
    assert!(other.contains("# run_seed_base=77\n"));
}
