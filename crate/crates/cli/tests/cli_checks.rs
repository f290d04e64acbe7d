use std::process::Command as Proc;

use cli::{parse_config, run, set_key, CliError, Command, RawConfig, RunConfig, Verdict};

fn cfg(command: Command, kv: &[(&str, &str)]) -> Result<RunConfig, CliError> {
    let mut raw = RawConfig::new();
    for (k, v) in kv {
        set_key(&mut raw, k, v)?;
    }
    RunConfig::resolve(command, &raw)
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_stablecert"))
}

#[test]
fn config_file_parses_comments_and_blank_lines() {
    let raw = parse_config("# header\n\nnonlinearity = exponential\nlambda = 0.5  # trailing\n").unwrap();
    let c = RunConfig::resolve(Command::Profile, &raw).unwrap();
    assert_eq!(c.lambda, 0.5);
    assert!(parse_config("lambda 0.5\n").is_err());
    assert!(parse_config("bogus = 1\n").is_err());
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(cfg(Command::Theorem2, &[("n", "1")]), Err(CliError::Input(_))));
    assert!(matches!(cfg(Command::Sweep, &[("eps", "0.01")]), Err(CliError::Input(_))));
    assert!(cfg(Command::Sweep, &[("eps", "0.01,0.02,0.005")]).is_err());
    assert!(cfg(Command::Theorem1, &[("grid", "65")]).is_err());
    assert!(cfg(Command::Theorem1, &[("tol_psi", "0")]).is_err());
    assert!(cfg(Command::Theorem1, &[("k", "0")]).is_err());
    assert!(cfg(Command::Theorem2, &[("roots", "1,2,3")]).is_err());
}

#[test]
fn hash_is_stable_and_ignores_output_dir() {
    let a = cfg(Command::Theorem1, &[("eps", "0.01")]).unwrap();
    let b = cfg(Command::Theorem1, &[("eps", "0.01"), ("output", "/tmp/elsewhere")]).unwrap();
    let c = cfg(Command::Theorem1, &[("eps", "0.02")]).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn profile_defaults() {
    let out = run(&cfg(Command::Profile, &[]).unwrap()).unwrap();
    assert_eq!(out.verdict(), Verdict::Pass);
    let u0 = out.report.data["u0_at_0"].as_f64().unwrap();
    assert!((u0 - 0.5).abs() < 1e-12, "u0(0) = {u0}");

    let out = run(&cfg(Command::Profile, &[("nonlinearity", "exponential")]).unwrap()).unwrap();
    let b = out.report.data["lambda_star"].as_array().unwrap();
    let (lo, hi) = (b[0].as_f64().unwrap(), b[1].as_f64().unwrap());
    // Gelfand on the unit interval: lambda* = 0.8785...
    assert!(lo <= 0.8785 && hi >= 0.8784 && hi - lo < 1e-2, "[{lo}, {hi}]");
}

#[test]
fn supercritical_lambda_is_a_solver_error() {
    let r = run(&cfg(Command::Profile, &[("nonlinearity", "exponential"), ("lambda", "1.0")]).unwrap());
    match r {
        Err(e @ CliError::Solver(_)) => assert_eq!(e.exit_code(), 2),
        other => panic!("expected solver error, got {other:?}"),
    }
}

#[test]
fn single_maximum_certifies_on_a_coarse_grid() {
    let out = run(&cfg(Command::Theorem1, &[("k", "1"), ("grid", "129,65")]).unwrap()).unwrap();
    assert_eq!(out.verdict(), Verdict::Pass, "failing: {:?}", out.report.failing());
}

#[test]
fn remark_construction_is_an_expected_failure() {
    let out = run(&cfg(Command::Theorem1, &[("construction", "remark-r")]).unwrap()).unwrap();
    assert_eq!(out.verdict(), Verdict::ExpectedFail);
    assert_eq!(out.verdict().exit_code(), 0);
}

#[test]
fn binary_exit_codes_and_output_override() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin().arg("profile").env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let report = dir.path().join("profile").join("report.json");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["result"], "PASS");
    assert!(dir.path().join("profile").join("profile.csv").exists());

    // the flag beats the environment
    let flag = tempfile::tempdir().unwrap();
    let ok = bin().args(["profile", "--out"]).arg(flag.path()).env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(flag.path().join("profile").join("report.json").exists());

    let bad = bin().args(["theorem2", "--set", "n=1"]).env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let bad = bin().args(["profile", "--set", "nonsense"]).env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let cfg_file = dir.path().join("run.cfg");
    std::fs::write(&cfg_file, "nonlinearity = exponential\nlambda = 2.0\n").unwrap();
    let bad = bin().arg("profile").arg("--config").arg(&cfg_file).env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let neg = bin().arg("remark-r").env("STABLECERT_OUT", dir.path()).output().unwrap();
    assert_eq!(neg.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&neg.stdout).contains("EXPECTED-FAIL"));
}
