use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cli::{output_dir, parse_config, run, set_key, Command, RawConfig, RunConfig, OUTPUT_ENV};

#[derive(Parser)]
#[command(name = "stablecert", version, about = "Certify stable solutions with many maxima and torsion domains with positive mean curvature")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// key = value configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set eps=0.01,0.005,0.0025.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory; beats the environment override and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the 1-D profile, its modes and bracket the extremal parameter.
    Profile,
    /// Build the domain, solve, and certify the maxima of the stable solution.
    Theorem1,
    /// Certify the explicit torsion construction.
    Theorem2,
    /// Expansion-rate and strip-convergence table over an eps list.
    Sweep,
    /// Negative control: the eigenfunction construction with an unbounded component.
    RemarkR,
}

fn load(args: &Args) -> Result<RunConfig, cli::CliError> {
    let mut raw = match &args.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => RawConfig::new(),
    };
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| cli::CliError::Input(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        set_key(&mut raw, k.trim(), v.trim())?;
    }
    let command = match args.command {
        Cmd::Profile => Command::Profile,
        Cmd::Theorem1 => Command::Theorem1,
        Cmd::Theorem2 => Command::Theorem2,
        Cmd::Sweep => Command::Sweep,
        Cmd::RemarkR => Command::RemarkR,
    };
    RunConfig::resolve(command, &raw)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load(&args).and_then(|cfg| {
        let outcome = run(&cfg)?;
        let dir = output_dir(&cfg, args.out.as_deref());
        outcome.write(&dir)?;
        Ok((outcome, dir))
    });
    match result {
        Ok((outcome, dir)) => {
            let r = &outcome.report;
            println!("{} {}: {} (config {})", r.tool, r.command, r.result.as_str(), &r.config_hash[..12]);
            for c in &r.checks {
                println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
            }
            println!("artifacts in {}", dir.display());
            let failing = r.failing();
            if r.result == cli::Verdict::Fail && !failing.is_empty() {
                eprintln!("failing checks: {}", failing.join(", "));
            }
            ExitCode::from(r.result.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, cli::CliError::Io(_)) {
                eprintln!("(output directory can be redirected with --out or {OUTPUT_ENV})");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
