use std::process::ExitCode;

use relaxed_hjb::cli::{run, Subcommand};
use relaxed_hjb::config::ExperimentConfig;

const USAGE: &str = "\
relaxed-hjb <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Subcommands:
  solve        solve the regularized problem (first eps entry) and write the
               value and feedback-control fields
  sweep-eps    vanishing-regularization sweep with the explicit error bound
  perturb      perturbation-stability sweep (value/control/suboptimal gaps)
  sensitivity  first-order sensitivity solve and remainder table
  mc-verify    Monte-Carlo verification of the PDE value at x0
  exact-reg    control convergence on the strict mask, with exactness flag
  surface      generator-comparison surface data (3 actions)

Flags override the matching [output] entries of the config file.
Exit codes: 0 success, 2 theory-invariant violation, 1 error.";

fn real_main() -> relaxed_hjb::Result<i32> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") {
        println!("{USAGE}");
        return Ok(0);
    }
    let Some(cmd) = args.first().and_then(|a| Subcommand::parse(a)) else {
        eprintln!("{USAGE}");
        return Ok(1);
    };
    let mut config_path: Option<String> = None;
    let mut out: Option<String> = None;
    let mut seed: Option<u64> = None;
    let mut threads: Option<usize> = None;
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut grab = |name: &str| -> relaxed_hjb::Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| relaxed_hjb::Error::InvalidArgument(format!("{name} needs a value")))
        };
        match flag.as_str() {
            "--config" => config_path = Some(grab("--config")?),
            "--out" => out = Some(grab("--out")?),
            "--seed" => {
                seed = Some(grab("--seed")?.parse().map_err(|_| {
                    relaxed_hjb::Error::InvalidArgument("--seed expects a u64".into())
                })?)
            }
            "--threads" => {
                threads = Some(grab("--threads")?.parse().map_err(|_| {
                    relaxed_hjb::Error::InvalidArgument("--threads expects a count".into())
                })?)
            }
            other => {
                return Err(relaxed_hjb::Error::InvalidArgument(format!(
                    "unknown flag `{other}`"
                )))
            }
        }
    }
    let Some(config_path) = config_path else {
        eprintln!("{USAGE}");
        return Ok(1);
    };
    let mut cfg = ExperimentConfig::parse_file(std::path::Path::new(&config_path))?;
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(threads) = threads {
        if threads == 0 {
            return Err(relaxed_hjb::Error::InvalidArgument(
                "--threads must be at least 1".into(),
            ));
        }
        cfg.threads = threads;
    }
    let outcome = run(cmd, &cfg)?;
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    if outcome.exit_code == 2 {
        eprintln!("invariant violation detected; see the emitted tables");
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
