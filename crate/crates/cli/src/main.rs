//! Experiment CLI: reads a config file, runs the requested stage, and emits
//! reproducible CSV reports.
//!
//! Usage: steindyn `<subcommand>` --config PATH [--out DIR] [--seed U64]
//!        [--workers N] [--verbose]
//!
//! Subcommands: simulate, correlations, bound, distance, scheme,
//! stein-check, rate-fit, run.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure,
//! 3 acceptance check failed.

use steindyn_cli::config::Config;
use steindyn_cli::pipeline::{dispatch, out_dir, RunContext};
use steindyn_cli::CliError;

struct Args {
    command: String,
    config: Option<String>,
    out: Option<String>,
    seed: Option<u64>,
    workers: usize,
    verbose: bool,
}

fn parse_args(argv: &[String]) -> Result<Args, CliError> {
    if argv.is_empty() {
        return Err(CliError::Validation(
            "missing subcommand (simulate|correlations|bound|distance|scheme|stein-check|rate-fit|run)".into(),
        ));
    }
    let mut args = Args {
        command: argv[0].clone(),
        config: None,
        out: None,
        seed: None,
        workers: 1,
        verbose: false,
    };
    let mut i = 1;
    while i < argv.len() {
        let flag = argv[i].clone();
        let take_value = |i: &mut usize, name: &str| -> Result<String, CliError> {
            *i += 1;
            argv.get(*i)
                .cloned()
                .ok_or_else(|| CliError::Validation(format!("{name} requires a value")))
        };
        match flag.as_str() {
            "--config" => args.config = Some(take_value(&mut i, "--config")?),
            "--out" => args.out = Some(take_value(&mut i, "--out")?),
            "--seed" => {
                let v = take_value(&mut i, "--seed")?;
                args.seed =
                    Some(v.parse().map_err(|e| CliError::Validation(format!("--seed: {e}")))?);
            }
            "--workers" => {
                let v = take_value(&mut i, "--workers")?;
                args.workers = v.parse().map_err(|e| CliError::Validation(format!("--workers: {e}")))?;
                if args.workers == 0 {
                    return Err(CliError::Validation("--workers must be at least 1".into()));
                }
            }
            "--verbose" => args.verbose = true,
            other => return Err(CliError::Validation(format!("unknown flag '{other}'"))),
        }
        i += 1;
    }
    Ok(args)
}

fn run() -> Result<(), CliError> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = parse_args(&argv)?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
            Config::parse(&text)?
        }
        None => {
            let cfg = Config::default();
            cfg.validate()?;
            cfg
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let ctx = RunContext {
        out: out_dir(&cfg, args.out.as_deref()),
        cfg,
        workers: args.workers,
        verbose: args.verbose,
    };
    dispatch(&args.command, &ctx)
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
