use clap::Parser;
use spinrs_cli::{parse_config, run, Command, ConfigError, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulate and check Poisson-Lie spin Ruijsenaars-Schneider type models.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// simulate | project | compare | invariants | scaling-limit | poisson-check
    /// (defaults to the `command` key of the config file)
    command: Option<Command>,
    /// Run configuration (flat `key = value` file).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Do not print the summary.
    #[arg(long)]
    quiet: bool,
}

fn fail(err: RunError, out: Option<&PathBuf>) -> ExitCode {
    let body = serde_json::to_string_pretty(&err.to_json()).expect("JSON values serialize");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{body}\n"));
        }
    }
    eprintln!("{body}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let err = ConfigError {
                violations: vec![format!("cannot read {}: {e}", args.config.display())],
            };
            return fail(err.into(), None);
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e.into(), args.out.as_ref()),
    };
    let out = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let Some(command) = args.command.or(config.command) else {
        let err = ConfigError {
            violations: vec!["command: give it on the command line or as `command = ...`".into()],
        };
        return fail(err.into(), Some(&out));
    };
    match run(&config, command, &out) {
        Ok(outcome) => {
            if !args.quiet {
                println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("JSON values serialize"));
            }
            match outcome.failure {
                Some(e) => fail(e, Some(&out)),
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => fail(e, Some(&out)),
    }
}
