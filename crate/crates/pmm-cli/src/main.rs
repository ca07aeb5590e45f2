use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches, Parser};
use pmm_cli::config::{parse_flags, read_file, KEYS};
use pmm_cli::{run, ConfigError, RunConfig};

fn keys_help() -> String {
    let mut s = String::from("Keys (file lines `key=value`, or flags `--key=value`):\n");
    for (k, d, what) in KEYS {
        let d = d.map_or(String::new(), |d| format!(" [default: {d}]"));
        s.push_str(&format!("  {k:<13} {what}{d}\n"));
    }
    s.push_str("\nExit status: 0 ok, 1 invalid input, 2 numerical failure.");
    s
}

#[derive(Parser, Debug)]
#[command(
    name = "pmm",
    about = "Porous medium model with slow reservoirs",
    override_usage = "pmm [COMMAND] [--config FILE] [--KEY=VALUE ...]"
)]
struct Cli {
    /// simulate | solve | energy | sweep | hydro | oracle | slowbond, then
    /// `--config FILE` and `--key=value` overrides
    #[arg(allow_hyphen_values = true, trailing_var_arg = true, num_args = 0..)]
    args: Vec<String>,
}

fn resolve(cli: &Cli) -> Result<pmm_cli::Parsed, ConfigError> {
    let mut rest = cli.args.clone();
    let command = match rest.first() {
        Some(a) if !a.starts_with("--") => Some(rest.remove(0)),
        _ => None,
    };
    let mut config_path = None;
    if let Some(i) = rest.iter().position(|a| a == "--config" || a.starts_with("--config=")) {
        let a = rest.remove(i);
        let path = match a.split_once('=') {
            Some((_, p)) => p.to_string(),
            None if i < rest.len() => rest.remove(i),
            None => return Err(ConfigError::Missing("config".into())),
        };
        config_path = Some(PathBuf::from(path));
    }
    let file = match &config_path {
        Some(p) => read_file(p)?,
        None => Vec::new(),
    };
    let mut flags = parse_flags(&rest)?;
    if let Some(c) = command {
        flags.insert(0, ("command".to_string(), c));
    }
    let env_seed = std::env::var("PMM_SEED").ok();
    RunConfig::resolve(&file, env_seed.as_deref(), &flags)
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(pmm_cli::run::version().into_boxed_str());
    let matches = Cli::command()
        .version(version)
        .after_help(keys_help())
        .try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let parsed = match resolve(&cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pmm: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&parsed.config, &parsed.defaulted) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pmm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
