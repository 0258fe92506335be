mod commands;
mod config;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;
use config::{Command, RunConfig};
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "deltalaser", version, about = "Two-level atoms crossing delta-shaped laser fields")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Channel probabilities over a velocity sweep.
    Amplitudes(Common),
    /// Ramsey fringes of two separated lasers.
    Ramsey(Common),
    /// Arrival-time distributions and limit ladders.
    Detection(Common),
    /// Convergence of the square-barrier and grid oracles.
    Oracle(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Flat `key[unit] = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration applied before the config file.
    #[arg(long)]
    preset: Option<String>,
    /// Override, `key[unit]=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads; falls back to DELTALASER_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// List the presets of this command and exit.
    #[arg(long)]
    list_presets: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn resolve(command: Command, args: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(command.schema());
    if let Some(name) = &args.preset {
        let presets = presets::for_command(command);
        let (_, entries) = presets.iter().find(|(n, _)| n == name).ok_or_else(|| {
            let names: Vec<&str> = presets.iter().map(|p| p.0).collect();
            config::ConfigError {
                line: None,
                key: String::new(),
                message: format!("unknown preset `{name}` for {}; available: {}", command.name(), names.join(", ")),
            }
        })?;
        for (k, v) in entries.iter() {
            cfg.assign(k, v, None)?;
        }
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text).map_err(|mut e| {
            e.message = format!("{} ({})", e.message, path.display());
            e
        })?;
    }
    for s in &args.set {
        cfg.apply_override(s)?;
    }
    Ok(cfg)
}

fn threads(args: &Common) -> Result<Option<usize>, CliError> {
    let n = match args.threads {
        Some(n) => Some(n),
        None => match std::env::var("DELTALASER_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| config::ConfigError {
                line: None,
                key: "DELTALASER_THREADS".into(),
                message: format!("`{s}` is not a thread count"),
            })?),
            Err(_) => None,
        },
    };
    Ok(n.filter(|&n| n > 0))
}

fn execute(command: Command, args: &Common) -> Result<(), CliError> {
    if args.list_presets {
        for (name, _) in presets::for_command(command) {
            println!("{name}");
        }
        return Ok(());
    }
    let cfg = resolve(command, args)?;
    if let Some(n) = threads(args)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(std::io::Error::other)?;
    }
    let output = commands::run(command, &cfg)?;
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let stem = cfg.text("scenario").to_string();
    for path in output::write_output(&args.out, command.name(), &stem, format, &cfg.snapshot(), &output)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Amplitudes(a) => (Command::Amplitudes, a),
        Sub::Ramsey(a) => (Command::Ramsey, a),
        Sub::Detection(a) => (Command::Detection, a),
        Sub::Oracle(a) => (Command::Oracle, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deltalaser {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
