use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use edes_wave_cli::{run, Command, Invocation};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Solve,
    IcCheck,
    OracleCompare,
    Huygens,
    KernelId,
    Decay,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::IcCheck => Command::IcCheck,
            CommandArg::OracleCompare => Command::OracleCompare,
            CommandArg::Huygens => Command::Huygens,
            CommandArg::KernelId => Command::KernelId,
            CommandArg::Decay => Command::Decay,
        }
    }
}

/// Wave equation in Einstein-de Sitter spacetime: representation-formula
/// solver, finite-difference oracle and decay laboratory.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 1 on error.
#[derive(Debug, Parser)]
#[command(name = "edes-wave", version)]
struct Cli {
    command: CommandArg,
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "EDES_WAVE_THREADS")]
    threads: Option<usize>,
    /// Overrides `run.seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let inv = Invocation {
        command: cli.command.into(),
        config: cli.config,
        threads: cli.threads,
        seed: cli.seed,
    };
    match run(&inv) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report.summary).unwrap_or_default()
            );
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
