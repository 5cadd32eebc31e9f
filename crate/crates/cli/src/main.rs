use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curveflow_cli::{assemble, run, Mode, Overrides, OUT_DIR_ENV};

/// Forced bi-harmonic flow of convex curves.
#[derive(Parser)]
#[command(name = "curveflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Run {
        config: PathBuf,
        /// `--key value` overrides.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Time-integrate the flow.
    Evolve {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Solve for a steady state.
    Steady {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Report diagnostics of the initial condition.
    Analyze {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Draw the initial condition as SVG.
    Render {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

const EXIT_FAILED_RUN: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (path, mode, args) = match cli.command {
        Command::Run { config, overrides } => (Some(config), None, overrides),
        Command::Evolve { overrides } => (None, Some(Mode::Evolve), overrides),
        Command::Steady { overrides } => (None, Some(Mode::Steady), overrides),
        Command::Analyze { overrides } => (None, Some(Mode::Analyze), overrides),
        Command::Render { overrides } => (None, Some(Mode::Render), overrides),
    };
    let env_out = std::env::var(OUT_DIR_ENV).ok();
    let cfg = match Overrides::parse(&args)
        .and_then(|o| assemble(path.as_deref(), mode, &o, env_out.as_deref()))
    {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    for line in cfg.echo().lines() {
        log::info!("{line}");
    }
    match run(&cfg) {
        Ok(report) => {
            if let Some(t) = report.first_bound_violation {
                eprintln!("forcing bound first violated at t = {t}");
            }
            if report.success {
                println!("{}", report.outcome);
                ExitCode::SUCCESS
            } else {
                eprintln!("run did not complete: {}", report.outcome);
                ExitCode::from(EXIT_FAILED_RUN)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED_RUN)
        }
    }
}
