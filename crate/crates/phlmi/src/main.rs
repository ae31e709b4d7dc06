use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phlmi::cli::{cmd_simulate, cmd_synthesize, cmd_validate, exit_code_for, load_run_config, run_demo_beam, run_demo_mems};

/// Passivity-preserving observer-based controller synthesis for linear
/// port-Hamiltonian systems, with closed-loop validation by simulation.
#[derive(Parser)]
#[command(name = "phlmi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural invariants of the configured plant.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design the observer gain and the pH controller, writing the design
    /// bundle, gain CSVs and an eigenvalue report.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Which controller design section to use.
        #[arg(long, default_value_t = 1)]
        design: usize,
    },
    /// Simulate the closed loop from a synthesized bundle (or the plant
    /// alone with --open-loop) and write trace/diagnostics CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        design: usize,
        /// Simulate the plant without any controller attached.
        #[arg(long)]
        open_loop: bool,
    },
    /// Full flexible-beam pipeline with the built-in configuration.
    DemoBeam {
        #[arg(long, default_value = "out/beam")]
        out: PathBuf,
    },
    /// Full MEMS optical-switch pipeline with the built-in configuration.
    DemoMems {
        #[arg(long, default_value = "out/mems")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> phlmi::Result<ExitCode> {
    match cli.command {
        Command::Validate { config, out } => {
            let (cfg, out_dir) = load_run_config(&config, out)?;
            let outcome = cmd_validate(&cfg, Some(&out_dir))?;
            print!("{}", outcome.text);
            Ok(if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Synthesize { config, out, design } => {
            let (cfg, out_dir) = load_run_config(&config, out)?;
            let outcome = cmd_synthesize(&cfg, design, &out_dir)?;
            print!("{}", outcome.summary);
            Ok(if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Simulate { config, out, design, open_loop } => {
            let (cfg, out_dir) = load_run_config(&config, out)?;
            let case_dir = cmd_simulate(&cfg, design, open_loop, &out_dir)?;
            println!("trace written under {}", case_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::DemoBeam { out } => {
            run_demo_beam(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DemoMems { out } => {
            run_demo_mems(&out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
