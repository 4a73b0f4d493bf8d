use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tankmpc::cli::{cmd_linearize, cmd_simulate, cmd_sweep, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "tankmpc",
    version,
    about = "Coupled-tank level MPC: linearization, simulation, tuning sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the linearized plant and its zero-order-hold sampling
    Linearize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the closed loop and write the CSV log
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (defaults to output.path from the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation per parameter value
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary: rw/np/nc
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = io::stdout().lock();
    let result = match &cli.command {
        Command::Linearize { config } => cmd_linearize(config, &mut stdout).map(|_| EXIT_OK),
        Command::Simulate { config, out } => {
            cmd_simulate(config, out.as_deref(), &mut stdout).map(|_| EXIT_OK)
        }
        Command::Sweep {
            config,
            param,
            values,
            out_dir,
        } => cmd_sweep(config, param, values, out_dir, &mut stdout),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tankmpc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
