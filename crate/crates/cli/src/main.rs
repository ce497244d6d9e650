mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

/// PAC symbolic abstraction pipeline for black-box systems.
#[derive(Parser, Debug)]
#[command(name = "pacabs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 or absent uses the hardware parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the system and write the abstraction file.
    Abstract {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the reach-avoid game on the abstraction.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 when the winning set is empty.
        #[arg(long)]
        require_nonempty: bool,
    },
    /// Run the refined controller in closed loop and write traces.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state as comma-separated reals; repeatable.
        #[arg(long, value_delimiter = ';', allow_hyphen_values = true)]
        x0: Vec<String>,
        /// Random trials from the winning cells instead of fixed initial states.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Hold-out accuracy of the abstraction and closed-loop success rate.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hold_out: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Print derived parameters and the state of the output directory.
    Info {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Abstract { common } => commands::cmd_abstract(&commands::Session::open(&common)?),
        Command::Synthesize {
            common,
            require_nonempty,
        } => commands::cmd_synthesize(&commands::Session::open(&common)?, require_nonempty),
        Command::Simulate { common, x0, trials } => commands::cmd_simulate(&commands::Session::open(&common)?, &x0, trials),
        Command::Validate {
            common,
            hold_out,
            trials,
        } => commands::cmd_validate(&commands::Session::open(&common)?, hold_out, trials),
        Command::Info { common } => commands::cmd_info(&commands::Session::open(&common)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
