use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ngpc_cli::verify::VerifyLevel;
use ngpc_cli::{run, Command, RunSpec};

#[derive(Parser)]
#[command(name = "ngpc", version, about = "Neural graphics kernels, renders and NGPC performance sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML config for the subcommand; built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (1 is the reproducibility reference).
    #[arg(long, global = true, env = "NGPC_THREADS")]
    threads: Option<usize>,
    /// Use the published parameter presets instead of desk-scale defaults.
    #[arg(long, global = true)]
    paper_defaults: bool,
    /// Leave the generation timestamp out of report headers.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode a points file into a feature file.
    Encode {
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Render one frame to PPM.
    Render,
    /// Fit a GIA pipeline to an image.
    TrainGia,
    /// Run the performance model sweep and write CSV/JSON reports.
    PerfSweep,
    /// Compare kernels against their oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Encode { points } => Command::Encode { points },
        Cmd::Render => Command::Render,
        Cmd::TrainGia => Command::TrainGia,
        Cmd::PerfSweep => Command::PerfSweep,
        Cmd::Verify { level } => Command::Verify {
            level: match level {
                Level::Fast => VerifyLevel::Fast,
                Level::Full => VerifyLevel::Full,
            },
        },
    };
    let spec = RunSpec {
        command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
        paper_defaults: cli.paper_defaults,
        no_timestamp: cli.no_timestamp,
    };
    match run(&spec) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
