use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gibbs_lines_cli::run::{execute, Mode, Overrides};
use gibbs_lines_cli::exit;

#[derive(Parser)]
#[command(name = "gibbs-lines", version, about = "Gibbsian line ensemble experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        no_plots: bool,
    },
    /// Run only the brute-force oracles of an experiment.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { exit::CONFIG_ERROR } else { exit::PASS };
            return ExitCode::from(code as u8);
        }
    };
    let (path, overrides, mode) = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
            no_plots,
        } => (config, Overrides { out, seed, workers, no_plots }, Mode::Run),
        Command::Oracle { config, out, seed } => (
            config,
            Overrides {
                out,
                seed,
                workers: None,
                no_plots: true,
            },
            Mode::Oracle,
        ),
    };
    match execute(&path, &overrides, mode) {
        Ok(summary) => {
            for l in &summary.lines {
                println!("{l}");
            }
            println!("artifacts in {}", summary.out_dir.display());
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("gibbs-lines: {e}");
            ExitCode::from(exit::CONFIG_ERROR as u8)
        }
    }
}
