use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmil::cli::{self, CliError};

#[derive(Parser)]
#[command(name = "mmil", version, about = "Multi-modal imitation learning with latent intentions")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Roll out scripted experts and write shuffled, unlabeled demonstrations.
    GenDemos {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an intention-conditioned policy on a demonstration file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a trained policy and write report CSVs.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a training log.
    Report {
        #[arg(long)]
        log: PathBuf,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.cmd {
        Cmd::GenDemos { config, out } => {
            let cfg = cli::parse_config(config)?;
            let demos = cli::cmd_gen_demos(&cfg, &out)?;
            println!("wrote {} records to {}", demos.len(), out.display());
        }
        Cmd::Train {
            config,
            demos,
            out,
            resume,
        } => {
            let cfg = cli::parse_config(config)?;
            let log = cli::cmd_train(&cfg, &demos, &out, resume.as_deref())?;
            println!("trained {} iterations; outputs in {}", log.rows.len(), out.display());
        }
        Cmd::Eval { config, policy, out } => {
            let cfg = cli::parse_config(config)?;
            let report = cli::cmd_eval(&cfg, &policy, &out)?;
            println!(
                "mode_coverage {} mi_estimate {:.4}; report in {}",
                report.mode_coverage,
                report.mi_estimate,
                out.display()
            );
        }
        Cmd::Report { log } => print!("{}", cli::cmd_report(&log)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
