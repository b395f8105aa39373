//! Command-line driver for the point cloud soft-delivery experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use softcloud::harness::{
    cmd_gen_data, cmd_matrix_eq_precoding, cmd_snapshot, cmd_sweep_overhead, cmd_sweep_snr, cmd_train,
    ExperimentConfig,
};
use softcloud::{Error, Result};

#[derive(Parser)]
#[command(name = "softcloud", version, about = "Soft delivery of 3D point clouds over fading channels")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the GNN codec; writes train.csv and the checkpoint.
    Train {
        /// Continue from the existing checkpoint up to the configured epochs.
        #[arg(long)]
        resume: bool,
    },
    /// Chamfer distance against overhead at a fixed SNR.
    SweepOverhead,
    /// Chamfer distance across the SNR grid.
    SweepSnr,
    /// Train and evaluate the four equalization/precoding variants.
    Matrix,
    /// Write reconstructions of one cloud for every snapshot codec.
    Snapshot {
        #[arg(long)]
        cloud_id: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
    },
    /// Write the configured dataset as PLY files plus a manifest.
    GenData,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    cfg.validate()?;
    match cli.command {
        Command::Train { resume } => {
            let outcome = cmd_train(&cfg, resume)?;
            if let Some(last) = outcome.log.last() {
                println!("epoch {} mean_loss {:.6e}", last.epoch, last.mean_loss);
            }
        }
        Command::SweepOverhead => print_rows(&cmd_sweep_overhead(&cfg)?),
        Command::SweepSnr => print_rows(&cmd_sweep_snr(&cfg)?),
        Command::Matrix => print_rows(&cmd_matrix_eq_precoding(&cfg)?),
        Command::Snapshot { cloud_id, snr } => {
            for r in cmd_snapshot(&cfg, cloud_id.as_deref(), snr)? {
                println!("{} {} chamfer {:.6e}", r.codec, r.file, r.chamfer);
            }
        }
        Command::GenData => println!("{}", cmd_gen_data(&cfg)?.display()),
        Command::PrintConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn print_rows(rows: &[softcloud::codecs::TrialReport]) {
    for r in rows {
        println!(
            "{} snr={} total_symbols={} chamfer={:.6e}",
            r.codec, r.snr_db, r.total_symbols, r.chamfer_mean
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} msg={:?}", e.kind(), one_line(&e));
            ExitCode::FAILURE
        }
    }
}

fn one_line(e: &Error) -> String {
    e.to_string().replace('\n', " ")
}
