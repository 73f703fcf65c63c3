use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use satqkd::reconcile::Strategy;
use satqkd_cli::commands;
use satqkd_cli::config::RunConfig;
use satqkd_cli::CliError;

#[derive(Parser)]
#[command(name = "satqkd", version, about = "Satellite QKD downlink simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat dotted-key TOML file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scales the pulse rate and the scintillation sample rate.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Link budget, turbulence and the channel trace.
    SimulatePass(Common),
    /// Clicks, sifting and parameter-estimation tallies from the trace.
    SimulateQkd(Common),
    /// Blockwise reconciliation of the sifted key with one strategy.
    Reconcile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "baseline")]
        strategy: String,
    },
    /// Secret key length for every reconciled strategy.
    SklReport(Common),
    /// Whole pipeline for every configured strategy on one realization.
    SweepStrategies(Common),
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(s) = c.scale {
        cfg.scale = s;
    }
    cfg.resolved()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::SimulatePass(c) => {
            let ch = commands::simulate_pass(&load(&c)?, &c.out)?;
            println!("samples {} seconds {}", ch.eta.len(), ch.links.len());
        }
        Cmd::SimulateQkd(c) => {
            let d = commands::simulate_qkd(&load(&c)?, &c.out)?;
            println!(
                "clicks {} sifted {} mean_qber {:.6}",
                d.clicks,
                d.sifted.len(),
                d.sifted.mean_qber()
            );
        }
        Cmd::Reconcile { common, strategy } => {
            let s: Strategy = strategy.parse().map_err(|e: satqkd::Error| CliError::Config(e.to_string()))?;
            let cfg = load(&common)?;
            let o = commands::reconcile(&cfg, &common.out, &s)?;
            println!(
                "{} blocks {} failed {} leakage {} mean_rate {:.6}",
                s,
                o.blocks.len(),
                o.failed_blocks(),
                o.leakage_bits(),
                o.mean_rate()
            );
        }
        Cmd::SklReport(c) => {
            let r = commands::skl_report(&load(&c)?, &c.out)?;
            for row in &r.rows {
                println!("{} {:<20} skl {:.0} f {:.4}", row.label.unwrap_or('-'), row.strategy, row.skl_bits, row.mean_f);
            }
        }
        Cmd::SweepStrategies(c) => {
            let s = commands::sweep(&load(&c)?, &c.out)?;
            for row in &s.report.rows {
                println!("{} {:<20} skl {:.0} f {:.4}", row.label.unwrap_or('-'), row.strategy, row.skl_bits, row.mean_f);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("satqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
