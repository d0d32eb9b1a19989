use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedpp::{
    delta_from_reports, emit_report, monte_carlo, run_to_dir, verify_transcript, Format, HarnessError,
    ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "fedpp", version, about = "Peer-prediction incentivized federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one round and write its transcript, content store and result tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Run independent trials and write per-strategy statistics.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Replay a transcript against the disclosed beacon secret.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        secret: String,
    },
    /// Print the empirical delta and sign matrices of a directory of reports.
    Delta {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
}

fn parse_secret(s: &str) -> Result<[u8; 32], HarnessError> {
    let mut out = [0u8; 32];
    hex::decode_to_slice(s.trim(), &mut out)
        .map_err(|_| HarnessError::Config("secret must be 64 hex characters".into()))?;
    Ok(out)
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let (result, files) = run_to_dir(&cfg, seed, &out, format)?;
            println!("transcript {}", files.transcript.display());
            println!("secret {}", hex::encode(result.beacon_secret));
            for c in &result.clients {
                println!(
                    "{} {} effort={} payment={} slashed={}",
                    c.id, c.group, c.effort, c.payment, c.slashed
                );
            }
            println!(
                "compute_units={} storage_bytes={}",
                result.meter.compute_units, result.meter.storage_bytes
            );
        }
        Command::Mc {
            config,
            trials,
            out,
            format,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let summary = monte_carlo(&cfg, trials)?;
            for path in emit_report(&summary, &cfg, format, &out)? {
                println!("wrote {}", path.display());
            }
            for g in &summary.groups {
                println!(
                    "{} effort={} mean_payment={:.6} se={} mean_utility={:.3} slash_rate={:.4}",
                    g.strategy,
                    g.effort,
                    g.mean_payment,
                    g.se_payment.map_or("-".into(), |s| format!("{s:.6}")),
                    g.mean_utility,
                    g.slash_rate
                );
            }
        }
        Command::Verify { transcript, secret } => {
            let secret = parse_secret(&secret).map_err(|e| HarnessError::Parse {
                line: 0,
                reason: e.to_string(),
            })?;
            let report = verify_transcript(&transcript, &secret)?;
            match report.divergence {
                None => println!("ok"),
                Some(d) => {
                    println!("divergence at height {}: {}", d.height, d.reason);
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Delta { reports, k } => {
            let (delta, s, n) = delta_from_reports(&reports, k)?;
            println!("reports {n}");
            println!("delta (numerators / {})", delta.denominator());
            for row in delta.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                println!("  {}", cells.join(" "));
            }
            println!("sign");
            for row in s.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                println!("  {}", cells.join(" "));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
