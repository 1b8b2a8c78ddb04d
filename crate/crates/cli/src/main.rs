//! `rdm-duality`: configuration-driven front end for the harmonic-duality
//! library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use commands::Outcome;
use config::{Format, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "rdm-duality", version, about = "Reduced density operator spectra of harmonic models and their duals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Leave the timestamp out of JSON output.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads for the data-parallel loops.
    #[arg(long, global = true, env = "RDM_DUALITY_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Normal modes, length scales and δ-coordinates of a model.
    Modes,
    /// Occupation spectrum and entropies of the configured RDOs.
    Spectrum {
        /// Write each kernel as a JSON header line followed by raw
        /// little-endian f64 data.
        #[arg(long)]
        dump_kernel: Option<PathBuf>,
    },
    /// Entropies only.
    Entropy {
        #[arg(long)]
        dump_kernel: Option<PathBuf>,
    },
    /// Run the configured duality checks; exit 1 if any fails.
    Duality,
    /// Identical-particle sweep over coupling ratios.
    Sweep,
}

fn write_output(outcome: &Outcome, format: Format, timestamp: bool, out: Option<&Path>) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Json => {
            let mut json = outcome.json.clone();
            if timestamp {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                json["timestamp"] = secs.into();
            }
            serde_json::to_writer_pretty(&mut sink, &json)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(false).from_writer(&mut sink);
            w.write_record(&outcome.table.header)?;
            for row in &outcome.table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let path = cli.common.config.as_deref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let outcome = match &cli.command {
        Command::Modes => commands::modes(&cfg)?,
        Command::Spectrum { dump_kernel } => commands::spectrum(&cfg, dump_kernel.as_deref())?,
        Command::Entropy { dump_kernel } => commands::entropy(&cfg, dump_kernel.as_deref())?,
        Command::Duality => commands::duality(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
    };
    let format = cli.common.format.or(cfg.outputs.format).unwrap_or(Format::Json);
    let out = cli.common.out.as_deref().or(cfg.outputs.path.as_deref());
    write_output(&outcome, format, !cli.common.no_timestamp, out)?;
    Ok(!outcome.failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("duality check failed");
            ExitCode::from(1)
        }
        Err(CliError::Output(msg)) if msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
