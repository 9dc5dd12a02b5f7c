use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use por_cli::config::{self, ChainSpec};
use por_cli::{
    cmd_attack, cmd_mine, cmd_params, cmd_simulate, cmd_validate, emit, to_csv_bytes, to_json_bytes, AttackConfig,
    CliError, Format, MineConfig, SimulateConfig,
};
use por_core::certmine::MinerKeypair;
use por_core::consensus::write_chain_ndjson;

/// Exit code of `validate` when the chain is rejected.
const EXIT_INVALID_CHAIN: u8 = 3;
const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "por", version, about = "Proof-of-Reputation parameter design, simulation, mining and attack sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; recorded in the output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Design the bonus sequence from a halving period and a target total bonus.
    Params {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        halving: Option<u64>,
        #[arg(long)]
        total_bonus: Option<f64>,
    },
    /// Simulate a mining network with the reputation ledger.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the block log as NDJSON.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Mine a short chain with certified mining.
    Mine {
        #[command(flatten)]
        common: Common,
        /// Coinbase key file; overrides miner_seed in the config.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Also write the chain as NDJSON.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Compare the attack closed form with Monte Carlo over a grid.
    Attack {
        #[command(flatten)]
        common: Common,
        /// Overrides the trial count of the config.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Validate a chain export under a chain config.
    Validate {
        #[command(flatten)]
        common: Common,
        /// NDJSON chain export.
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsConfig {
    halving_blocks: u64,
    total_bonus: f64,
}

fn require_config(common: &Common) -> Result<&Path, CliError> {
    common.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))
}

fn json_only(command: &'static str, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Format { command, format: "csv".into() }),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    emit(Some(path), bytes)
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Params { common, halving, total_bonus } => {
            let (halving, total_bonus) = match (&common.config, halving, total_bonus) {
                (_, Some(h), Some(t)) => (h, t),
                (Some(path), None, None) => {
                    let c: ParamsConfig = config::load(path)?;
                    (c.halving_blocks, c.total_bonus)
                }
                _ => return Err(CliError::Config("give --halving and --total-bonus, or --config".into())),
            };
            let report = cmd_params(halving, total_bonus)?;
            let bytes = match common.format {
                Format::Json => to_json_bytes(&report)?,
                Format::Csv => {
                    let row = (
                        report.halving_blocks,
                        report.chi,
                        report.lambda0,
                        report.total_bonus,
                        report.daily_decay,
                        report.window_blocks,
                        report.tail_fraction,
                    );
                    let mut writer = csv::Writer::from_writer(Vec::new());
                    writer.write_record([
                        "halving_blocks",
                        "chi",
                        "lambda0",
                        "total_bonus",
                        "daily_decay",
                        "window_blocks",
                        "tail_fraction",
                    ])?;
                    writer.serialize(row)?;
                    writer.into_inner().map_err(|e| CliError::Io(e.into_error()))?
                }
            };
            emit(common.out.as_deref(), &bytes)?;
        }
        Command::Simulate { common, chain } => {
            let config: SimulateConfig = config::load(require_config(&common)?)?;
            let report = cmd_simulate(&config, common.seed)?;
            if let Some(path) = chain {
                let mut bytes = Vec::new();
                report.write_events(&mut bytes)?;
                write_file(&path, &bytes)?;
            }
            let bytes = match common.format {
                Format::Json => to_json_bytes(&report)?,
                Format::Csv => to_csv_bytes(&report.miners)?,
            };
            emit(common.out.as_deref(), &bytes)?;
        }
        Command::Mine { common, key, chain } => {
            json_only("mine", common.format)?;
            let config: MineConfig = config::load(require_config(&common)?)?;
            let keypair = key.as_deref().map(MinerKeypair::load).transpose()?;
            let report = cmd_mine(&config, keypair.as_ref(), common.seed)?;
            if let Some(path) = chain {
                let mut bytes = Vec::new();
                write_chain_ndjson(&mut bytes, &report.headers)?;
                write_file(&path, &bytes)?;
            }
            emit(common.out.as_deref(), &to_json_bytes(&report)?)?;
        }
        Command::Attack { common, trials } => {
            let mut config: AttackConfig = config::load(require_config(&common)?)?;
            if let Some(trials) = trials {
                config.trials = trials;
            }
            let report = cmd_attack(&config, common.seed)?;
            let bytes = match common.format {
                Format::Json => to_json_bytes(&report)?,
                Format::Csv => to_csv_bytes(&report.rows)?,
            };
            emit(common.out.as_deref(), &bytes)?;
        }
        Command::Validate { common, chain } => {
            json_only("validate", common.format)?;
            let spec: ChainSpec = config::load(require_config(&common)?)?;
            let verdict = cmd_validate(&spec, BufReader::new(File::open(&chain)?))?;
            emit(common.out.as_deref(), &to_json_bytes(&verdict)?)?;
            if !verdict.valid {
                return Ok(EXIT_INVALID_CHAIN);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim_end() }));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(EXIT_ERROR)
        }
    }
}
