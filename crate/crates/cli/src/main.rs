use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

mod commands;
mod manifest;

#[derive(Parser)]
#[command(name = "charness", version, about = "Scene text detection with a learned characterness score")]
struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Log warnings and errors only
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the characterness model on every manifest image that has a mask
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Model file to write
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Write text-line boxes (<stem>.json) and characterness maps (<stem>.png)
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Take images from a manifest as well as from the arguments
        #[arg(long)]
        manifest: Option<PathBuf>,
        images: Vec<PathBuf>,
    },
    /// Write characterness maps only
    Saliency {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        images: Vec<PathBuf>,
    },
    /// Score saliency maps against ground-truth masks with the same file stems
    EvalSaliency {
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Directory for pr_curve.csv and summary.txt
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted boxes against ground-truth boxes with the same file stems
    EvalBoxes {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Match IoU; defaults to eval.match_iou
        #[arg(long)]
        iou: Option<f64>,
        /// Also write the summary here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration
    ConfigDump,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<characterness::Error> for CliError {
    fn from(e: characterness::Error) -> Self {
        use characterness::Error as E;
        match e {
            E::Io { .. } | E::Image { .. } => CliError::Io(e.to_string()),
            E::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "warn" } else { "info" }))
        .format_timestamp(None)
        .init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
