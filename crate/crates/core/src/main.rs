use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twinbeam::analysis::DEFAULT_BINS;
use twinbeam::commands;
use twinbeam::report::{to_json, write_pair};
use twinbeam::samples::SampleFile;
use twinbeam::{Error, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "twinbeam",
    version,
    about = "Twin-beam photon-number-difference channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in twin-beam defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::reference_twin(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a session and report empirical and analytic BER.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Directory to write sifted samples into (one file per key).
        #[arg(long, value_name = "PATH")]
        dump_samples: Option<PathBuf>,
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
    /// Analyse recorded sample files.
    Replay {
        /// Sample files; rows are merged by index.
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
        /// Decision threshold N0; taken from --config when omitted, else 20.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
    /// Tabulate analytic efficiency and BER over threshold and encoding grids.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Threshold grid: start:stop:step or a comma list.
        #[arg(long, value_name = "GRID")]
        n0: String,
        /// Encoded mean-difference grid; defaults to the configured N.
        #[arg(long = "mean-diff", value_name = "GRID")]
        mean_diff: Option<String>,
        /// Overrides the difference width derived from the config.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Reproduce the eight source/basis/key conditions.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            dump_samples,
            bins,
        } => {
            let cfg = common.load()?;
            let sim = commands::simulate(&cfg, bins)?;
            commands::write_simulation(&sim, &common.out, dump_samples.as_deref())?;
            print!("{}", sim.report.summary());
        }
        Command::Replay {
            files,
            threshold,
            config,
            out,
            bins,
        } => {
            let threshold = match (threshold, config) {
                (Some(t), _) => t,
                (None, Some(path)) => RunConfig::load(&path)?.policy.threshold,
                (None, None) => twinbeam::config::DEFAULT_THRESHOLD,
            };
            let loaded = files
                .iter()
                .map(|p| SampleFile::load(p).map(|f| (file_name(p), f)))
                .collect::<Result<Vec<_>>>()?;
            let report = commands::replay(&loaded, threshold, bins)?;
            write_pair(&out, "report", &to_json(&report), &report.summary())?;
            print!("{}", report.summary());
        }
        Command::Sweep {
            common,
            n0,
            mean_diff,
            sigma,
        } => {
            let cfg = common.load()?;
            let thresholds = commands::parse_grid(&n0)?;
            let mean_diffs = mean_diff.as_deref().map(commands::parse_grid).transpose()?;
            let report = commands::sweep_report(&cfg, &thresholds, mean_diffs.as_deref(), sigma)?;
            write_pair(&common.out, "sweep", &to_json(&report), &report.summary())?;
            print!("{}", report.summary());
        }
        Command::Table1 { common } => {
            let cfg = common.load()?;
            let report = commands::table1_report(&cfg)?;
            write_pair(&common.out, "table1", &to_json(&report), &report.summary())?;
            print!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
