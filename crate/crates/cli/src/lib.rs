//! Command-line front end: single-image assessment, batch feature
//! extraction, evaluation and synthetic fixture generation.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod overlay;

use std::io::Write;
use std::path::PathBuf;

use abcd_core::FilterKind;
use clap::{Args, Parser, Subcommand};

pub use config::{FileConfig, RunConfig};
pub use error::{CliError, CliResult, FailureKind};

#[derive(Debug, Parser)]
#[command(name = "abcd", version, about = "Rule-based dermoscopic lesion scoring")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// Preprocessing stream: median, gaussian or flat
    #[arg(long, global = true)]
    pub stream: Option<FilterKind>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML settings file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for batch commands (1 = serial)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write diagnostic PNGs next to the outputs
    #[arg(long, global = true)]
    pub overlays: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a single image and print the assessment JSON
    Assess { image: PathBuf },
    /// Extract A/B/C/D/TDS for every manifest image into a features CSV
    Extract { manifest: PathBuf },
    /// Evaluate the TDS rule and logistic regression on a features CSV or manifest
    Evaluate { input: PathBuf },
    /// Generate the labelled synthetic lesion corpus
    MakeFixtures {
        #[arg(long, default_value_t = abcd_core::synth::DEFAULT_PER_CLASS)]
        per_class: usize,
    },
    /// Build a seeded, class-balanced manifest from HAM10000-style metadata
    Subset {
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value = "jpg")]
        ext: String,
        #[arg(long, default_value_t = 500)]
        per_class: usize,
    },
}

impl SharedArgs {
    pub fn run_config(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => config::load_file_config(path)?,
            None => FileConfig::default(),
        };
        Ok(RunConfig::resolve(file, self.stream, self.seed, self.workers))
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io(format!("stdout: {e}")))
}

/// Runs one parsed invocation, writing primary output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let config = cli.shared.run_config()?;
    let out = cli.shared.out.as_deref();
    match &cli.command {
        Command::Assess { image } => {
            let result = commands::cmd_assess(image, &config, out, cli.shared.overlays)?;
            emit(stdout, &(commands::assess::to_pretty_json(&result.report) + "\n"))
        }
        Command::Extract { manifest } => {
            let (table, csv) = commands::cmd_extract(manifest, &config, out, cli.shared.overlays)?;
            if out.is_none() {
                emit(stdout, &csv)?;
            }
            log::info!("{} rows, {} failed", table.rows.len(), table.failures.len());
            commands::check_failure_rate(&table)
        }
        Command::Evaluate { input } => {
            let result = commands::cmd_evaluate(input, &config, out)?;
            emit(stdout, &result.table)
        }
        Command::MakeFixtures { per_class } => {
            let dir = out.ok_or_else(|| CliError::domain("make-fixtures requires --out"))?;
            let set = commands::cmd_make_fixtures(dir, config.seed, *per_class)?;
            emit(
                stdout,
                &format!("{} fixtures written to {}\n", set.manifest.records.len(), dir.display()),
            )
        }
        Command::Subset {
            metadata,
            images,
            ext,
            per_class,
        } => {
            let manifest = commands::cmd_subset(metadata, images, ext, *per_class, config.seed)?;
            match out {
                Some(dir) => {
                    io::create_dir(dir)?;
                    commands::save_manifest(&manifest, &dir.join(commands::FIXTURE_MANIFEST))
                }
                None => {
                    let mut buf = Vec::new();
                    abcd_core::dataset::write_manifest(&manifest, &mut buf)?;
                    emit(stdout, &String::from_utf8_lossy(&buf))
                }
            }
        }
    }
}
