//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{
    cmd_credible, cmd_fit, cmd_hausdorff, cmd_scms, cmd_select, cmd_simulate, ScmsSource,
};
use crate::config::{Preset, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "filament", version, about = "Bayesian filament estimation on the unit square")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file overlaid on the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in parameter set.
    #[arg(long, value_enum, default_value = "paper-sim", global = true)]
    pub preset: Preset,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "out", global = true)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample noisy data from the ring surface.
    Simulate,
    /// Fit the spline posterior to a data file.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Score candidate basis sizes by their posterior mode.
    Select {
        #[arg(long)]
        data: PathBuf,
    },
    /// Extract the filament of the posterior mean (or of the true surface).
    Scms {
        #[arg(long, conflicts_with_all = ["data", "reference"])]
        posterior: Option<PathBuf>,
        #[arg(long, conflicts_with = "reference")]
        data: Option<PathBuf>,
        /// Use the noiseless ring surface.
        #[arg(long)]
        reference: bool,
    },
    /// Build credible sets of filaments from a fitted posterior.
    Credible {
        #[arg(long)]
        posterior: PathBuf,
    },
    /// Hausdorff distance between two filament files.
    Hausdorff {
        a: PathBuf,
        b: PathBuf,
    },
    /// Print the effective configuration as TOML.
    Config,
}

impl Cli {
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.global.preset, self.global.config.as_deref())?;
        if let Some(seed) = self.global.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

/// Runs one command; returns the text printed on success.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = cli.resolve_config()?;
    let out = &cli.global.out_dir;
    let body = || -> Result<String> {
        Ok(match &cli.command {
            Command::Simulate => cmd_simulate(&cfg, out)?.display().to_string(),
            Command::Fit { data } => {
                let pf = cmd_fit(&cfg, data, out)?;
                format!("sigma2_hat {} score {}", pf.posterior.sigma2_hat, pf.score.value)
            }
            Command::Select { data } => {
                let s = cmd_select(&cfg, data, out)?;
                format!("best {} {}", s.best[0], s.best[1])
            }
            Command::Scms {
                posterior,
                data,
                reference,
            } => {
                let source = match (posterior, data, reference) {
                    (Some(p), _, _) => ScmsSource::Posterior(p.clone()),
                    (_, Some(d), _) => ScmsSource::Data(d.clone()),
                    (_, _, true) => ScmsSource::Reference,
                    _ => {
                        return Err(CliError::Config(
                            "scms needs one of --posterior, --data or --reference".into(),
                        ))
                    }
                };
                let fil = cmd_scms(&cfg, &source, out)?;
                format!("{} ridge points of {} seeds", fil.ridge_points().len(), fil.records.len())
            }
            Command::Credible { posterior } => {
                let m = cmd_credible(&cfg, posterior, out)?;
                let acc = m.acceptance_fraction.map_or("none".to_string(), |a| a.to_string());
                format!("acceptance {} radius {}", acc, m.radius)
            }
            Command::Hausdorff { a, b } => cmd_hausdorff(&cfg, a, b, out)?.hausdorff.to_string(),
            Command::Config => cfg.to_toml(),
        })
    };
    match cli.global.workers {
        Some(0) => Err(CliError::Config("--workers must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(body),
        None => body(),
    }
}
