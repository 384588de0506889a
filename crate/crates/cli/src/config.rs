//! Run configuration: built-in presets overlaid with an optional TOML file.

use std::path::Path;

use clap::ValueEnum;
use filament::bspline::BasisSpec;
use filament::posterior::PriorSpec;
use filament::ridge::{ScmsConfig, Seeds};
use filament::uncertainty::CredibleSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Simulation study: ring surface, n = 2000, q = 5, J = 9.
    PaperSim,
    /// Earthquake-style application: q = 4, J = 32, tau = 3.
    PaperQuake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub simulate: SimulateConfig,
    pub data: DataConfig,
    pub basis: BasisConfig,
    pub prior: PriorConfig,
    pub select: SelectConfig,
    pub scms: ScmsSection,
    pub credible: CredibleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    pub noise_sd: f64,
}

/// How input CSV files are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub has_header: bool,
    /// Column names when `has_header`, otherwise zero-based positions
    /// written as strings, e.g. `["0", "1", "2"]`.
    pub columns: [String; 3],
    /// Map each coordinate's observed range onto [0, 1].
    pub rescale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub order: [usize; 2],
    pub num_basis: [usize; 2],
}

/// Isotropic prior `theta ~ N(mean * 1, sigma^2 * variance * I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub candidates: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmsSection {
    pub step_a: f64,
    pub tol_eps: f64,
    pub threshold_tau: f64,
    pub max_iter: usize,
    /// Seeds form a `seed_grid x seed_grid` lattice of cell centres.
    pub seed_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredibleConfig {
    pub gamma: f64,
    pub rho: f64,
    /// Draws used to estimate the sup-norm quantiles.
    pub quantile_samples: usize,
    /// Draws screened against the bands.
    pub samples: usize,
    pub grid_n: usize,
    /// Fixed `C / eta`; estimated from the posterior mean when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_over_eta: Option<f64>,
}

impl Preset {
    pub fn config(self) -> RunConfig {
        match self {
            Preset::PaperSim => RunConfig {
                seed: 0,
                simulate: SimulateConfig {
                    n: 2000,
                    noise_sd: 0.1,
                },
                data: DataConfig::default(),
                basis: BasisConfig {
                    order: [5, 5],
                    num_basis: [9, 9],
                },
                prior: PriorConfig {
                    mean: 0.0,
                    variance: 1.0,
                },
                select: SelectConfig {
                    candidates: (7..=15).map(|j| [j, j]).collect(),
                },
                scms: ScmsSection {
                    step_a: 0.02,
                    tol_eps: 1e-6,
                    threshold_tau: 2.0,
                    max_iter: 10_000,
                    seed_grid: 50,
                },
                credible: CredibleConfig {
                    gamma: 0.1,
                    rho: 1.2,
                    quantile_samples: 200,
                    samples: 200,
                    grid_n: 64,
                    c_over_eta: None,
                },
            },
            Preset::PaperQuake => RunConfig {
                seed: 0,
                simulate: SimulateConfig {
                    n: 3772,
                    noise_sd: 0.1,
                },
                data: DataConfig::default(),
                basis: BasisConfig {
                    order: [4, 4],
                    num_basis: [32, 32],
                },
                prior: PriorConfig {
                    mean: 0.0,
                    variance: 1.0,
                },
                select: SelectConfig {
                    candidates: (24..=40).step_by(4).map(|j| [j, j]).collect(),
                },
                scms: ScmsSection {
                    step_a: 5e-6,
                    tol_eps: 1e-6,
                    threshold_tau: 3.0,
                    max_iter: 10_000,
                    seed_grid: 50,
                },
                credible: CredibleConfig {
                    gamma: 0.1,
                    rho: 1.2,
                    quantile_samples: 200,
                    samples: 200,
                    grid_n: 64,
                    c_over_eta: None,
                },
            },
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            has_header: true,
            columns: ["x1".into(), "x2".into(), "y".into()],
            rescale: true,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Preset::PaperSim.config()
    }
}

/// Recursively overlays `patch` onto `base`; tables merge, everything else
/// is replaced.
fn merge(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// Overlays a TOML document onto this configuration. Unknown keys and
    /// ill-typed values are rejected.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let patch: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut base = toml::Value::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, patch);
        let cfg: RunConfig = base.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(preset: Preset, path: Option<&Path>) -> Result<Self> {
        let base = preset.config();
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                base.overlay_toml(&text)
            }
            None => {
                base.validate()?;
                Ok(base)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.simulate.n == 0 {
            return Err(CliError::Config("simulate.n must be positive".into()));
        }
        if !(self.simulate.noise_sd >= 0.0 && self.simulate.noise_sd.is_finite()) {
            return Err(CliError::Config("simulate.noise_sd must be finite and nonnegative".into()));
        }
        if self.data.columns.iter().any(|c| c.is_empty()) {
            return Err(CliError::Config("data.columns entries must be nonempty".into()));
        }
        if !self.data.has_header {
            for c in &self.data.columns {
                c.parse::<usize>().map_err(|_| {
                    CliError::Config(format!("data.columns must be zero-based positions without a header, got {c:?}"))
                })?;
            }
        }
        self.basis_spec()?;
        if self.select.candidates.is_empty() {
            return Err(CliError::Config("select.candidates must be nonempty".into()));
        }
        for c in &self.select.candidates {
            BasisSpec::uniform(self.basis.order[0], c[0], self.basis.order[1], c[1])?;
        }
        self.prior_for(&self.basis_spec()?)?;
        self.scms_config().validate()?;
        if self.scms.seed_grid == 0 {
            return Err(CliError::Config("scms.seed_grid must be positive".into()));
        }
        let c = &self.credible;
        CredibleSpec::new(c.gamma, c.rho, [0.0; 3], c.c_over_eta.unwrap_or(1.0))?;
        if c.quantile_samples < 20 {
            return Err(CliError::Config("credible.quantile_samples must be at least 20".into()));
        }
        if c.grid_n < 8 {
            return Err(CliError::Config("credible.grid_n must be at least 8".into()));
        }
        Ok(())
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        let b = &self.basis;
        Ok(BasisSpec::uniform(b.order[0], b.num_basis[0], b.order[1], b.num_basis[1])?)
    }

    pub fn prior_for(&self, spec: &BasisSpec) -> Result<PriorSpec> {
        Ok(PriorSpec::isotropic(spec.dim(), self.prior.mean, self.prior.variance)?)
    }

    pub fn scms_config(&self) -> ScmsConfig {
        let s = &self.scms;
        ScmsConfig::new(s.step_a, s.tol_eps, s.threshold_tau)
            .with_max_iter(s.max_iter)
            .with_seeds(Seeds::Grid(s.seed_grid))
    }
}
