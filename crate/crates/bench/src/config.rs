use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::inputs::SampleMode;

pub const DEFAULT_NETWORK: &str = "lenet5";
pub const DEFAULT_SAMPLES: usize = 10;
pub const DEFAULT_GRID: usize = 10_001;
pub const DEFAULT_DEGREES: &str = "10..=100:10";

/// Settings shared by every subcommand. The JSON config file uses the same
/// field names; flags given on the command line win over the file.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin network (lenet5, resnet20) or a network JSON file.
    #[arg(long)]
    pub network: Option<String>,
    /// square, relu_approx, relu_switch; `compare` takes a comma-separated list.
    #[arg(long)]
    pub activation: Option<String>,
    /// Input scaling for relu_approx at every site. Defaults to the
    /// calibrated per-layer values of the weight manifest.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Chebyshev degree for relu_approx.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Parameter profile (lenet, resnet) or a parameter JSON file.
    #[arg(long)]
    pub params: Option<String>,
    /// Weight CSV directory; fixture weights from the seed when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Image file or directory; random images from the seed when absent.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Label file (IDX or CSV).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub sample_mode: Option<SampleMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the parameter profile's noise_sigma.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Degrees for approx-analyze: a list (10,20,50) or a range (10..=100:10).
    #[arg(long)]
    pub degrees: Option<String>,
    /// Grid points for approx-analyze.
    #[arg(long)]
    pub grid: Option<usize>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            network: self.network.or(base.network),
            activation: self.activation.or(base.activation),
            beta: self.beta.or(base.beta),
            degree: self.degree.or(base.degree),
            params: self.params.or(base.params),
            weights: self.weights.or(base.weights),
            inputs: self.inputs.or(base.inputs),
            labels: self.labels.or(base.labels),
            samples: self.samples.or(base.samples),
            sample_mode: self.sample_mode.or(base.sample_mode),
            seed: self.seed.or(base.seed),
            sigma: self.sigma.or(base.sigma),
            jobs: self.jobs.or(base.jobs),
            out: self.out.or(base.out),
            degrees: self.degrees.or(base.degrees),
            grid: self.grid.or(base.grid),
        }
    }

    pub fn network_name(&self) -> &str {
        self.network.as_deref().unwrap_or(DEFAULT_NETWORK)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn samples(&self) -> Result<usize, BenchError> {
        match self.samples.unwrap_or(DEFAULT_SAMPLES) {
            0 => Err(BenchError::Usage("--samples must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1)
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    pub fn degrees(&self) -> Result<Vec<usize>, BenchError> {
        parse_degrees(self.degrees.as_deref().unwrap_or(DEFAULT_DEGREES))
    }
}

/// `a,b,c` or `lo..=hi:step` (also `lo..hi:step`, exclusive).
pub fn parse_degrees(text: &str) -> Result<Vec<usize>, BenchError> {
    let bad = || BenchError::Usage(format!("cannot parse degree list {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let out: Vec<usize> = if let Some((lo, rest)) = text.split_once("..") {
        let (inclusive, rest) = match rest.strip_prefix('=') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if step == 0 {
            return Err(bad());
        }
        let end = if inclusive { hi + 1 } else { hi };
        (lo..end).step_by(step).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
