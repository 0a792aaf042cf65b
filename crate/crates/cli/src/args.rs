use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use voltsec::bpega::GaParams;
use voltsec::uncertainty::ClipWindow;
use voltsec::{GameConfig, Method};

#[derive(Debug, Parser)]
#[command(
    name = "voltsec",
    version,
    about = "Security investment against covert reactive-load attacks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dimensions, controllable buses, nominal index and conditioning of a case.
    Inspect {
        /// Case file, or the name of a bundled case (ieee9, ieee39).
        case: String,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one cost pair and write the result as JSON.
    Solve {
        case: String,
        #[arg(value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        gamma_a: f64,
        #[arg(long)]
        gamma_d: f64,
        /// Attacker cost the RD defender plans against.
        #[arg(long)]
        gamma_a_est: Option<f64>,
        /// Write the co-evolution trace as CSV (bpega only).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve every point of a cost grid and write one CSV row per point.
    Sweep {
        case: String,
        #[arg(value_enum)]
        method: Option<MethodArg>,
        /// `start:step:stop`, a comma list, or a single value.
        #[arg(long, allow_hyphen_values = true)]
        gamma_a: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma_d: String,
        /// Grid of estimates (rd only).
        #[arg(long, allow_hyphen_values = true)]
        gamma_a_est: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate solved equilibria under randomly perturbed load setpoints.
    Uncertainty {
        case: String,
        /// Result files written by `solve`, one per cost pair.
        #[arg(required = true)]
        equilibrium: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Number of perturbed models.
        #[arg(long = "models", short = 'm', default_value_t = 20)]
        models: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ClipArg::Nominal)]
        clip: ClipArg,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cbbi,
    Bpega,
    Rd,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cbbi => Method::Cbbi,
            MethodArg::Bpega => Method::Bpega,
            MethodArg::Rd => Method::Rd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Traversal,
    Bpega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClipArg {
    Nominal,
    PerModel,
}

impl From<ClipArg> for ClipWindow {
    fn from(c: ClipArg) -> Self {
        match c {
            ClipArg::Nominal => ClipWindow::Nominal,
            ClipArg::PerModel => ClipWindow::PerModel,
        }
    }
}

/// Flags shared by `solve` and `sweep`.
#[derive(Debug, Args)]
pub struct Common {
    #[arg(long = "method", value_enum)]
    pub method_flag: Option<MethodArg>,
    /// Level counts of attacker and defender.
    #[arg(long, num_args = 2, value_names = ["LA", "LD"], default_values_t = [3u8, 3])]
    pub levels: Vec<u8>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, num_args = 2, value_names = ["SA", "SD"], default_values_t = [30usize, 20])]
    pub ga_pop: Vec<usize>,
    #[arg(long, default_value_t = 0.85)]
    pub ga_pc: f64,
    #[arg(long, default_value_t = 0.05)]
    pub ga_pm: f64,
    #[arg(long, default_value_t = 30)]
    pub ga_gens: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Solver used by rd for planning and response.
    #[arg(long, value_enum, default_value_t = EngineArg::Traversal)]
    pub engine: EngineArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn config(&self, gamma_a: f64, gamma_d: f64) -> GameConfig {
        let mut cfg = GameConfig::new(gamma_a, gamma_d)
            .with_levels(self.levels[0], self.levels[1])
            .with_seed(self.seed);
        cfg.mc_samples = self.mc_samples;
        cfg
    }

    pub fn ga_params(&self) -> GaParams {
        GaParams {
            pop_a: self.ga_pop[0],
            pop_d: self.ga_pop[1],
            p_c: self.ga_pc,
            p_m: self.ga_pm,
            generations: self.ga_gens,
            seed: self.seed,
        }
    }
}

/// Parses `start:step:stop` (inclusive), a comma list, or a single value.
/// An empty string is an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad number `{s}` in grid `{spec}`"))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 {
                return Err(format!("grid `{spec}` needs a positive step"));
            }
            if stop < start {
                return Ok(Vec::new());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // index times step keeps grid values free of accumulated drift
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(format!("grid `{spec}` is neither start:step:stop nor a list")),
    }
}
