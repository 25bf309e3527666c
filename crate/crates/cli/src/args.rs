use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatkernel_core::selftest::{Fault, Level};
use heatkernel_core::{BallWeight, Domain, IntervalWeight, SimplexWeight, DEFAULT_T_MIN};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "heatkernel",
    version,
    about = "Weighted heat kernels on the interval, ball and simplex"
)]
pub struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Absolute tolerance for the truncated series tail.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,

    /// Smallest admissible time.
    #[arg(long, global = true, default_value_t = DEFAULT_T_MIN)]
    pub tmin: f64,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Output directory for files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the heat kernel K(t, x, y).
    Eval(EvalArgs),
    /// Evaluate the projector kernel P_n(x, y).
    Projector(ProjectorArgs),
    /// Sample, fit and check the two-sided Gaussian envelope.
    EnvelopeScan(ScanArgs),
    /// Run the invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainKind {
    Interval,
    Ball,
    Simplex,
}

/// Comma-separated reals, e.g. `0.1,-0.3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

pub fn parse_reals(s: &str) -> Result<RealList, String> {
    if s.trim().is_empty() {
        return Ok(RealList(Vec::new()));
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("'{p}' is not a real number: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(RealList)
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    #[arg(value_enum)]
    pub domain: DomainKind,

    /// Interval exponent α of (1-x)^α.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,

    /// Interval exponent β of (1+x)^β.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,

    /// Ball exponent μ of (1-‖x‖²)^{μ-1/2}.
    #[arg(long)]
    pub mu: Option<f64>,

    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,

    /// Simplex exponents κ_1,...,κ_{d+1}.
    #[arg(long, value_parser = parse_reals)]
    pub kappa: Option<RealList>,
}

impl DomainArgs {
    pub fn build(&self) -> Result<Domain, CliError> {
        let unused = |name: &str, present: bool| {
            if present {
                Err(CliError::Usage(format!(
                    "--{name} does not apply to the {:?} domain",
                    self.domain
                )))
            } else {
                Ok(())
            }
        };
        match self.domain {
            DomainKind::Interval => {
                unused("mu", self.mu.is_some())?;
                unused("kappa", self.kappa.is_some())?;
                if let Some(d) = self.d {
                    if d != 1 {
                        return Err(CliError::Usage(format!(
                            "the interval has d = 1, got --d {d}"
                        )));
                    }
                }
                let w = IntervalWeight::new(self.alpha.unwrap_or(0.0), self.beta.unwrap_or(0.0))?;
                Ok(Domain::Interval(w))
            }
            DomainKind::Ball => {
                unused("alpha", self.alpha.is_some())?;
                unused("beta", self.beta.is_some())?;
                unused("kappa", self.kappa.is_some())?;
                let d = self
                    .d
                    .ok_or_else(|| CliError::Usage("the ball needs --d".into()))?;
                Ok(Domain::Ball(BallWeight::new(self.mu.unwrap_or(0.0), d)?))
            }
            DomainKind::Simplex => {
                unused("alpha", self.alpha.is_some())?;
                unused("beta", self.beta.is_some())?;
                unused("mu", self.mu.is_some())?;
                let kappa = self
                    .kappa
                    .clone()
                    .ok_or_else(|| CliError::Usage("the simplex needs --kappa".into()))?
                    .0;
                if let Some(d) = self.d {
                    if kappa.len() != d + 1 {
                        return Err(CliError::Usage(format!(
                            "--kappa has {} entries but --d {d} needs {}",
                            kappa.len(),
                            d + 1
                        )));
                    }
                }
                Ok(Domain::Simplex(SimplexWeight::new(kappa)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelPath {
    /// Spectral sum over projector kernels.
    Series,
    /// Closed integral representation.
    Integral,
    /// Gram–Schmidt monomial basis.
    Oracle,
}

impl KernelPath {
    pub fn name(self) -> &'static str {
        match self {
            KernelPath::Series => "series",
            KernelPath::Integral => "integral",
            KernelPath::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub domain: DomainArgs,

    #[arg(long)]
    pub t: f64,

    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub x: RealList,

    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub y: RealList,

    #[arg(long, value_enum, default_value = "integral")]
    pub path: KernelPath,

    /// Print the value from two independent routes and their difference.
    #[arg(long)]
    pub both: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectorPath {
    Closed,
    Oracle,
}

#[derive(Debug, Args)]
pub struct ProjectorArgs {
    #[command(flatten)]
    pub domain: DomainArgs,

    #[arg(long)]
    pub n: usize,

    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub x: RealList,

    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub y: RealList,

    #[arg(long, value_enum, default_value = "closed")]
    pub path: ProjectorPath,

    /// Print the closed and oracle values and their difference.
    #[arg(long)]
    pub both: bool,

    /// Write the oracle basis as JSON coefficient maps to `<out>/<file>`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub domain: DomainArgs,

    /// Times, comma separated, each in [tmin, 1].
    #[arg(long, value_parser = parse_reals, default_value = "0.01,0.0316,0.1,0.316,1")]
    pub t: RealList,

    /// Random pairs per time, in addition to the fixed anchors.
    #[arg(long, default_value_t = 500)]
    pub pairs: usize,

    /// Largest u = d²/t of the training pairs.
    #[arg(long, default_value_t = 16.0)]
    pub u_train: f64,

    /// Largest u of the holdout pairs.
    #[arg(long, default_value_t = 24.0)]
    pub u_holdout: f64,

    /// Replace the heat kernel by one without Gaussian decay; the scan must fail.
    #[arg(long)]
    pub negative_control: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Quick => Level::Quick,
            LevelArg::Full => Level::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    NormConstant,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::NormConstant => Fault::NormConstant,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(value_enum, default_value = "quick")]
    pub level: LevelArg,

    /// Corrupt an internal constant to show the suites catch it.
    #[arg(long, value_enum)]
    pub inject_fault: Option<FaultArg>,
}
