//! Command-line experiment runner.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::models::{load_model_spec, Model, ModelSpec};
use crate::schedule::Schedule;
use crate::simulator::DEFAULT_CAP;
use output::{exit_code_for, Grid, Output, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "bhtree", version, about = "Critical Bellman-Harris processes: exact laws, genealogies and limit laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model file path or `builtin:bin-lat|geo-exp|geo-det`.
    #[arg(long, default_value = "builtin:bin-lat")]
    pub model: String,
    /// Directory for CSV and JSON artifacts (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct Sampling {
    #[arg(long, env = "BH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub replicates: u64,
    /// Node cap per replicate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact law of Z(t) from the generating-function recursion.
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: usize,
        /// Truncation order (default max(8Bt, 256)).
        #[arg(long)]
        order: Option<usize>,
        /// Largest k written to the CSV.
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Conditioned Monte Carlo run.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        t: f64,
        /// `survival`, `small` (uses --phi), `linear` (uses --a), or a full
        /// form such as `small:pow:0.6`.
        #[arg(long, default_value = "survival")]
        event: String,
        #[arg(long, default_value = "pow:0.6")]
        phi: Schedule,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, default_value = "")]
        s_grid: Grid,
        #[arg(long, default_value = "")]
        x_grid: Grid,
        /// Start from a random number of particles drawn from the offspring law.
        #[arg(long)]
        y_process: bool,
    },
    /// Evaluates limit laws on parameter grids.
    Limits {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        theorem: LimitKind,
        #[arg(long, default_value_t = 5)]
        j_max: usize,
        #[arg(long, default_value = "0.5,1,2")]
        y: Grid,
        #[arg(long, default_value = "0.25,0.5,0.75")]
        x: Grid,
        #[arg(long, default_value = "1")]
        a: Grid,
        #[arg(long, default_value = "0,0.5,1,2")]
        lambda: Grid,
    },
    /// Reduced counts and MRCA depth under the small-population event, lattice models.
    #[command(name = "verify-theorem1")]
    VerifyTheorem1 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = 300.0)]
        t: f64,
        #[arg(long, default_value = "pow:0.6")]
        phi: Schedule,
        #[arg(long, default_value = "0.5,1")]
        y_grid: Grid,
        #[arg(long, default_value_t = 2)]
        j_max: usize,
        /// Observation time is t - c y phi(t); c = 1 by default.
        #[arg(long, default_value_t = 1.0)]
        offset_factor: f64,
        #[arg(long, default_value_t = 5000)]
        min_accepted: u64,
    },
    /// Reduced counts and MRCA depth under the linear event, non-lattice models.
    #[command(name = "verify-theorem2")]
    VerifyTheorem2 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = 150.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value = "0.5")]
        x_grid: Grid,
        #[arg(long, default_value_t = 3)]
        j_max: usize,
        #[arg(long, default_value_t = 1000)]
        min_accepted: u64,
    },
    /// KS test of Z(t)/(Bt) given survival against exponential(1).
    #[command(name = "verify-yaglom")]
    VerifyYaglom {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = 500.0)]
        t: f64,
        #[arg(long)]
        y_process: bool,
        #[arg(long, default_value_t = 0.05)]
        ks_threshold: f64,
        #[arg(long, default_value_t = 10_000)]
        min_accepted: u64,
    },
    /// Itemized check of the model hypotheses and the lifetime tail condition.
    #[command(name = "check-conditions")]
    CheckConditions {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "pow:0.6")]
        phi: Schedule,
        #[arg(long, default_value = "40,80,160,320,640,1280")]
        t_grid: Grid,
        /// Length of the renewal table written for lattice models.
        #[arg(long, default_value_t = 1000)]
        renewal_t: usize,
    },
    /// Finite-t convergence sweep of an asymptotic relation.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: SweepKind,
        #[arg(long, default_value = "256,512,1024,2048,4096")]
        t_grid: Grid,
        /// psi schedule for the difference and derivative sweeps.
        #[arg(long, default_value = "pow:0.5")]
        psi: Schedule,
        /// Derivative order.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Local limit window k <= C t.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Event for the acceptance-rate sweep.
        #[arg(long, default_value = "small:pow:0.6")]
        event: String,
        #[command(flatten)]
        sampling: Sampling,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    #[value(name = "1")]
    T1,
    #[value(name = "2")]
    T2,
    C1,
    C2,
    Yaglom,
    Intermediate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Survival,
    LocalLimit,
    Difference,
    Derivative,
    Renewal,
    Acceptance,
}

pub(crate) struct Loaded {
    pub spec: ModelSpec,
    pub model: Model,
    pub output: Output,
}

pub(crate) fn load(common: &Common) -> Result<Loaded> {
    let spec = load_model_spec(&common.model)?;
    let model = spec.build()?;
    let output = Output::new(common.out.clone())?;
    Ok(Loaded { spec, model, output })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
