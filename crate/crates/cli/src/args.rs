use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sot",
    version,
    about = "Simultaneous optimal transport: solvers, 1D constructions and verification oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal plan to the target given in the problem file, with dual potentials.
    SolveFixed(Input),
    /// Optimal target and plan (free-marginal problem).
    SolveFree(Input),
    /// Greedy monotone mixing on the line, checked against the free-target optimum.
    #[command(name = "solve-1d")]
    Solve1d(Input),
    /// Lyapunov transform of `target_density` on [0, 1].
    LyapunovMap(Input),
    /// ε-approximate Monge map between piecewise-constant densities.
    MongeApprox(Input),
    /// Feasibility report and cost of the plan in the problem file.
    Verify(Input),
    /// c-monotonicity, cyclic monotonicity and potential checks of a plan.
    Oracle(Input),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveFixed(_) => "solve-fixed",
            Command::SolveFree(_) => "solve-free",
            Command::Solve1d(_) => "solve-1d",
            Command::LyapunovMap(_) => "lyapunov-map",
            Command::MongeApprox(_) => "monge-approx",
            Command::Verify(_) => "verify",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn input(&self) -> &Input {
        match self {
            Command::SolveFixed(i)
            | Command::SolveFree(i)
            | Command::Solve1d(i)
            | Command::LyapunovMap(i)
            | Command::MongeApprox(i)
            | Command::Verify(i)
            | Command::Oracle(i) => i,
        }
    }
}

#[derive(Debug, Args)]
pub struct Input {
    /// Problem file (JSON).
    pub problem: PathBuf,
}

/// Flags override the `options` block of the problem file.
#[derive(Debug, Args)]
pub struct Options {
    /// Tolerance override such as `feas=1e-9`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    pub tol: Vec<String>,
    /// Solve in exact rational arithmetic (solve-fixed only).
    #[arg(long, global = true)]
    pub exact: bool,
    /// Cells per side (monge-approx) or grid points per axis (audit).
    #[arg(long, value_name = "N", global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Seed of the competitor sampler.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "max-subset-size", value_name = "K", global = true)]
    pub max_subset_size: Option<usize>,
    /// Cross-check solve-free against the full free-marginal program on a grid.
    #[arg(long, global = true)]
    pub audit: bool,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long, value_name = "N", global = true)]
    pub threads: Option<usize>,
    /// Result document path; stdout when omitted.
    #[arg(long, short, value_name = "FILE", global = true)]
    pub output: Option<PathBuf>,
    /// Directory for two-column CSV plot tables.
    #[arg(long = "plot-dir", value_name = "DIR", global = true)]
    pub plot_dir: Option<PathBuf>,
}
