//! Command-line front end: `solve`, `bench`, `verify` and `toy`.

pub mod commands;
pub mod config;
pub mod problems;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use splda::ToyId;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "splda", version, about = "Smoothed PLDA solver, baselines and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method and write a trace CSV and a JSON summary.
    Solve(RunArgs),
    /// Compare smoothed PLDA with the grid-searched baselines at an equal budget.
    Bench(RunArgs),
    /// Run the check battery; exits with status 1 when any check fails.
    Verify {
        /// `all` or criterion numbers such as `1,4,9`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Report path (JSON); printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the stationary sets of a planar toy on a grid.
    Toy {
        #[arg(long)]
        id: ToyId,
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
}

/// Flags mirror the config keys; each given flag overrides the file value.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Config file (`key = value` lines under `[problem]`, `[method]`, `[run]`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `section.key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub target_mode: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub trust_radius: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Allow parameters outside the convergence theory.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub stride: Option<String>,
    #[arg(long)]
    pub gs: bool,
    #[arg(long)]
    pub os: bool,
    #[arg(long)]
    pub potential: bool,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub inner_target: Option<String>,
    #[arg(long)]
    pub inner_max_iters: Option<String>,
    #[arg(long)]
    pub inner_strict: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let pairs = [
            ("problem.family", &self.problem),
            ("problem.n", &self.n),
            ("problem.d", &self.d),
            ("problem.rho", &self.rho),
            ("problem.p", &self.p),
            ("problem.seed", &self.seed),
            ("problem.target_mode", &self.target_mode),
            ("problem.data", &self.data),
            ("problem.eta", &self.eta),
            ("problem.trust_radius", &self.trust_radius),
            ("method.name", &self.method),
            ("method.regime", &self.regime),
            ("method.r", &self.r),
            ("method.lambda", &self.lambda),
            ("method.alpha", &self.alpha),
            ("method.beta", &self.beta),
            ("method.step", &self.step),
            ("method.schedule", &self.schedule),
            ("run.horizon", &self.horizon),
            ("run.stride", &self.stride),
            ("run.tol", &self.tol),
            ("run.inner_target", &self.inner_target),
            ("run.inner_max_iters", &self.inner_max_iters),
            ("run.inner_strict", &self.inner_strict),
            ("run.x0", &self.x0),
            ("run.y0", &self.y0),
            ("run.out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for (key, on) in [("method.force", self.force), ("run.gs", self.gs), ("run.os", self.os), ("run.potential", self.potential)] {
            if on {
                cfg.set(key, "true")?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let s = commands::solve(&cfg)?;
            println!(
                "{}: {} steps in {:.1} ms, final objective {}; wrote {}",
                s.problem,
                cfg.run.horizon,
                s.wall_time_ms,
                s.metrics.objective.map_or("n/a".into(), |v| format!("{v:.6}")),
                cfg.run.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            let s = commands::bench(&cfg)?;
            println!("{}", s.problem);
            for r in &s.results {
                let step = r.step.map_or(String::new(), |v| format!(" (s0 = {v})"));
                println!("  {:<8} final {:.6}  best {:.6}{step}", r.method, r.final_objective, r.best_objective);
            }
            for rep in &s.check_reports {
                println!("{}", rep.summary_line());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, seed, out } => {
            let ids = commands::parse_suite(&suite)?;
            let report = commands::verify(&ids, seed)?;
            let json = commands::verify_json(&report)?;
            for c in &report.criteria {
                println!("criterion {}: {} ({})", c.id, if c.pass() { "PASS" } else { "FAIL" }, c.title);
                for r in &c.reports {
                    println!("  {}", r.summary_line());
                }
            }
            match out {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Toy { id, grid, tol } => {
            print!("{}", commands::toy(id, grid, tol)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_set_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "[problem]\nfamily = kl-planar\nn = 5\n[run]\nhorizon = 40\n").unwrap();
        let cli = Cli::try_parse_from([
            "splda", "solve", "--config", path.to_str().unwrap(), "--horizon", "50", "--set", "run.horizon=60", "--problem", "bilinear",
        ])
        .unwrap();
        let Command::Solve(args) = cli.command else { panic!("expected solve") };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.problem.family, config::Family::Bilinear);
        assert_eq!(cfg.problem.n, 5);
        assert_eq!(cfg.run.horizon, 60);
    }

    #[test]
    fn bad_values_are_rejected() {
        let cli = Cli::try_parse_from(["splda", "solve", "--problem", "nope"]).unwrap();
        let Command::Solve(args) = cli.command else { panic!("expected solve") };
        assert!(args.resolve().is_err());
        assert!(Cli::try_parse_from(["splda", "toy", "--id", "nope"]).is_err());
    }
}
