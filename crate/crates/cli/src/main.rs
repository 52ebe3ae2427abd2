use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use autobid_fpa::audits::{run_audits, AuditReport};
use autobid_fpa::bounds::{
    full_autobidding_ml_bound, gamma_sweep, mixed_poa_bound, ml_poa_bound, sweep_csv,
};
use autobid_fpa::equilibrium::{
    best_response_dynamics, default_initial_profile, truthful_profile, verify_equilibrium,
};
use autobid_fpa::frontier::{best_response, Frontier};
use autobid_fpa::instances::{
    lemma_lb_instance, random_instance, thm1_instance, RandomInstanceConfig,
};
use autobid_fpa::io::{parse_scenario, Scenario};
use autobid_fpa::{CandidateGrid, Error, StrategyProfile};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

/// Exit status for a computation that ran but whose property did not hold.
const PROPERTY_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "autobid-fpa",
    version,
    about = "First-price auctions with utility and value maximizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price-of-anarchy bound, without reserves or with gamma-accurate reserves.
    Bounds {
        #[arg(long, value_parser = unit_interval)]
        gamma: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// CSV of both bounds over gamma in [0, 1].
    SweepGamma {
        #[arg(long, default_value_t = 0.01, value_parser = positive)]
        step: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Emit an instance and profile as scenario JSON.
    MakeInstance {
        #[command(subcommand)]
        kind: MakeInstance,
    },
    /// Best response of one bidder to the scenario profile.
    BestResponse {
        #[arg(long)]
        bidder: usize,
        /// Include the per-auction frontier breakpoints.
        #[arg(long)]
        frontiers: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Check that the scenario profile is an epsilon-equilibrium.
    Verify {
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Round-robin best-response dynamics.
    Dynamics {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        max_iters: u64,
        #[arg(long, value_enum, default_value_t = Start::Truthful)]
        start: Start,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Check the welfare and payment inequalities on the scenario profile.
    Audit {
        #[arg(long, default_value_t = 1e-6, value_parser = nonnegative)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[command(flatten)]
        io: IoArgs,
    },
}

#[derive(Debug, Subcommand)]
enum MakeInstance {
    /// Two value maximizers whose equilibrium welfare ratio is 1/(2-eps).
    Thm1 {
        #[arg(long, value_parser = positive)]
        eps: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mixed instance whose equilibrium attains the mixed bound at `t`.
    LemLb {
        #[arg(long, value_parser = positive)]
        t: f64,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Random instance; kinds and values are drawn from `seed`.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, value_parser = unit_interval)]
        gamma: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Start {
    /// Every bidder bids its value.
    Truthful,
    /// Utility maximizers best-respond to truthful bids.
    Default,
    /// The profile in the scenario.
    Input,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Scenario JSON file; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    epsilon: f64,
    /// Uniform candidate-bid steps per auction.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    grid: u64,
}

impl SolverArgs {
    fn grid(&self) -> CandidateGrid {
        CandidateGrid::new(self.grid as usize)
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} is not a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} is not a nonnegative number")),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        Ok(x) => Err(format!("{x} is not in [0, 1]")),
        Err(e) => Err(e.to_string()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn read_scenario(input: Option<&Path>) -> Result<Scenario> {
    let text = match input {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .context("reading standard input")?;
            s
        }
    };
    Ok(parse_scenario(&text)?)
}

fn require_profile(scenario: &Scenario) -> Result<&StrategyProfile> {
    match &scenario.profile {
        Some(p) => Ok(p),
        None => bail!("profile: scenario has no profile"),
    }
}

fn write_output(out: &OutputArgs, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &out.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing standard output"),
    }
}

fn audit_table(report: &AuditReport) -> String {
    let width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut s = format!(
        "{:<width$}  {:>14}  {:>14}  {:>14}  {}\n",
        "lemma", "lhs", "rhs", "margin", "pass"
    );
    for c in &report.checks {
        s += &format!(
            "{:<width$}  {:>14.9}  {:>14.9}  {:>14.3e}  {}\n",
            c.name, c.lhs, c.rhs, c.margin, c.pass
        );
    }
    s
}

/// Runs one subcommand and returns whether its checked property held.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Bounds { gamma, out } => {
            let text = match gamma {
                None => to_json(&mixed_poa_bound()),
                Some(g) => {
                    let b = ml_poa_bound(g)?;
                    to_json(&json!({
                        "gamma": g,
                        "minimizer_t": b.minimizer_t,
                        "bound_value": b.bound_value,
                        "full_autobidding_bound": full_autobidding_ml_bound(g)?,
                    }))
                }
            };
            write_output(&out, &text)?;
            Ok(true)
        }
        Command::SweepGamma { step, out } => {
            let text = sweep_csv(&gamma_sweep(step)?);
            write_output(&out, &text)?;
            Ok(true)
        }
        Command::MakeInstance { kind } => {
            let (scenario, out) = match kind {
                MakeInstance::Thm1 { eps, out } => (thm1_instance(eps)?.to_scenario(), out),
                MakeInstance::LemLb { t, grid, out } => {
                    (lemma_lb_instance(t, grid)?.to_scenario(), out)
                }
                MakeInstance::Random {
                    seed,
                    n,
                    m,
                    gamma,
                    out,
                } => {
                    let config = RandomInstanceConfig {
                        gamma,
                        ..RandomInstanceConfig::new(n as usize, m as usize)
                    };
                    let instance = random_instance(seed, config)?;
                    let scenario = Scenario {
                        profile: Some(truthful_profile(&instance)),
                        instance,
                        predicted_ratio: None,
                        params: None,
                    };
                    (scenario, out)
                }
            };
            let text = scenario.to_json();
            write_output(&out, &text)?;
            Ok(true)
        }
        Command::BestResponse {
            bidder,
            frontiers,
            solver,
            io,
        } => {
            let scenario = read_scenario(io.input.as_deref())?;
            let profile = require_profile(&scenario)?;
            let br = best_response(&scenario.instance, profile, bidder, solver.grid())?;
            let mut value = serde_json::to_value(&br)?;
            if frontiers {
                let fs: Vec<&Frontier> = br.views.iter().map(|v| &v.frontier).collect();
                value["frontiers"] = serde_json::to_value(fs)?;
            }
            let text = to_json(&value);
            write_output(&io.out, &text)?;
            Ok(true)
        }
        Command::Verify { solver, io } => {
            let scenario = read_scenario(io.input.as_deref())?;
            let profile = require_profile(&scenario)?;
            let report =
                verify_equilibrium(&scenario.instance, profile, solver.grid(), solver.epsilon)?;
            let text = to_json(&report);
            write_output(&io.out, &text)?;
            Ok(report.is_equilibrium)
        }
        Command::Dynamics {
            max_iters,
            start,
            solver,
            io,
        } => {
            let scenario = read_scenario(io.input.as_deref())?;
            let instance = &scenario.instance;
            let initial = match start {
                Start::Truthful => truthful_profile(instance),
                Start::Default => default_initial_profile(instance, solver.grid())?,
                Start::Input => require_profile(&scenario)?.clone(),
            };
            let result = best_response_dynamics(
                instance,
                &initial,
                solver.grid(),
                max_iters as usize,
                solver.epsilon,
            )?;
            let text = to_json(&result);
            write_output(&io.out, &text)?;
            Ok(result.converged)
        }
        Command::Audit {
            epsilon,
            format,
            io,
        } => {
            let scenario = read_scenario(io.input.as_deref())?;
            let profile = require_profile(&scenario)?;
            let report = run_audits(&scenario.instance, profile, epsilon)?;
            let text = match format {
                Format::Table => audit_table(&report),
                Format::Json => to_json(&report),
            };
            write_output(&io.out, &text)?;
            Ok(report.all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(PROPERTY_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::InfeasibleProfile { .. }) => ExitCode::from(PROPERTY_FAILED),
                _ => ExitCode::from(1),
            }
        }
    }
}
