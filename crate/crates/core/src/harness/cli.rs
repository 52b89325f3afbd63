//! Command-line front end. Exit codes: 0 success, 1 property failure,
//! 2 input error, 3 fatal simulation event.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::output::{read_events, read_trace, write_outputs, FrameworkFile};
use super::plot::{render_plots, PlotContext};
use super::sim::simulate;
use super::HarnessError;
use crate::network::{
    build_network_with, BuildOptions, EnergyLevel, HennebergRecord, NetworkWarning,
};
use crate::planner::{min_time_return, Obstacle, PlanError, RobotState};
use crate::rigidity::{is_ibr, Configuration, DEFAULT_RANK_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FATAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rescov",
    version,
    about = "Energy-aware rigid-formation coverage simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace, events, summary and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        dump_cells: bool,
        #[arg(long)]
        verbose_solver: bool,
    },
    /// Report rank, nullity and rigidity of a framework file.
    CheckRigidity {
        #[arg(long)]
        framework: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
    },
    /// Build an energy-aware rigid network from positions and SOCs.
    BuildNetwork {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum-time return plan for a single robot.
    PlanReturn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render plots from a trace and an event stream.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario used for the mission space and base marker.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Input of `build-network`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildInput {
    pub positions: Vec<[f64; 2]>,
    pub socs: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildOutput {
    pub framework: FrameworkFile,
    pub record: HennebergRecord,
    /// Robot id of each vertex.
    pub robots: Vec<usize>,
    pub levels: Vec<EnergyLevel>,
    pub warnings: Vec<NetworkWarning>,
}

/// Input of `plan-return`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanInput {
    pub state: RobotState,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

enum Failure {
    Input(String),
    Property(String),
    Fatal(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate {
            config,
            out,
            seed,
            steps,
            dump_cells,
            verbose_solver,
        } => {
            let mut cfg = ScenarioConfig::from_json(&read(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = steps {
                cfg.steps = s;
            }
            cfg.dump_cells |= dump_cells;
            cfg.verbose_solver |= verbose_solver;
            let dir = out
                .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
                .ok_or_else(|| Failure::Input("no output directory given".into()))?;
            let result = simulate(&cfg)?;
            write_outputs(&result, &cfg, &dir)?;
            let s = &result.summary;
            println!(
                "steps={} min_soc={:.6} transitions={} departures={} rejoins={} rigidity={}/{}",
                s.steps_run,
                s.min_soc,
                s.transitions,
                s.departures,
                s.rejoins,
                s.rigidity_passed,
                s.rigidity_checks
            );
            if let Some(msg) = &s.fatal {
                return Err(Failure::Fatal(msg.clone()));
            }
            if s.rigidity_passed != s.rigidity_checks {
                return Err(Failure::Property("a rigidity check failed".into()));
            }
            Ok(())
        }
        Command::CheckRigidity { framework, tol } => {
            let file: FrameworkFile = parse(&framework)?;
            let fw = file.to_framework()?;
            let report = is_ibr(&fw, tol).map_err(|e| Failure::Input(e.to_string()))?;
            println!(
                "n={} m={} rank={} nullity={} rigid={}",
                fw.n(),
                fw.graph.m(),
                report.rank,
                report.nullity,
                report.rigid
            );
            if report.rigid {
                Ok(())
            } else {
                Err(Failure::Property(
                    "framework is not infinitesimally bearing rigid".into(),
                ))
            }
        }
        Command::BuildNetwork { input, out } => {
            let req: BuildInput = parse(&input)?;
            let config = Configuration::from_xy(&req.positions)
                .map_err(|e| Failure::Input(e.to_string()))?;
            let robots: Vec<usize> = (0..req.positions.len()).collect();
            let built = build_network_with(
                &config,
                &req.socs,
                &robots,
                req.seed,
                &BuildOptions::default(),
            )
            .map_err(|e| Failure::Input(e.to_string()))?;
            let net = built.network;
            let output = BuildOutput {
                framework: FrameworkFile::from_framework(&net.framework),
                record: net.record,
                robots: net.robots,
                levels: built.levels,
                warnings: built.warnings,
            };
            write_json(&out, &output)?;
            println!(
                "n={} m={}",
                output.robots.len(),
                output.framework.edges.len()
            );
            Ok(())
        }
        Command::PlanReturn { input, out } => {
            let req: PlanInput = parse(&input)?;
            req.scenario.validate()?;
            let model = req.scenario.robot_model();
            let params = req.scenario.planner_params();
            match min_time_return(&req.state, &model, &req.obstacles, &params) {
                Ok(plan) => {
                    println!(
                        "tau_star={} energy_required={:.9}",
                        plan.tau_star, plan.energy_required
                    );
                    if let Some(path) = out {
                        write_json(&path, &plan)?;
                    }
                    Ok(())
                }
                Err(e @ PlanError::Unreachable { .. }) => Err(Failure::Property(e.to_string())),
                Err(e) => Err(Failure::Input(e.to_string())),
            }
        }
        Command::Plot {
            trace,
            events,
            out,
            config,
        } => {
            let traces = read_trace(&trace)?;
            let events = read_events(&events)?;
            let ctx = match config {
                Some(p) => PlotContext::from_config(&ScenarioConfig::from_json(&read(&p)?)?),
                None => PlotContext::from_traces(&traces)?,
            };
            for p in render_plots(&traces, &events, &ctx, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Property(msg)) => {
            eprintln!("{msg}");
            EXIT_PROPERTY
        }
        Err(Failure::Fatal(msg)) => {
            eprintln!("fatal: {msg}");
            EXIT_FATAL
        }
    }
}
