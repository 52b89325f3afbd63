//! Simulation harness: scenario configuration, the closed loop, output
//! writers, plots and the command-line interface.

use thiserror::Error;

pub mod cli;
pub mod config;
pub mod output;
pub mod plot;
pub mod sim;

pub use config::{EnergyConfig, ModelConfig, ScenarioConfig};

pub use sim::{simulate, Event, EventKind, SimOutput, Summary, TraceRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plot error: {0}")]
    Plot(String),
}
