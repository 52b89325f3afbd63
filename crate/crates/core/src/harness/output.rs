//! On-disk formats: trace CSV, event and cell JSONL, summary JSON and the
//! framework file used by the rigidity and network subcommands.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::plot::{render_plots, PlotContext};
use super::sim::{CellsRecord, Event, SimOutput, SolverRecord, TraceRecord};
use super::HarnessError;
use crate::rigidity::{Configuration, Framework, Graph};

pub const TRACE_FILE: &str = "trace.csv";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CELLS_FILE: &str = "cells.jsonl";
pub const SOLVER_FILE: &str = "solver.csv";
pub const CONFIG_FILE: &str = "config.json";

/// `{"d": 2, "positions": [[x, y], ...], "edges": [[i, j], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkFile {
    pub d: usize,
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<[usize; 2]>,
}

impl FrameworkFile {
    pub fn from_framework(fw: &Framework) -> Self {
        Self {
            d: 2,
            positions: fw.config.positions.iter().map(|p| [p.x, p.y]).collect(),
            edges: fw.graph.edges().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn to_framework(&self) -> Result<Framework, HarnessError> {
        if self.d != 2 {
            return Err(HarnessError::Config(format!(
                "only planar frameworks are supported, got d = {}",
                self.d
            )));
        }
        let bad = |e: crate::rigidity::RigidityError| HarnessError::Config(e.to_string());
        let config = Configuration::from_xy(&self.positions).map_err(bad)?;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = Graph::from_edges(self.positions.len(), &edges).map_err(bad)?;
        Framework::new(graph, config).map_err(bad)
    }
}

pub fn write_trace(path: &Path, traces: &[TraceRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for t in traces {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<(), HarnessError> {
    write_jsonl(path, events)
}

pub fn read_events(path: &Path) -> Result<Vec<Event>, HarnessError> {
    read_jsonl(path)
}

pub fn read_cells(path: &Path) -> Result<Vec<CellsRecord>, HarnessError> {
    read_jsonl(path)
}

fn write_solver(path: &Path, rows: &[SolverRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every artifact of a run into `dir` and returns the paths written.
pub fn write_outputs(
    out: &SimOutput,
    cfg: &ScenarioConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    write_trace(&emit(TRACE_FILE), &out.traces)?;
    write_events(&emit(EVENTS_FILE), &out.events)?;
    fs::write(
        emit(SUMMARY_FILE),
        serde_json::to_string_pretty(&out.summary)?,
    )?;
    fs::write(emit(CONFIG_FILE), serde_json::to_string_pretty(cfg)?)?;
    if !out.cells.is_empty() {
        write_jsonl(&emit(CELLS_FILE), &out.cells)?;
    }
    if !out.solver.is_empty() {
        write_solver(&emit(SOLVER_FILE), &out.solver)?;
    }
    if !out.traces.is_empty() {
        let ctx = PlotContext::from_config(cfg);
        written.extend(render_plots(&out.traces, &out.events, &ctx, dir)?);
    }
    Ok(written)
}
