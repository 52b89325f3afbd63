//! The per-step simulation loop.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::HarnessError;
use crate::coverage::{cell_costs, coverage_cost, voronoi_partition, VoronoiCell};
use crate::energy::{
    apply_energy, evaluate_guard, plan_deviation, EnergyError, EnergyState, Mode,
    STALE_PLAN_THRESHOLD,
};
use crate::mpc::{desired_bearings, mpc_control, BearingTargets};
use crate::network::{
    build_network_with, energy_level, insert_robot, BuildOptions, EnergyLevel, Network,
};
use crate::planner::{
    follow_plan, min_time_return_from, Obstacle, PlanError, ReturnPlan, RobotModel, RobotState,
};
use crate::reconfig::{reconfigure, DepartureBatch, RepairReport};
use crate::rigidity::{is_ibr, Configuration, Graph, Vec2};

/// One row of the trace: the state of one robot at the start of step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub robot: usize,
    pub mode: Mode,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub soc: f64,
    pub level: EnergyLevel,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub cell_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub k: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ModeTransition {
        robot: usize,
        from: Mode,
        to: Mode,
        soc: f64,
        tau_star: Option<usize>,
        /// Position at which the guard fired.
        x: f64,
        y: f64,
    },
    Departure {
        robot: usize,
        level: EnergyLevel,
        soc: f64,
    },
    Reconfiguration {
        departed: Vec<usize>,
        report: Option<RepairReport>,
        edges: Vec<(usize, usize)>,
    },
    RigidityCheck {
        trigger: String,
        pass: bool,
        n: usize,
        m: usize,
        rank: usize,
        expected_rank: usize,
    },
    Rejoin {
        robot: usize,
        neighbors: Vec<usize>,
        rebuilt: bool,
        edges: Vec<(usize, usize)>,
    },
    Warning {
        robot: Option<usize>,
        message: String,
    },
    Fatal {
        message: String,
    },
}

/// Cells of one step, for the optional dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellsRecord {
    pub k: usize,
    pub cells: Vec<VoronoiCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub k: usize,
    pub robot: usize,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_robots: usize,
    pub steps_run: usize,
    pub aborted: bool,
    pub fatal: Option<String>,
    pub min_soc: f64,
    pub min_soc_robot: usize,
    pub min_soc_k: usize,
    /// Coverage cost over the active robots at each step.
    pub coverage_cost: Vec<Option<f64>>,
    pub max_area_error: f64,
    pub rigidity_checks: usize,
    pub rigidity_passed: usize,
    pub transitions: usize,
    pub departures: usize,
    pub rejoins: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub traces: Vec<TraceRecord>,
    pub events: Vec<Event>,
    pub summary: Summary,
    pub cells: Vec<CellsRecord>,
    pub solver: Vec<SolverRecord>,
}

impl SimOutput {
    pub fn exit_code(&self) -> i32 {
        if self.summary.aborted {
            3
        } else {
            0
        }
    }
}

struct Robot {
    id: usize,
    x: RobotState,
    energy: EnergyState,
    // Last plan computed in mode 1 and the step it was computed at.
    cached: Option<(ReturnPlan, usize)>,
    last_tau: Option<usize>,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    model: RobotModel,
    robots: Vec<Robot>,
    network: Option<Network>,
    events: Vec<Event>,
    aborted: Option<String>,
}

fn level_of(soc: f64) -> EnergyLevel {
    energy_level(soc.clamp(0.0, 1.0)).expect("clamped SOC has a level")
}

impl<'a> Sim<'a> {
    fn push(&mut self, k: usize, kind: EventKind) {
        self.events.push(Event { k, kind });
    }

    fn warn(&mut self, k: usize, robot: Option<usize>, message: String) {
        self.push(k, EventKind::Warning { robot, message });
    }

    fn fatal(&mut self, k: usize, message: String) {
        self.push(
            k,
            EventKind::Fatal {
                message: message.clone(),
            },
        );
        self.aborted = Some(message);
    }

    fn active(&self) -> Vec<usize> {
        self.robots
            .iter()
            .filter(|r| r.energy.mode == Mode::Coverage)
            .map(|r| r.id)
            .collect()
    }

    /// Fresh network over the given robots, or `None` below two robots.
    fn build(&mut self, k: usize, ids: &[usize]) -> Result<Option<Network>, String> {
        if ids.len() < 2 {
            return Ok(None);
        }
        let positions: Vec<Vec2> = ids.iter().map(|&i| self.robots[i].x.pos).collect();
        let socs: Vec<f64> = ids
            .iter()
            .map(|&i| self.robots[i].energy.soc.clamp(0.0, 1.0))
            .collect();
        let opts = BuildOptions {
            rank_tol: self.cfg.rank_tol,
            ..BuildOptions::default()
        };
        let config = Configuration::new(positions).map_err(|e| e.to_string())?;
        let seed = self.cfg.seed.wrapping_add(k as u64);
        let outcome =
            build_network_with(&config, &socs, ids, seed, &opts).map_err(|e| e.to_string())?;
        for w in &outcome.warnings {
            let message = serde_json::to_string(w).unwrap_or_default();
            self.warn(k, None, format!("network build: {message}"));
        }
        Ok(Some(outcome.network))
    }

    /// The network with every vertex moved to its robot's current position.
    fn refreshed(&self) -> Result<Option<Network>, String> {
        match &self.network {
            None => Ok(None),
            Some(net) => {
                let pts = net.robots.iter().map(|&r| self.robots[r].x.pos).collect();
                net.with_positions(pts).map(Some).map_err(|e| e.to_string())
            }
        }
    }

    fn vertex_levels(&self, net: &Network) -> Vec<EnergyLevel> {
        net.robots
            .iter()
            .map(|&r| level_of(self.robots[r].energy.soc))
            .collect()
    }

    fn check_rigidity(&mut self, k: usize, trigger: &str) -> bool {
        let (pass, n, m, rank, expected_rank) = match &self.network {
            None => {
                let n = self.active().len();
                (n <= 1, n, 0, 0, 0)
            }
            Some(net) => {
                let n = net.n();
                let m = net.framework.graph.m();
                let expected = Graph::minimal_edge_count(n);
                match is_ibr(&net.framework, self.cfg.rank_tol) {
                    Ok(r) => (r.rigid && m == expected, n, m, r.rank, expected),
                    Err(_) => (false, n, m, 0, expected),
                }
            }
        };
        self.push(
            k,
            EventKind::RigidityCheck {
                trigger: trigger.into(),
                pass,
                n,
                m,
                rank,
                expected_rank,
            },
        );
        pass
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.network
            .as_ref()
            .map(|n| n.robot_edges())
            .unwrap_or_default()
    }

    fn obstacles_for(&self, i: usize, snapshot: &[(Mode, Vec2)]) -> Vec<Obstacle> {
        let r_safe = self.cfg.model.r_safe;
        if r_safe <= 0.0 {
            return Vec::new();
        }
        let me = self.robots[i].x.pos;
        snapshot
            .iter()
            .enumerate()
            .filter(|&(j, (mode, p))| {
                j != i
                    && matches!(mode, Mode::Coverage | Mode::ReturnToBase)
                    && (p - self.cfg.base).norm() > self.cfg.base_radius + r_safe
                    && (p - me).norm() > r_safe
            })
            .map(|(_, (_, p))| Obstacle {
                center: *p,
                radius: r_safe,
            })
            .collect()
    }

    /// Return plan for robot `i`, with the obstacle-free retry.
    fn plan(
        &mut self,
        k: usize,
        i: usize,
        snapshot: &[(Mode, Vec2)],
    ) -> Result<ReturnPlan, PlanError> {
        let obstacles = self.obstacles_for(i, snapshot);
        let mut params = self.cfg.planner_params();
        let r = &self.robots[i];
        // No horizon shorter than the obstacle-free optimum can work, so a
        // clear obstacle-free plan is already the answer.
        let free = min_time_return_from(&r.x, &self.model, &[], &params, r.last_tau)?;
        let clear = free.states.iter().all(|s| {
            obstacles
                .iter()
                .all(|o| (s.pos - o.center).norm() >= o.radius)
        });
        if clear {
            return Ok(free);
        }
        // Detours longer than this are not worth the search.
        params.t_max = Some(2 * free.tau_star + 20);
        match min_time_return_from(&r.x, &self.model, &obstacles, &params, Some(free.tau_star)) {
            Err(PlanError::Unreachable { .. }) if !obstacles.is_empty() => {
                self.warn(
                    k,
                    Some(i),
                    "return plan blocked by other robots; planned without them".into(),
                );
                Ok(free)
            }
            other => other,
        }
    }

    fn guards(&mut self, k: usize) -> Vec<(usize, Mode, Mode)> {
        let snapshot: Vec<(Mode, Vec2)> = self
            .robots
            .iter()
            .map(|r| (r.energy.mode, r.x.pos))
            .collect();
        let params = self.cfg.energy_params();
        let replan_every = self.cfg.energy.replan_every;
        let mut switched = Vec::new();
        for i in 0..self.robots.len() {
            let mut state = self.robots[i].energy.clone();
            let x = self.robots[i].x;
            let reuse = match &self.robots[i].cached {
                Some((plan, made)) if state.mode == Mode::Coverage => {
                    k - made < replan_every && plan_deviation(plan, &x) <= STALE_PLAN_THRESHOLD
                }
                _ => false,
            };
            let mut fresh = None;
            let mut planning_error = None;
            let base = self.cfg.base;
            let mut plan_for = |_: &RobotState| -> Result<ReturnPlan, PlanError> {
                if reuse {
                    return Ok(self.robots[i].cached.as_ref().expect("checked").0.clone());
                }
                match self.plan(k, i, &snapshot) {
                    Ok(p) => {
                        fresh = Some(p.clone());
                        Ok(p)
                    }
                    Err(e) => {
                        planning_error = Some(e.clone());
                        Err(e)
                    }
                }
            };
            let result = evaluate_guard(&mut state, &x, base, &mut plan_for, &params);
            if let Some(p) = fresh {
                self.robots[i].last_tau = Some(p.tau_star);
                self.robots[i].cached = Some((p, k));
            }
            match result {
                Ok(Some(t)) => {
                    self.push(
                        k,
                        EventKind::ModeTransition {
                            robot: i,
                            from: t.from,
                            to: t.to,
                            soc: t.soc,
                            tau_star: t.tau_star,
                            x: x.pos.x,
                            y: x.pos.y,
                        },
                    );
                    if t.to == Mode::Recharge {
                        self.robots[i].x = RobotState::at_rest(self.cfg.charging_slot(i));
                    }
                    if t.to != Mode::Coverage {
                        self.robots[i].cached = None;
                    }
                    switched.push((i, t.from, t.to));
                }
                Ok(None) => {}
                Err(e) => {
                    let why = planning_error.map_or(e.to_string(), |p| p.to_string());
                    self.fatal(k, format!("robot {i}: {why}"));
                    return switched;
                }
            }
            self.robots[i].energy = state;
        }
        switched
    }

    fn depart(&mut self, k: usize, leaving: &[usize]) {
        let mut batch = Vec::new();
        for &i in leaving {
            let soc = self.robots[i].energy.soc;
            let mut level = level_of(soc);
            if level < EnergyLevel::THREE {
                self.warn(
                    k,
                    Some(i),
                    format!("robot leaves at level {level}; repaired as level 3"),
                );
                level = EnergyLevel::THREE;
            }
            self.push(
                k,
                EventKind::Departure {
                    robot: i,
                    level,
                    soc,
                },
            );
            batch.push((i, level));
        }
        let net = match self.refreshed() {
            Ok(n) => n,
            Err(e) => return self.fatal(k, format!("network refresh failed: {e}")),
        };
        let (network, report) = match net {
            Some(net) if net.n() - batch.len() >= 2 => {
                let levels = self.vertex_levels(&net);
                let outcome = DepartureBatch::new(batch)
                    .and_then(|b| reconfigure(&net, &levels, &b, self.cfg.rank_tol));
                match outcome {
                    Ok((n, r)) => (Some(n), Some(r)),
                    Err(e) => return self.fatal(k, format!("reconfiguration failed: {e}")),
                }
            }
            _ => {
                let remaining = self.active();
                match self.build(k, &remaining) {
                    Ok(n) => (n, None),
                    Err(e) => return self.fatal(k, format!("network rebuild failed: {e}")),
                }
            }
        };
        self.network = network;
        let edges = self.edges();
        self.push(
            k,
            EventKind::Reconfiguration {
                departed: leaving.to_vec(),
                report,
                edges,
            },
        );
        if !self.check_rigidity(k, "reconfiguration") {
            self.fatal(k, "network not rigid after reconfiguration".into());
        }
    }

    fn rejoin(&mut self, k: usize, robot: usize) {
        let net = match self.refreshed() {
            Ok(n) => n,
            Err(e) => return self.fatal(k, format!("network refresh failed: {e}")),
        };
        let rebuilt = !matches!(&net, Some(n) if n.n() >= 2);
        let result = match net {
            Some(net) if net.n() >= 2 => {
                let levels = self.vertex_levels(&net);
                let r = &self.robots[robot];
                insert_robot(
                    &net,
                    &levels,
                    robot,
                    r.x.pos,
                    r.energy.soc.clamp(0.0, 1.0),
                    self.cfg.rank_tol,
                )
                .map(|(n, w)| {
                    if let Some(w) = w {
                        let message = serde_json::to_string(&w).unwrap_or_default();
                        self.warn(k, Some(robot), format!("rejoin: {message}"));
                    }
                    Some(n)
                })
                .map_err(|e| e.to_string())
            }
            _ => {
                let ids = self.active();
                self.build(k, &ids)
            }
        };
        match result {
            Ok(n) => self.network = n,
            Err(e) => return self.fatal(k, format!("rejoin of robot {robot} failed: {e}")),
        }
        let neighbors = self
            .network
            .as_ref()
            .map(|n| n.robot_neighbors(robot))
            .unwrap_or_default();
        let edges = self.edges();
        self.push(
            k,
            EventKind::Rejoin {
                robot,
                neighbors,
                rebuilt,
                edges,
            },
        );
        if !self.check_rigidity(k, "rejoin") {
            self.fatal(k, "network not rigid after rejoin".into());
        }
    }
}

/// Runs a scenario to completion or to its first fatal event.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimOutput, HarnessError> {
    cfg.validate()?;
    let model = cfg.robot_model();
    let params = cfg.energy_params();
    let (positions, socs) = cfg.initial_state();
    let robots = positions
        .iter()
        .zip(&socs)
        .enumerate()
        .map(|(id, (p, s))| Robot {
            id,
            x: RobotState::at_rest(*p),
            energy: EnergyState::covering(*s),
            cached: None,
            last_tau: None,
        })
        .collect();
    let mut sim = Sim {
        cfg,
        model: model.clone(),
        robots,
        network: None,
        events: Vec::new(),
        aborted: None,
    };
    let mut traces = Vec::with_capacity(cfg.steps * cfg.n_robots);
    let mut cells_dump = Vec::new();
    let mut solver = Vec::new();
    let mut coverage_series = Vec::with_capacity(cfg.steps);
    let mut max_area_error = 0.0f64;
    let (mut min_soc, mut min_soc_robot, mut min_soc_k) = (f64::INFINITY, 0, 0);
    for r in &sim.robots {
        if r.energy.soc < min_soc {
            (min_soc, min_soc_robot) = (r.energy.soc, r.id);
        }
    }

    let ids = sim.active();
    match sim.build(0, &ids) {
        Ok(n) => sim.network = n,
        Err(e) => sim.fatal(0, format!("initial network build failed: {e}")),
    }
    if sim.aborted.is_none() && !sim.check_rigidity(0, "initial") {
        sim.fatal(0, "initial network is not rigid".into());
    }

    let space_area = cfg.space.area();
    let mut steps_run = 0;
    for k in 0..cfg.steps {
        if sim.aborted.is_some() {
            break;
        }
        // Guards.
        let switched = if cfg.energy_enabled {
            sim.guards(k)
        } else {
            Vec::new()
        };
        if sim.aborted.is_some() {
            break;
        }
        // Departures, then returns.
        let leaving: Vec<usize> = switched
            .iter()
            .filter(|s| s.1 == Mode::Coverage)
            .map(|s| s.0)
            .collect();
        if !leaving.is_empty() {
            sim.depart(k, &leaving);
        }
        for &(i, from, _) in &switched {
            if sim.aborted.is_none() && from == Mode::Recharge {
                sim.rejoin(k, i);
            }
        }
        if sim.aborted.is_some() {
            break;
        }

        // Partition over the robots in coverage.
        let active = sim.active();
        let mut centroid = vec![None; sim.robots.len()];
        let mut cost = vec![None; sim.robots.len()];
        if active.is_empty() {
            coverage_series.push(None);
        } else {
            let sites: Vec<(usize, Vec2)> =
                active.iter().map(|&i| (i, sim.robots[i].x.pos)).collect();
            let part = match voronoi_partition(&sites, &cfg.space) {
                Ok(p) => p,
                Err(e) => {
                    sim.fatal(k, format!("partition failed: {e}"));
                    break;
                }
            };
            for &r in &part.jittered {
                sim.warn(k, Some(r), "coincident generator jittered".into());
            }
            let total: f64 = part.cells.iter().map(|c| c.mass).sum();
            max_area_error = max_area_error.max((total - space_area).abs() / space_area);
            for (c, h) in part.cells.iter().zip(cell_costs(&part.cells)) {
                centroid[c.owner] = Some(c.centroid);
                cost[c.owner] = Some(h);
            }
            coverage_series.push(Some(coverage_cost(&part.cells)));
            if cfg.dump_cells {
                cells_dump.push(CellsRecord {
                    k,
                    cells: part.cells,
                });
            }
        }

        // Bearing targets over the current topology.
        let mut targets = vec![BearingTargets::default(); sim.robots.len()];
        if let Some(net) = &sim.network {
            let refs: Vec<Option<Vec2>> = net.robots.iter().map(|&r| centroid[r]).collect();
            if refs.iter().all(Option::is_some) {
                let refs: Vec<Vec2> = refs.into_iter().flatten().collect();
                let mut failures = Vec::new();
                for (v, &r) in net.robots.iter().enumerate() {
                    match desired_bearings(&refs, &net.framework.graph, v) {
                        Ok(t) => targets[r] = t,
                        Err(e) => failures.push((r, e.to_string())),
                    }
                }
                for (r, msg) in failures {
                    sim.warn(k, Some(r), format!("no bearing targets: {msg}"));
                }
            }
        }

        // Inputs.
        let mut inputs = vec![Vec2::zeros(); sim.robots.len()];
        for i in 0..sim.robots.len() {
            let mode = sim.robots[i].energy.mode;
            inputs[i] = match mode {
                Mode::Coverage => {
                    let reference = centroid[i].expect("active robots have cells");
                    match mpc_control(&sim.robots[i].x, reference, &targets[i], &model, &cfg.mpc) {
                        Ok(step) => {
                            if let Some(w) = step.warning {
                                sim.warn(k, Some(i), w);
                            }
                            if cfg.verbose_solver {
                                solver.push(SolverRecord {
                                    k,
                                    robot: i,
                                    iterations: step.solution.iterations,
                                    kkt_residual: step.solution.kkt_residual,
                                    objective: step.solution.objective,
                                });
                            }
                            step.input
                        }
                        Err(e) => {
                            sim.warn(k, Some(i), format!("MPC failed ({e}); braking"));
                            let ub = model.input_bound();
                            (-sim.robots[i].x.vel / model.dt).map(|c| c.clamp(-ub, ub))
                        }
                    }
                }
                Mode::ReturnToBase => {
                    let r = &sim.robots[i];
                    let plan = r.energy.plan.as_ref().expect("mode 2 carries a plan");
                    match follow_plan(plan, r.energy.plan_offset) {
                        Ok(u) => u,
                        Err(_) => {
                            let x = r.x;
                            let params = cfg.planner_params();
                            match min_time_return_from(&x, &model, &[], &params, None) {
                                Ok(p) => {
                                    sim.warn(k, Some(i), "return plan exhausted; replanned".into());
                                    let u = p.inputs.first().copied().unwrap_or_default();
                                    sim.robots[i].energy.plan = Some(p);
                                    sim.robots[i].energy.plan_offset = 0;
                                    u
                                }
                                Err(e) => {
                                    sim.fatal(k, format!("robot {i}: {e}"));
                                    Vec2::zeros()
                                }
                            }
                        }
                    }
                }
                Mode::Recharge => Vec2::zeros(),
            };
        }
        if sim.aborted.is_some() {
            break;
        }

        // Record, integrate, charge or drain.
        for i in 0..sim.robots.len() {
            let r = &sim.robots[i];
            traces.push(TraceRecord {
                k,
                robot: i,
                mode: r.energy.mode,
                x: r.x.pos.x,
                y: r.x.pos.y,
                vx: r.x.vel.x,
                vy: r.x.vel.y,
                soc: r.energy.soc,
                level: level_of(r.energy.soc),
                cx: centroid[i].map(|c| c.x),
                cy: centroid[i].map(|c| c.y),
                cell_cost: cost[i],
            });
        }
        let mut exhausted = None;
        for i in 0..sim.robots.len() {
            let u = inputs[i];
            let r = &mut sim.robots[i];
            let before = r.x;
            if r.energy.mode != Mode::Recharge {
                r.x = model.step(&r.x, u);
            }
            if r.energy.mode == Mode::ReturnToBase {
                r.energy.plan_offset += 1;
            }
            if cfg.energy_enabled {
                if let Err(e) = apply_energy(&mut r.energy, &before, u, &params) {
                    let soc = match e {
                        EnergyError::EnergyExhausted { soc } => soc,
                        _ => f64::NAN,
                    };
                    exhausted.get_or_insert((i, e.to_string(), soc));
                    continue;
                }
            }
            if r.energy.soc < min_soc {
                (min_soc, min_soc_robot, min_soc_k) = (r.energy.soc, i, k + 1);
            }
        }
        steps_run = k + 1;
        if let Some((i, msg, soc)) = exhausted {
            if soc < min_soc {
                (min_soc, min_soc_robot, min_soc_k) = (soc, i, k + 1);
            }
            sim.fatal(k, format!("robot {i}: {msg}"));
        }
    }

    let count = |f: &dyn Fn(&EventKind) -> bool| sim.events.iter().filter(|e| f(&e.kind)).count();
    let summary = Summary {
        n_robots: cfg.n_robots,
        steps_run,
        aborted: sim.aborted.is_some(),
        fatal: sim.aborted.clone(),
        min_soc,
        min_soc_robot,
        min_soc_k,
        coverage_cost: coverage_series,
        max_area_error,
        rigidity_checks: count(&|e| matches!(e, EventKind::RigidityCheck { .. })),
        rigidity_passed: count(&|e| matches!(e, EventKind::RigidityCheck { pass: true, .. })),
        transitions: count(&|e| matches!(e, EventKind::ModeTransition { .. })),
        departures: count(&|e| matches!(e, EventKind::Departure { .. })),
        rejoins: count(&|e| matches!(e, EventKind::Rejoin { .. })),
        warnings: count(&|e| matches!(e, EventKind::Warning { .. })),
    };
    Ok(SimOutput {
        traces,
        events: sim.events,
        summary,
        cells: cells_dump,
        solver,
    })
}

/// Robots seen in coverage at step `k` of a trace, for consumers that only
/// have the trace.
pub fn active_at(traces: &[TraceRecord], k: usize) -> BTreeSet<usize> {
    traces
        .iter()
        .filter(|t| t.k == k && t.mode == Mode::Coverage)
        .map(|t| t.robot)
        .collect()
}
