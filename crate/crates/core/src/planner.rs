//! Minimum-time return-to-base planning.
//!
//! For a fixed horizon `T` the return problem is a convex least-effort QP
//! over the input sequence: linear dynamics, box constraints on input,
//! velocity and position, the base as terminal position (at rest for the
//! double integrator) and, when other robots are in the way, half-plane
//! approximations of their safety disks. The shortest feasible `T` is found
//! by exponential plus binary search, starting from a hint when one is
//! available.
//!
//! Without obstacles the two axes decouple, so each probe is two small QPs.
//! The coupled problem is only set up when the decoupled trajectory cuts
//! into a safety disk.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qp::{self, QpError, QpProblem, QpSettings};
use crate::rigidity::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("base not reachable within {t_max} steps")]
    Unreachable { t_max: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("plan offset {offset} past horizon {tau_star}")]
    PlanExhausted { offset: usize, tau_star: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Input is velocity.
    SingleIntegrator,
    /// Input is acceleration.
    DoubleIntegrator,
}

/// Planar robot with per-axis box bounds on input, velocity and position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub kind: ModelKind,
    pub dt: f64,
    pub pos_min: Vec2,
    pub pos_max: Vec2,
    pub v_max: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pos: Vec2,
    pub vel: Vec2,
}

impl RobotState {
    pub fn at_rest(pos: Vec2) -> Self {
        Self {
            pos,
            vel: Vec2::zeros(),
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.dt > 0.0
            && self.v_max > 0.0
            && self.u_max > 0.0
            && (0..2).all(|a| self.pos_min[a] < self.pos_max[a])
            && [self.dt, self.v_max, self.u_max]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(PlanError::InvalidModel(format!("{self:?}")))
        }
    }

    /// Per-component input bound actually enforced.
    pub fn input_bound(&self) -> f64 {
        match self.kind {
            ModelKind::SingleIntegrator => self.u_max.min(self.v_max),
            ModelKind::DoubleIntegrator => self.u_max,
        }
    }

    /// Exact discrete update.
    pub fn step(&self, x: &RobotState, u: Vec2) -> RobotState {
        let dt = self.dt;
        match self.kind {
            ModelKind::SingleIntegrator => RobotState {
                pos: x.pos + u * dt,
                vel: u,
            },
            ModelKind::DoubleIntegrator => RobotState {
                pos: x.pos + x.vel * dt + u * (0.5 * dt * dt),
                vel: x.vel + u * dt,
            },
        }
    }

    /// Largest per-step `||u||^2` under the component box.
    pub fn max_effort(&self) -> f64 {
        2.0 * self.input_bound().powi(2)
    }

    /// Default search cap: four crossings of the bounding-box diagonal at a
    /// reachable mean speed, at most 2000 steps.
    pub fn default_t_max(&self) -> usize {
        let diag = (self.pos_max - self.pos_min).norm();
        let speed = self.v_max.min(0.5 * (self.input_bound() * diag).sqrt());
        ((4.0 * diag / speed / self.dt).ceil() as usize).clamp(1, 2000)
    }

    fn contains(&self, p: Vec2, slack: f64) -> bool {
        (0..2).all(|a| p[a] >= self.pos_min[a] - slack && p[a] <= self.pos_max[a] + slack)
    }
}

/// A disk the plan must stay out of (another robot frozen in place).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub base: Vec2,
    pub base_radius: f64,
    /// Energy per unit effort.
    pub mu: f64,
    /// Energy per step.
    pub gamma: f64,
    /// Search cap; `None` uses the model default.
    pub t_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPlan {
    pub states: Vec<RobotState>,
    pub inputs: Vec<Vec2>,
    pub tau_star: usize,
    /// Summed per-step drain `mu ||u||^2 + gamma` along the plan.
    pub energy_required: f64,
}

impl ReturnPlan {
    pub fn start(&self) -> &RobotState {
        &self.states[0]
    }
}

const PROBE_TOL: f64 = 1e-6;

/// Energy drained by following `inputs`.
pub fn plan_energy(inputs: &[Vec2], mu: f64, gamma: f64) -> f64 {
    inputs.iter().map(|u| mu * u.norm_squared() + gamma).sum()
}

// Row coefficients of position and velocity at step t in terms of the
// inputs of one axis.
struct AxisMaps {
    dt: f64,
    kind: ModelKind,
}

impl AxisMaps {
    fn pos_row(&self, t: usize, horizon: usize) -> DVector<f64> {
        let dt = self.dt;
        DVector::from_fn(horizon, |l, _| {
            if l >= t {
                0.0
            } else {
                match self.kind {
                    ModelKind::SingleIntegrator => dt,
                    ModelKind::DoubleIntegrator => dt * dt * (t as f64 - l as f64 - 0.5),
                }
            }
        })
    }

    fn pos_free(&self, t: usize, p0: f64, v0: f64) -> f64 {
        match self.kind {
            ModelKind::SingleIntegrator => p0,
            ModelKind::DoubleIntegrator => p0 + t as f64 * self.dt * v0,
        }
    }

    fn vel_row(&self, t: usize, horizon: usize) -> DVector<f64> {
        DVector::from_fn(horizon, |l, _| if l < t { self.dt } else { 0.0 })
    }
}

// Constraint rows for one axis, in that axis' own input coordinates.
struct AxisRows {
    eq: Vec<(DVector<f64>, f64)>,
    ineq: Vec<(DVector<f64>, f64)>,
}

fn axis_rows(
    model: &RobotModel,
    horizon: usize,
    p0: f64,
    v0: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> AxisRows {
    let maps = AxisMaps {
        dt: model.dt,
        kind: model.kind,
    };
    let ub = model.input_bound();
    let mut eq = vec![(
        maps.pos_row(horizon, horizon),
        target - maps.pos_free(horizon, p0, v0),
    )];
    let mut ineq = Vec::with_capacity(6 * horizon);
    for l in 0..horizon {
        let e = DVector::from_fn(horizon, |i, _| if i == l { 1.0 } else { 0.0 });
        ineq.push((-&e, -ub));
        ineq.push((e, -ub));
    }
    if model.kind == ModelKind::DoubleIntegrator {
        eq.push((maps.vel_row(horizon, horizon), -v0));
        for t in 1..horizon {
            let row = maps.vel_row(t, horizon);
            ineq.push((-&row, v0 - model.v_max));
            ineq.push((row, -model.v_max - v0));
        }
    }
    for t in 1..horizon {
        let row = maps.pos_row(t, horizon);
        let free = maps.pos_free(t, p0, v0);
        ineq.push((-&row, -hi + free));
        ineq.push((row, lo - free));
    }
    AxisRows { eq, ineq }
}

fn stack(rows: &[(DVector<f64>, f64)], n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut m = DMatrix::zeros(rows.len(), n);
    let mut r = DVector::zeros(rows.len());
    for (i, (row, rhs)) in rows.iter().enumerate() {
        m.row_mut(i).copy_from(&row.transpose());
        r[i] = *rhs;
    }
    (m, r)
}

fn solve_probe(problem: &QpProblem) -> Result<Option<DVector<f64>>, PlanError> {
    match qp::solve(problem, &QpSettings::default()) {
        Ok(sol) if problem.max_violation(&sol.x) <= PROBE_TOL => Ok(Some(sol.x)),
        Ok(_) | Err(QpError::Infeasible) => Ok(None),
        Err(e) => Err(PlanError::SolverFailure(e.to_string())),
    }
}

fn solve_axis(
    model: &RobotModel,
    horizon: usize,
    axis: usize,
    x0: &RobotState,
    base: Vec2,
) -> Result<Option<DVector<f64>>, PlanError> {
    let rows = axis_rows(
        model,
        horizon,
        x0.pos[axis],
        x0.vel[axis],
        base[axis],
        model.pos_min[axis],
        model.pos_max[axis],
    );
    let (eq_matrix, eq_rhs) = stack(&rows.eq, horizon);
    let (ineq_matrix, ineq_rhs) = stack(&rows.ineq, horizon);
    solve_probe(&QpProblem {
        hessian: DMatrix::identity(horizon, horizon),
        linear: DVector::zeros(horizon),
        eq_matrix,
        eq_rhs,
        ineq_matrix,
        ineq_rhs,
    })
}

fn rollout(model: &RobotModel, x0: &RobotState, inputs: &[Vec2]) -> Vec<RobotState> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(*x0);
    for u in inputs {
        let next = model.step(states.last().expect("non-empty"), *u);
        states.push(next);
    }
    states
}

fn clear_of(states: &[RobotState], obstacles: &[Obstacle]) -> bool {
    states.iter().skip(1).all(|s| {
        obstacles
            .iter()
            .all(|o| (s.pos - o.center).norm() >= o.radius - PROBE_TOL)
    })
}

// Half-plane normal for keeping seed point `s` out of `o`. Far from the
// disk it is radial; near the center it bends toward the side of the
// straight path away from the obstacle, so consecutive steps rotate
// smoothly around it.
fn separating_normal(s: Vec2, o: &Obstacle, side: Vec2) -> Vec2 {
    let d = s - o.center;
    let blend = (1.0 - d.norm() / (2.0 * o.radius)).clamp(0.0, 1.0);
    let n = d + side * (2.0 * o.radius * blend);
    if n.norm() < 1e-12 {
        side
    } else {
        n.normalize()
    }
}

fn solve_coupled(
    model: &RobotModel,
    horizon: usize,
    x0: &RobotState,
    base: Vec2,
    obstacles: &[Obstacle],
) -> Result<Option<Vec<Vec2>>, PlanError> {
    let n = 2 * horizon;
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for axis in 0..2 {
        let rows = axis_rows(
            model,
            horizon,
            x0.pos[axis],
            x0.vel[axis],
            base[axis],
            model.pos_min[axis],
            model.pos_max[axis],
        );
        let lift = |(row, rhs): (DVector<f64>, f64)| {
            let mut full = DVector::zeros(n);
            full.rows_mut(axis * horizon, horizon).copy_from(&row);
            (full, rhs)
        };
        eq.extend(rows.eq.into_iter().map(lift));
        ineq.extend(rows.ineq.into_iter().map(lift));
    }
    let maps = AxisMaps {
        dt: model.dt,
        kind: model.kind,
    };
    let dir = base - x0.pos;
    let left = if dir.norm() > 1e-12 {
        Vec2::new(-dir.y, dir.x).normalize()
    } else {
        Vec2::new(0.0, 1.0)
    };
    for o in obstacles {
        let side = if left.dot(&(o.center - x0.pos)) > 0.0 {
            -left
        } else {
            left
        };
        for t in 1..=horizon {
            let seed = x0.pos + dir * (t as f64 / horizon as f64);
            let nrm = separating_normal(seed, o, side);
            let prow = maps.pos_row(t, horizon);
            let mut full = DVector::zeros(n);
            full.rows_mut(0, horizon).copy_from(&(&prow * nrm.x));
            full.rows_mut(horizon, horizon).copy_from(&(&prow * nrm.y));
            let free = Vec2::new(
                maps.pos_free(t, x0.pos.x, x0.vel.x),
                maps.pos_free(t, x0.pos.y, x0.vel.y),
            );
            ineq.push((full, nrm.dot(&o.center) + o.radius - nrm.dot(&free)));
        }
    }
    let (eq_matrix, eq_rhs) = stack(&eq, n);
    let (ineq_matrix, ineq_rhs) = stack(&ineq, n);
    let sol = solve_probe(&QpProblem {
        hessian: DMatrix::identity(n, n),
        linear: DVector::zeros(n),
        eq_matrix,
        eq_rhs,
        ineq_matrix,
        ineq_rhs,
    })?;
    Ok(sol.map(|x| {
        (0..horizon)
            .map(|l| Vec2::new(x[l], x[horizon + l]))
            .collect()
    }))
}

/// Least-effort trajectory reaching the base in exactly `horizon` steps,
/// or `None` if there is none.
pub fn feasibility_probe(
    horizon: usize,
    x0: &RobotState,
    base: Vec2,
    model: &RobotModel,
    obstacles: &[Obstacle],
) -> Result<Option<Vec<Vec2>>, PlanError> {
    if horizon == 0 {
        let at_rest = model.kind == ModelKind::SingleIntegrator || x0.vel.norm() <= PROBE_TOL;
        return Ok(((x0.pos - base).norm() <= PROBE_TOL && at_rest).then(Vec::new));
    }
    let (Some(ux), Some(uy)) = (
        solve_axis(model, horizon, 0, x0, base)?,
        solve_axis(model, horizon, 1, x0, base)?,
    ) else {
        return Ok(None);
    };
    let mut inputs: Vec<Vec2> = (0..horizon).map(|l| Vec2::new(ux[l], uy[l])).collect();
    // Constraint generation: only disks that the current candidate enters
    // get half-planes, until a candidate clears all of them.
    let mut active: Vec<Obstacle> = Vec::new();
    loop {
        let states = rollout(model, x0, &inputs);
        let hit: Vec<Obstacle> = obstacles
            .iter()
            .filter(|o| !clear_of(&states, std::slice::from_ref(o)) && !active.contains(o))
            .copied()
            .collect();
        if hit.is_empty() {
            return Ok(clear_of(&states, obstacles).then_some(inputs));
        }
        active.extend(hit);
        match solve_coupled(model, horizon, x0, base, &active)? {
            Some(next) => inputs = next,
            None => return Ok(None),
        }
    }
}

/// Shortest return plan, searched from scratch.
pub fn min_time_return(
    x0: &RobotState,
    model: &RobotModel,
    obstacles: &[Obstacle],
    params: &PlannerParams,
) -> Result<ReturnPlan, PlanError> {
    min_time_return_from(x0, model, obstacles, params, None)
}

/// Shortest return plan, with the search seeded by a previous `tau_star`.
pub fn min_time_return_from(
    x0: &RobotState,
    model: &RobotModel,
    obstacles: &[Obstacle],
    params: &PlannerParams,
    hint: Option<usize>,
) -> Result<ReturnPlan, PlanError> {
    model.validate()?;
    let t_max = params.t_max.unwrap_or_else(|| model.default_t_max());
    let finish = |inputs: Vec<Vec2>| {
        let plan = ReturnPlan {
            states: rollout(model, x0, &inputs),
            tau_star: inputs.len(),
            energy_required: plan_energy(&inputs, params.mu, params.gamma),
            inputs,
        };
        #[cfg(debug_assertions)]
        check_plan(&plan, model, obstacles, params)
            .unwrap_or_else(|e| panic!("plan invariant violated: {e}"));
        plan
    };
    if (x0.pos - params.base).norm() <= params.base_radius {
        return Ok(finish(Vec::new()));
    }
    if obstacles
        .iter()
        .any(|o| (params.base - o.center).norm() < o.radius)
    {
        return Err(PlanError::Unreachable { t_max });
    }

    let mut cache: BTreeMap<usize, Option<Vec<Vec2>>> = BTreeMap::new();
    let mut probe = |t: usize| -> Result<bool, PlanError> {
        if let Some(hit) = cache.get(&t) {
            return Ok(hit.is_some());
        }
        let r = feasibility_probe(t, x0, params.base, model, obstacles)?;
        let ok = r.is_some();
        cache.insert(t, r);
        Ok(ok)
    };

    // Per-step displacement is at most dt * v_max on each axis.
    let delta = params.base - x0.pos;
    let step = model.dt * model.v_max;
    let lower = (delta.x.abs().max(delta.y.abs()) / step - 1e-9)
        .ceil()
        .max(1.0) as usize;
    if lower > t_max {
        return Err(PlanError::Unreachable { t_max });
    }

    // Bracket: lo infeasible (or below the bound), hi feasible.
    let start = hint.map_or(lower, |h| h.clamp(lower, t_max));
    let (mut lo, mut hi);
    if probe(start)? {
        hi = start;
        lo = lower - 1;
        if start > lower {
            if !probe(start - 1)? {
                lo = start - 1;
            } else {
                hi = start - 1;
            }
        }
    } else {
        lo = start;
        let mut gap = 1;
        loop {
            let t = (lo + gap).min(t_max);
            if probe(t)? {
                hi = t;
                break;
            }
            if t == t_max {
                return Err(PlanError::Unreachable { t_max });
            }
            lo = t;
            gap *= 2;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let inputs = cache
        .remove(&hi)
        .flatten()
        .ok_or_else(|| PlanError::SolverFailure("lost feasible probe".into()))?;
    Ok(finish(inputs))
}

/// Invariants every returned plan satisfies.
pub fn check_plan(
    plan: &ReturnPlan,
    model: &RobotModel,
    obstacles: &[Obstacle],
    params: &PlannerParams,
) -> Result<(), String> {
    if plan.inputs.len() != plan.tau_star || plan.states.len() != plan.tau_star + 1 {
        return Err("length mismatch".into());
    }
    for (l, u) in plan.inputs.iter().enumerate() {
        let next = model.step(&plan.states[l], *u);
        let res = (next.pos - plan.states[l + 1].pos)
            .norm()
            .max((next.vel - plan.states[l + 1].vel).norm());
        if res > 1e-9 {
            return Err(format!("dynamics residual {res:e} at step {l}"));
        }
        if u.amax() > model.input_bound() + PROBE_TOL {
            return Err(format!("input bound violated at step {l}"));
        }
    }
    for (l, s) in plan.states.iter().enumerate().skip(1) {
        if !model.contains(s.pos, PROBE_TOL) {
            return Err(format!("position bound violated at step {l}"));
        }
        if model.kind == ModelKind::DoubleIntegrator && s.vel.amax() > model.v_max + PROBE_TOL {
            return Err(format!("velocity bound violated at step {l}"));
        }
    }
    let end = plan.states.last().expect("non-empty").pos;
    if (end - params.base).norm() > params.base_radius + PROBE_TOL {
        return Err("plan ends outside the base disk".into());
    }
    if !clear_of(&plan.states, obstacles) {
        return Err("plan enters a safety disk".into());
    }
    Ok(())
}

/// Input to apply `offset` steps into a plan.
pub fn follow_plan(plan: &ReturnPlan, offset: usize) -> Result<Vec2, PlanError> {
    plan.inputs
        .get(offset)
        .copied()
        .ok_or(PlanError::PlanExhausted {
            offset,
            tau_star: plan.tau_star,
        })
}
