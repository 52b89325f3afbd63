//! Per-robot hybrid automaton: coverage, return-to-base, recharge.
//!
//! Modes cycle 1 -> 2 -> 3 -> 1. Leaving coverage is decided by comparing
//! the state of charge with the energy a minimum-time return plan would
//! drain; the robot then follows that plan, charges at the base and comes
//! back once charged to the threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{PlanError, ReturnPlan, RobotState};
use crate::rigidity::Vec2;

/// Plans whose start state is further than this from the current state are
/// stale.
pub const STALE_PLAN_THRESHOLD: f64 = 0.05;

const SOC_FLOOR: f64 = -1e-12;
const GUARD_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("state of charge fell to {soc}")]
    EnergyExhausted { soc: f64 },
    #[error("plan starts {deviation} away from the current state")]
    StalePlan { deviation: f64 },
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
    #[error("operation needs mode {expected}, robot is in mode {found}")]
    WrongMode { expected: Mode, found: Mode },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Mode {
    Coverage = 1,
    ReturnToBase = 2,
    Recharge = 3,
}

impl Mode {
    pub fn next(self) -> Mode {
        match self {
            Mode::Coverage => Mode::ReturnToBase,
            Mode::ReturnToBase => Mode::Recharge,
            Mode::Recharge => Mode::Coverage,
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m as u8
    }
}

impl TryFrom<u8> for Mode {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Mode::Coverage),
            2 => Ok(Mode::ReturnToBase),
            3 => Ok(Mode::Recharge),
            _ => Err(format!("no mode {v}")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub mu: f64,
    pub gamma: f64,
    pub s_th: f64,
    pub rho_c: f64,
    pub s_max: f64,
    pub guard_margin: f64,
    pub base_radius: f64,
}

impl EnergyParams {
    /// Parameters with the default margin of two worst-case steps.
    pub fn new(mu: f64, gamma: f64, rho_c: f64, base_radius: f64, max_effort: f64) -> Self {
        Self {
            mu,
            gamma,
            s_th: 1.0,
            rho_c,
            s_max: 1.0,
            guard_margin: default_guard_margin(mu, gamma, max_effort),
            base_radius,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            self.mu,
            self.gamma,
            self.s_th,
            self.rho_c,
            self.s_max,
            self.guard_margin,
            self.base_radius,
        ];
        if fields.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(EnergyError::InvalidParams(
                "negative or non-finite field".into(),
            ));
        }
        if self.s_th > self.s_max {
            return Err(EnergyError::InvalidParams("s_th exceeds s_max".into()));
        }
        if self.rho_c <= 0.0 {
            return Err(EnergyError::InvalidParams("rho_c must be positive".into()));
        }
        Ok(())
    }

    /// Largest one-step drain for a given worst-case effort.
    pub fn worst_step(&self, max_effort: f64) -> f64 {
        self.mu * max_effort + self.gamma
    }
}

/// Twice the worst-case one-step drain.
pub fn default_guard_margin(mu: f64, gamma: f64, max_effort: f64) -> f64 {
    2.0 * (mu * max_effort + gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub soc: f64,
    pub mode: Mode,
    /// Return plan, present exactly in mode 2.
    pub plan: Option<ReturnPlan>,
    /// Steps of the plan already executed.
    pub plan_offset: usize,
}

impl EnergyState {
    pub fn covering(soc: f64) -> Self {
        Self {
            soc,
            mode: Mode::Coverage,
            plan: None,
            plan_offset: 0,
        }
    }
}

/// A mode switch as it appears in the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: Mode,
    pub to: Mode,
    pub soc: f64,
    pub tau_star: Option<usize>,
}

/// Per-step effort `||u||^2`.
pub fn consumption(_x: &RobotState, u: Vec2) -> f64 {
    u.norm_squared()
}

pub fn discharge_step(
    s: f64,
    x: &RobotState,
    u: Vec2,
    params: &EnergyParams,
) -> Result<f64, EnergyError> {
    let next = s - params.mu * consumption(x, u) - params.gamma;
    if next < SOC_FLOOR {
        return Err(EnergyError::EnergyExhausted { soc: next });
    }
    Ok(next.max(0.0))
}

pub fn charge_step(s: f64, params: &EnergyParams) -> f64 {
    (s + params.rho_c).min(params.s_max)
}

/// Distance in state space between the plan's start and `x`.
pub fn plan_deviation(plan: &ReturnPlan, x: &RobotState) -> f64 {
    let start = plan.start();
    ((start.pos - x.pos).norm_squared() + (start.vel - x.vel).norm_squared()).sqrt()
}

/// Whether to head home: the charge left after executing `plan` would be
/// within the margin.
pub fn guard_1_to_2(
    s: f64,
    x: &RobotState,
    plan: &ReturnPlan,
    params: &EnergyParams,
) -> Result<bool, EnergyError> {
    let deviation = plan_deviation(plan, x);
    if deviation > STALE_PLAN_THRESHOLD {
        return Err(EnergyError::StalePlan { deviation });
    }
    // Round-off in the summed drain must not delay the switch.
    Ok(s - plan.energy_required <= params.guard_margin + GUARD_SLACK)
}

/// Arrival in the closed base disk.
pub fn guard_2_to_3(pos: Vec2, base: Vec2, params: &EnergyParams) -> bool {
    (pos - base).norm() <= params.base_radius
}

pub fn guard_3_to_1(s: f64, params: &EnergyParams) -> bool {
    s >= params.s_th
}

/// Evaluates the single guard that is legal in the current mode and
/// performs the switch if it fires. `plan_for` computes a fresh return plan
/// from `x`; it is only called in mode 1.
pub fn evaluate_guard(
    state: &mut EnergyState,
    x: &RobotState,
    base: Vec2,
    plan_for: &mut dyn FnMut(&RobotState) -> Result<ReturnPlan, PlanError>,
    params: &EnergyParams,
) -> Result<Option<Transition>, EnergyError> {
    let from = state.mode;
    let fired = match from {
        Mode::Coverage => {
            let plan = plan_for(x)?;
            if guard_1_to_2(state.soc, x, &plan, params)? {
                state.plan = Some(plan);
                state.plan_offset = 0;
                true
            } else {
                false
            }
        }
        Mode::ReturnToBase => {
            if guard_2_to_3(x.pos, base, params) {
                state.plan = None;
                state.plan_offset = 0;
                true
            } else {
                false
            }
        }
        Mode::Recharge => guard_3_to_1(state.soc, params),
    };
    if !fired {
        return Ok(None);
    }
    state.mode = from.next();
    Ok(Some(Transition {
        from,
        to: state.mode,
        soc: state.soc,
        tau_star: state.plan.as_ref().map(|p| p.tau_star),
    }))
}

/// Applies this step's charge or drain for the current mode.
pub fn apply_energy(
    state: &mut EnergyState,
    x: &RobotState,
    u: Vec2,
    params: &EnergyParams,
) -> Result<(), EnergyError> {
    state.soc = match state.mode {
        Mode::Coverage | Mode::ReturnToBase => discharge_step(state.soc, x, u, params)?,
        Mode::Recharge => charge_step(state.soc, params),
    };
    Ok(())
}

/// One automaton tick: guard evaluation, then the energy update of the
/// resulting mode.
pub fn automaton_step(
    state: &EnergyState,
    x: &RobotState,
    u: Vec2,
    base: Vec2,
    plan_for: &mut dyn FnMut(&RobotState) -> Result<ReturnPlan, PlanError>,
    params: &EnergyParams,
) -> Result<(EnergyState, Option<Transition>), EnergyError> {
    let mut next = state.clone();
    let event = evaluate_guard(&mut next, x, base, plan_for, params)?;
    apply_energy(&mut next, x, u, params)?;
    Ok((next, event))
}
