//! Scenario configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::coverage::MissionSpace;
use crate::energy::{default_guard_margin, EnergyParams};
use crate::mpc::MpcConfig;
use crate::planner::{ModelKind, PlannerParams, RobotModel};
use crate::rigidity::{Vec2, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dt: f64,
    pub v_max: f64,
    pub u_max: f64,
    /// Separation kept from other robots by return plans.
    pub r_safe: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::DoubleIntegrator,
            dt: 0.1,
            v_max: 1.0,
            u_max: 1.0,
            r_safe: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub mu: f64,
    pub gamma: f64,
    pub s_th: f64,
    pub rho_c: f64,
    /// `None` uses twice the worst one-step drain.
    pub guard_margin: Option<f64>,
    /// Steps between return-plan refreshes while covering.
    pub replan_every: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            mu: 0.002,
            gamma: 0.001,
            s_th: 1.0,
            rho_c: 0.01,
            guard_margin: None,
            replan_every: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub space: MissionSpace,
    pub n_robots: usize,
    /// Explicit start positions; drawn uniformly from the space otherwise.
    pub initial_positions: Option<Vec<Vec2>>,
    /// Explicit start SOCs; drawn from `soc_range` otherwise.
    pub initial_socs: Option<Vec<f64>>,
    pub soc_range: (f64, f64),
    pub base: Vec2,
    pub base_radius: f64,
    pub model: ModelConfig,
    pub energy: EnergyConfig,
    /// With energy disabled SOC never changes and no robot leaves.
    pub energy_enabled: bool,
    pub mpc: MpcConfig,
    pub steps: usize,
    pub seed: u64,
    pub rank_tol: f64,
    pub out_dir: Option<String>,
    pub dump_cells: bool,
    pub verbose_solver: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            space: MissionSpace::rectangle(Vec2::zeros(), Vec2::new(6.0, 6.0))
                .expect("static rectangle"),
            n_robots: 10,
            initial_positions: None,
            initial_socs: None,
            soc_range: (0.5, 1.0),
            base: Vec2::new(0.5, 0.5),
            base_radius: 0.3,
            model: ModelConfig::default(),
            energy: EnergyConfig::default(),
            energy_enabled: true,
            mpc: MpcConfig::default(),
            steps: 2000,
            seed: 1,
            rank_tol: DEFAULT_RANK_TOL,
            out_dir: None,
            dump_cells: false,
            verbose_solver: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn robot_model(&self) -> RobotModel {
        let (lo, hi) = self.space.bounding_box();
        RobotModel {
            kind: self.model.kind,
            dt: self.model.dt,
            pos_min: lo,
            pos_max: hi,
            v_max: self.model.v_max,
            u_max: self.model.u_max,
        }
    }

    pub fn energy_params(&self) -> EnergyParams {
        let e = &self.energy;
        let max_effort = self.robot_model().max_effort();
        EnergyParams {
            mu: e.mu,
            gamma: e.gamma,
            s_th: e.s_th,
            rho_c: e.rho_c,
            s_max: 1.0,
            guard_margin: e
                .guard_margin
                .unwrap_or_else(|| default_guard_margin(e.mu, e.gamma, max_effort)),
            base_radius: self.base_radius,
        }
    }

    pub fn planner_params(&self) -> PlannerParams {
        PlannerParams {
            base: self.base,
            base_radius: self.base_radius,
            mu: self.energy.mu,
            gamma: self.energy.gamma,
            t_max: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n_robots == 0 {
            return bad("n_robots must be positive".into());
        }
        self.robot_model()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.energy_params()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.mpc
            .validate(self.model.kind)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !self.space.contains(self.base) {
            return bad("base lies outside the mission space".into());
        }
        if !(self.base_radius > 0.0) {
            return bad("base_radius must be positive".into());
        }
        if self.energy.replan_every == 0 {
            return bad("replan_every must be positive".into());
        }
        if !(self.model.r_safe >= 0.0) {
            return bad("r_safe must be non-negative".into());
        }
        let (lo, hi) = self.soc_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("soc_range must satisfy 0 <= lo <= hi <= 1".into());
        }
        if let Some(p) = &self.initial_positions {
            if p.len() != self.n_robots {
                return bad(format!(
                    "{} initial positions for {} robots",
                    p.len(),
                    self.n_robots
                ));
            }
            if let Some(i) = p.iter().position(|q| !self.space.contains(*q)) {
                return bad(format!(
                    "initial position of robot {i} is outside the space"
                ));
            }
        }
        if let Some(s) = &self.initial_socs {
            if s.len() != self.n_robots {
                return bad(format!(
                    "{} initial SOCs for {} robots",
                    s.len(),
                    self.n_robots
                ));
            }
            if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("initial SOCs must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Start positions and SOCs, drawing whatever is not given explicitly.
    pub fn initial_state(&self) -> (Vec<Vec2>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let positions = match &self.initial_positions {
            Some(p) => p.clone(),
            None => {
                let (lo, hi) = self.space.bounding_box();
                let mut out: Vec<Vec2> = Vec::with_capacity(self.n_robots);
                let min_gap = (self.model.r_safe * 1.5).max(1e-3);
                let mut attempts = 0usize;
                while out.len() < self.n_robots {
                    let q = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                    attempts += 1;
                    let spaced = attempts > 10_000 || out.iter().all(|p| (p - q).norm() >= min_gap);
                    if self.space.contains(q) && spaced {
                        out.push(q);
                    }
                }
                out
            }
        };
        let socs = match &self.initial_socs {
            Some(s) => s.clone(),
            None => {
                let (lo, hi) = self.soc_range;
                (0..self.n_robots)
                    .map(|_| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                    .collect()
            }
        };
        (positions, socs)
    }

    /// Where robot `id` waits while charging: a fixed slot inside the base
    /// disk, so robots charging together never coincide.
    pub fn charging_slot(&self, id: usize) -> Vec2 {
        let angle = 2.399_963_229_728_653 * id as f64;
        let ring = self.base_radius * (0.3 + 0.2 * (id % 3) as f64);
        self.base + Vec2::new(angle.cos(), angle.sin()) * ring
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"n_robots": 3, "steps": 50}"#).unwrap();
        assert_eq!(cfg.n_robots, 3);
        assert_eq!(cfg.mpc, MpcConfig::default());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ScenarioConfig::from_json(r#"{"base": [9.0, 9.0]}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"n_robots": 2, "initial_socs": [0.5]}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ScenarioConfig::from_json("{").is_err());
    }

    #[test]
    fn seeded_initial_state_is_reproducible() {
        let cfg = ScenarioConfig::default();
        let (p1, s1) = cfg.initial_state();
        let (p2, s2) = cfg.initial_state();
        assert_eq!((p1.clone(), s1.clone()), (p2, s2));
        assert!(p1.iter().all(|p| cfg.space.contains(*p)));
        assert!(s1.iter().all(|s| (0.5..=1.0).contains(s)));
    }

    #[test]
    fn charging_slots_are_distinct_and_inside_the_base() {
        let cfg = ScenarioConfig::default();
        let slots: Vec<Vec2> = (0..20).map(|i| cfg.charging_slot(i)).collect();
        for (i, a) in slots.iter().enumerate() {
            assert!((a - cfg.base).norm() <= cfg.base_radius);
            for b in &slots[i + 1..] {
                assert!((a - b).norm() > 1e-6);
            }
        }
    }
}
