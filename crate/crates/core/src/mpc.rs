//! Tracking MPC with an artificial reference and a bearing-maintenance term.
//!
//! Decision vector: the input sequence `u_0..u_{N-1}` followed by the
//! artificial reference `r_bar`. The steady pair is fixed by `r_bar`
//! (position `r_bar`, zero velocity, zero input), the terminal state must
//! equal it, and the predicted states are eliminated through the dynamics,
//! so each step is one dense QP with `2N + 2` unknowns.
//!
//! ```text
//! J = sum_l |x_l - x_bar|_Q^2 + |u_l|_R^2 + |x_N - x_bar|_P^2
//!     + lambda T_w |r - r_bar|^2 + (1 - lambda) sum_j |P_gj (a_j - r_bar)|^2
//! ```

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{ModelKind, RobotModel, RobotState};
use crate::qp::{self, QpError, QpProblem, QpSettings};
use crate::rigidity::{projector, Graph, Vec2, COINCIDENCE_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("invalid MPC configuration: {0}")]
    InvalidConfig(String),
    #[error("model kind not supported")]
    ModelUnsupported,
    #[error("centroids of {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("MPC problem is infeasible")]
    Infeasible,
    #[error("solver hit the iteration limit")]
    MaxIterations,
    #[error("solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Diagonal of the stage state weight (position then velocity entries).
    pub q_diag: Vec<f64>,
    pub r_diag: Vec<f64>,
    pub p_diag: Vec<f64>,
    /// Tracking weight; `None` forces `r_bar = r`.
    pub t_w: Option<f64>,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 15,
            q_diag: vec![1.0, 1.0, 1.0, 1.0],
            r_diag: vec![0.1, 0.1],
            p_diag: vec![10.0, 10.0, 10.0, 10.0],
            t_w: Some(100.0),
            lambda: 1.0,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self, kind: ModelKind) -> Result<(), MpcError> {
        let nx = state_dim(kind);
        let bad = |msg: &str| Err(MpcError::InvalidConfig(msg.into()));
        if self.horizon < 2 {
            return bad("horizon must be at least 2");
        }
        if self.q_diag.len() != nx || self.p_diag.len() != nx || self.r_diag.len() != 2 {
            return bad("weight dimensions do not match the model");
        }
        let all = self.q_diag.iter().chain(&self.r_diag).chain(&self.p_diag);
        if all.clone().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must be positive");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if let Some(t) = self.t_w {
            if !(t.is_finite() && t > 0.0) {
                return bad("t_w must be positive");
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("solver settings");
        }
        Ok(())
    }
}

/// Desired bearing toward one neighbor and that neighbor's anchor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BearingTarget {
    pub neighbor: usize,
    pub bearing: Vec2,
    pub anchor: Vec2,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BearingTargets(pub Vec<BearingTarget>);

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub inputs: Vec<Vec2>,
    pub states: Vec<RobotState>,
    pub r_bar: Vec2,
    pub x_bar: RobotState,
    pub u_bar: Vec2,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Bearings of `i`'s neighbors in `graph`, evaluated on `centroids`.
pub fn desired_bearings(
    centroids: &[Vec2],
    graph: &Graph,
    i: usize,
) -> Result<BearingTargets, MpcError> {
    let ri = centroids[i];
    graph
        .neighbors(i)
        .into_iter()
        .map(|j| {
            let d = centroids[j] - ri;
            let len = d.norm();
            if len <= COINCIDENCE_EPS {
                return Err(MpcError::CoincidentPoints(i, j));
            }
            Ok(BearingTarget {
                neighbor: j,
                bearing: d / len,
                anchor: centroids[j],
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(BearingTargets)
}

fn state_dim(kind: ModelKind) -> usize {
    match kind {
        ModelKind::SingleIntegrator => 2,
        ModelKind::DoubleIntegrator => 4,
    }
}

fn to_vector(kind: ModelKind, x: &RobotState) -> DVector<f64> {
    match kind {
        ModelKind::SingleIntegrator => DVector::from_row_slice(&[x.pos.x, x.pos.y]),
        ModelKind::DoubleIntegrator => {
            DVector::from_row_slice(&[x.pos.x, x.pos.y, x.vel.x, x.vel.y])
        }
    }
}

fn from_vector(kind: ModelKind, v: &DVector<f64>, u: Vec2) -> RobotState {
    match kind {
        ModelKind::SingleIntegrator => RobotState {
            pos: Vec2::new(v[0], v[1]),
            vel: u,
        },
        ModelKind::DoubleIntegrator => RobotState {
            pos: Vec2::new(v[0], v[1]),
            vel: Vec2::new(v[2], v[3]),
        },
    }
}

fn system(model: &RobotModel) -> (DMatrix<f64>, DMatrix<f64>) {
    let dt = model.dt;
    match model.kind {
        ModelKind::SingleIntegrator => (DMatrix::identity(2, 2), DMatrix::identity(2, 2) * dt),
        ModelKind::DoubleIntegrator => {
            let mut a = DMatrix::identity(4, 4);
            a[(0, 2)] = dt;
            a[(1, 3)] = dt;
            let mut b = DMatrix::zeros(4, 2);
            b[(0, 0)] = 0.5 * dt * dt;
            b[(1, 1)] = 0.5 * dt * dt;
            b[(2, 0)] = dt;
            b[(3, 1)] = dt;
            (a, b)
        }
    }
}

/// The condensed QP for one robot and one step, with the data needed to
/// map its solution back to trajectories.
#[derive(Debug, Clone)]
pub struct MpcProblem {
    pub qp: QpProblem,
    /// Objective constant, so that `J = qp.objective(z) + constant`.
    pub constant: f64,
    kind: ModelKind,
    horizon: usize,
    // Affine maps x_l = free[l] + gamma[l] z for l = 0..=N.
    free: Vec<DVector<f64>>,
    gamma: Vec<DMatrix<f64>>,
}

impl MpcProblem {
    pub fn n_vars(&self) -> usize {
        2 * self.horizon + 2
    }

    fn unpack(&self, z: &DVector<f64>) -> (Vec<Vec2>, Vec<RobotState>, Vec2) {
        let n = self.horizon;
        let inputs: Vec<Vec2> = (0..n).map(|l| Vec2::new(z[2 * l], z[2 * l + 1])).collect();
        let states = (0..=n)
            .map(|l| {
                let x = &self.free[l] + &self.gamma[l] * z;
                let u = if l == 0 { Vec2::zeros() } else { inputs[l - 1] };
                from_vector(self.kind, &x, u)
            })
            .collect();
        (inputs, states, Vec2::new(z[2 * n], z[2 * n + 1]))
    }
}

fn stack_rows(rows: Vec<(DVector<f64>, f64)>, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut m = DMatrix::zeros(rows.len(), n);
    let mut r = DVector::zeros(rows.len());
    for (i, (row, rhs)) in rows.into_iter().enumerate() {
        m.row_mut(i).copy_from(&row.transpose());
        r[i] = rhs;
    }
    (m, r)
}

pub fn build_qp(
    x: &RobotState,
    reference: Vec2,
    targets: &BearingTargets,
    model: &RobotModel,
    cfg: &MpcConfig,
) -> Result<MpcProblem, MpcError> {
    cfg.validate(model.kind)?;
    let kind = model.kind;
    let nx = state_dim(kind);
    let n = cfg.horizon;
    let nz = 2 * n + 2;
    let (a, b) = system(model);
    let x0 = to_vector(kind, x);

    // x_l - x_bar = free[l] + gamma[l] z, with x_bar = S r_bar.
    let mut free = vec![x0.clone()];
    let mut gamma = vec![DMatrix::zeros(nx, nz)];
    for l in 0..n {
        let mut g = &a * &gamma[l];
        let mut cols = g.columns_mut(2 * l, 2);
        cols += &b;
        free.push(&a * &free[l]);
        gamma.push(g);
    }
    let mut sel = DMatrix::zeros(nx, nz);
    sel[(0, 2 * n)] = 1.0;
    sel[(1, 2 * n + 1)] = 1.0;

    let mut hq = DMatrix::<f64>::zeros(nz, nz);
    let mut f = DVector::<f64>::zeros(nz);
    let mut constant = 0.0;
    let mut add_quad = |m: &DMatrix<f64>, c: &DVector<f64>, w: &DMatrix<f64>| {
        let mw = m.transpose() * w;
        hq += &mw * m;
        f += &mw * c;
        constant += c.dot(&(w * c));
    };
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.q_diag));
    let p = DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.p_diag));
    for l in 0..=n {
        let w = if l == n { &p } else { &q };
        add_quad(&(&gamma[l] - &sel), &free[l], w);
    }
    let r = Matrix2::from_diagonal(&Vec2::new(cfg.r_diag[0], cfg.r_diag[1]));
    for l in 0..n {
        let mut block = hq.fixed_view_mut::<2, 2>(2 * l, 2 * l);
        block += r;
    }
    // Terms in r_bar alone.
    let mut rbar_quad = |w: Matrix2<f64>, target: Vec2| {
        let mut block = hq.fixed_view_mut::<2, 2>(2 * n, 2 * n);
        block += w;
        let wt = w * target;
        f[2 * n] -= wt.x;
        f[2 * n + 1] -= wt.y;
        constant += target.dot(&wt);
    };
    let hard_reference = cfg.t_w.is_none();
    if let Some(t_w) = cfg.t_w {
        rbar_quad(Matrix2::identity() * (cfg.lambda * t_w), reference);
    }
    for t in &targets.0 {
        rbar_quad(projector(&t.bearing) * (1.0 - cfg.lambda), t.anchor);
    }

    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    let unit = |k: usize, s: f64| {
        let mut v = DVector::zeros(nz);
        v[k] = s;
        v
    };
    // Terminal equality x_N = x_bar.
    let term = &gamma[n] - &sel;
    for row in 0..nx {
        eq.push((term.row(row).transpose(), -free[n][row]));
    }
    if hard_reference {
        eq.push((unit(2 * n, 1.0), reference.x));
        eq.push((unit(2 * n + 1, 1.0), reference.y));
    }
    let ub = model.input_bound();
    for k in 0..2 * n {
        ineq.push((unit(k, 1.0), -ub));
        ineq.push((unit(k, -1.0), -ub));
    }
    for l in 1..=n {
        for axis in 0..2 {
            let row = gamma[l].row(axis).transpose();
            let fx = free[l][axis];
            ineq.push((row.clone(), model.pos_min[axis] - fx));
            ineq.push((-row, fx - model.pos_max[axis]));
            if kind == ModelKind::DoubleIntegrator {
                let vrow = gamma[l].row(2 + axis).transpose();
                let fv = free[l][2 + axis];
                ineq.push((vrow.clone(), -model.v_max - fv));
                ineq.push((-vrow, fv - model.v_max));
            }
        }
    }
    for axis in 0..2 {
        ineq.push((unit(2 * n + axis, 1.0), model.pos_min[axis]));
        ineq.push((unit(2 * n + axis, -1.0), -model.pos_max[axis]));
    }

    let (eq_matrix, eq_rhs) = stack_rows(eq, nz);
    let (ineq_matrix, ineq_rhs) = stack_rows(ineq, nz);
    Ok(MpcProblem {
        qp: QpProblem {
            hessian: hq * 2.0,
            linear: f * 2.0,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
        },
        constant,
        kind,
        horizon: n,
        free,
        gamma,
    })
}

fn solution_from(problem: &MpcProblem, sol: &qp::QpSolution) -> MpcSolution {
    let (inputs, states, r_bar) = problem.unpack(&sol.x);
    MpcSolution {
        inputs,
        states,
        r_bar,
        x_bar: RobotState::at_rest(r_bar),
        u_bar: Vec2::zeros(),
        objective: sol.objective + problem.constant,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
    }
}

/// Solves the condensed QP. On the iteration limit the best iterate is
/// returned alongside the error so callers can still act on it.
#[allow(clippy::result_large_err)]
pub fn solve_qp(
    problem: &MpcProblem,
    cfg: &MpcConfig,
) -> Result<MpcSolution, (MpcError, Option<MpcSolution>)> {
    let settings = QpSettings {
        max_iter: cfg.max_iter,
        feas_tol: cfg.tol,
    };
    match qp::solve(&problem.qp, &settings) {
        Ok(sol) => Ok(solution_from(problem, &sol)),
        Err(QpError::Infeasible) => Err((MpcError::Infeasible, None)),
        Err(QpError::MaxIterations(best)) => {
            Err((MpcError::MaxIterations, Some(solution_from(problem, &best))))
        }
        Err(e) => Err((MpcError::Solver(e.to_string()), None)),
    }
}

/// Result of one receding-horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcStep {
    pub input: Vec2,
    pub solution: MpcSolution,
    /// Set when the solver stopped early and the best iterate was used.
    pub warning: Option<String>,
}

/// First input of the optimal sequence.
pub fn mpc_control(
    x: &RobotState,
    reference: Vec2,
    targets: &BearingTargets,
    model: &RobotModel,
    cfg: &MpcConfig,
) -> Result<MpcStep, MpcError> {
    let problem = build_qp(x, reference, targets, model, cfg)?;
    match solve_qp(&problem, cfg) {
        Ok(solution) => Ok(MpcStep {
            input: solution.inputs[0],
            solution,
            warning: None,
        }),
        Err((MpcError::MaxIterations, Some(best))) => {
            let ub = model.input_bound();
            let u = best.inputs[0].map(|c| c.clamp(-ub, ub));
            Ok(MpcStep {
                input: u,
                solution: best,
                warning: Some("MPC solver hit the iteration limit; using best iterate".into()),
            })
        }
        Err((e, _)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RobotModel {
        RobotModel {
            kind: ModelKind::DoubleIntegrator,
            dt: 0.1,
            pos_min: Vec2::new(-5.0, -5.0),
            pos_max: Vec2::new(5.0, 5.0),
            v_max: 2.0,
            u_max: 2.0,
        }
    }

    #[test]
    fn bearings_from_centroids() {
        let c = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]).unwrap();
        let t = desired_bearings(&c, &g, 0).unwrap();
        let s = 0.5f64.sqrt();
        let expect = [
            (1, Vec2::new(1.0, 0.0)),
            (2, Vec2::new(s, s)),
            (3, Vec2::new(0.0, 1.0)),
        ];
        for (got, (j, b)) in t.0.iter().zip(expect) {
            assert_eq!(got.neighbor, j);
            assert!((got.bearing - b).norm() < 1e-15);
            assert_eq!(got.anchor, c[j]);
        }
        let lone = Graph::from_edges(4, &[(1, 2)]).unwrap();
        assert!(desired_bearings(&c, &lone, 0).unwrap().0.is_empty());
        let dup = [Vec2::zeros(), Vec2::zeros()];
        let g2 = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(
            desired_bearings(&dup, &g2, 0).unwrap_err(),
            MpcError::CoincidentPoints(0, 1)
        );
    }

    #[test]
    fn fixed_point_at_rest() {
        let cfg = MpcConfig::default();
        let step = mpc_control(
            &RobotState::default(),
            Vec2::zeros(),
            &BearingTargets::default(),
            &model(),
            &cfg,
        )
        .unwrap();
        assert!(step.input.norm() < 1e-12);
        assert!(step.solution.r_bar.norm() < 1e-12);
        assert!(step.solution.objective.abs() < 1e-12);
    }

    #[test]
    fn reference_east_pushes_east() {
        let cfg = MpcConfig::default();
        let step = mpc_control(
            &RobotState::default(),
            Vec2::new(1.0, 0.0),
            &BearingTargets::default(),
            &model(),
            &cfg,
        )
        .unwrap();
        assert!(step.input.x > 0.0);
        assert!(step.input.y.abs() < 1e-9);
        let again = mpc_control(
            &RobotState::default(),
            Vec2::new(1.0, 0.0),
            &BearingTargets::default(),
            &model(),
            &cfg,
        )
        .unwrap();
        assert_eq!(step.input, again.input);
    }

    #[test]
    fn unconstrained_matches_normal_equations() {
        // Without active bounds the QP minimizer solves H z = -g restricted
        // to the terminal equality; compare against a KKT solve.
        let mut m = model();
        m.u_max = 1e3;
        m.v_max = 1e3;
        m.pos_min = Vec2::new(-1e3, -1e3);
        m.pos_max = Vec2::new(1e3, 1e3);
        let cfg = MpcConfig {
            lambda: 0.7,
            ..MpcConfig::default()
        };
        let x = RobotState {
            pos: Vec2::new(0.3, -0.2),
            vel: Vec2::new(0.1, 0.05),
        };
        let targets = BearingTargets(vec![BearingTarget {
            neighbor: 1,
            bearing: Vec2::new(0.6, 0.8),
            anchor: Vec2::new(1.5, 1.0),
        }]);
        let prob = build_qp(&x, Vec2::new(0.8, 0.4), &targets, &m, &cfg).unwrap();
        let sol = solve_qp(&prob, &cfg).unwrap();
        let n = prob.n_vars();
        let ne = prob.qp.eq_rhs.len();
        let mut kkt = DMatrix::zeros(n + ne, n + ne);
        kkt.view_mut((0, 0), (n, n)).copy_from(&prob.qp.hessian);
        kkt.view_mut((0, n), (n, ne))
            .copy_from(&prob.qp.eq_matrix.transpose());
        kkt.view_mut((n, 0), (ne, n)).copy_from(&prob.qp.eq_matrix);
        let mut rhs = DVector::zeros(n + ne);
        rhs.rows_mut(0, n).copy_from(&(-&prob.qp.linear));
        rhs.rows_mut(n, ne).copy_from(&prob.qp.eq_rhs);
        let z = kkt.lu().solve(&rhs).unwrap();
        let (inputs, _, r_bar) = prob.unpack(&z.rows(0, n).into_owned());
        for (a, b) in inputs.iter().zip(&sol.inputs) {
            assert!((a - b).norm() < 1e-8);
        }
        assert!((r_bar - sol.r_bar).norm() < 1e-8);
    }

    #[test]
    fn lambda_one_has_no_bearing_term() {
        let cfg = MpcConfig::default();
        let x = RobotState::at_rest(Vec2::new(0.5, 0.5));
        let targets = BearingTargets(vec![BearingTarget {
            neighbor: 3,
            bearing: Vec2::new(1.0, 0.0),
            anchor: Vec2::new(2.0, 3.0),
        }]);
        let with = build_qp(&x, Vec2::zeros(), &targets, &model(), &cfg).unwrap();
        let without = build_qp(
            &x,
            Vec2::zeros(),
            &BearingTargets::default(),
            &model(),
            &cfg,
        )
        .unwrap();
        assert_eq!(with.qp.hessian, without.qp.hessian);
        assert_eq!(with.qp.linear, without.qp.linear);
    }

    #[test]
    fn bearing_term_pulls_reference_toward_the_ray() {
        // The bearing term vanishes on the line y = 0 through the anchor.
        // Robot and reference sit at y = 0.3; the state cost holds r_bar
        // there, and the pull toward the ray grows as lambda shrinks.
        let x = RobotState::at_rest(Vec2::new(0.0, 0.3));
        let targets = BearingTargets(vec![BearingTarget {
            neighbor: 1,
            bearing: Vec2::new(1.0, 0.0),
            anchor: Vec2::new(1.0, 0.0),
        }]);
        let r_bar = |lambda: f64, t: &BearingTargets| {
            let cfg = MpcConfig {
                lambda,
                ..MpcConfig::default()
            };
            solve_qp(&build_qp(&x, x.pos, t, &model(), &cfg).unwrap(), &cfg)
                .unwrap()
                .r_bar
        };
        assert!((r_bar(0.5, &BearingTargets::default()) - x.pos).norm() < 1e-9);
        let mut last = 0.3;
        for lambda in [0.9, 0.5, 0.1, 1e-4] {
            let r = r_bar(lambda, &targets);
            assert!(r.x.abs() < 1e-9);
            assert!(r.y > 0.0 && r.y < last, "lambda {lambda}: {r:?}");
            last = r.y;
        }
    }

    #[test]
    fn saturates_toward_far_reference() {
        let mut m = model();
        m.u_max = 0.2;
        let cfg = MpcConfig::default();
        let step = mpc_control(
            &RobotState::default(),
            Vec2::new(4.0, 0.0),
            &BearingTargets::default(),
            &m,
            &cfg,
        )
        .unwrap();
        assert!((step.input.x - 0.2).abs() < 1e-9);
    }

    #[test]
    fn hard_reference_out_of_bounds_is_infeasible() {
        let mut cfg = MpcConfig {
            t_w: None,
            ..MpcConfig::default()
        };
        let x = RobotState::default();
        let far = Vec2::new(7.0, 0.0);
        let prob = build_qp(&x, far, &BearingTargets::default(), &model(), &cfg).unwrap();
        assert!(matches!(
            solve_qp(&prob, &cfg),
            Err((MpcError::Infeasible, None))
        ));
        cfg.t_w = Some(100.0);
        let prob = build_qp(&x, far, &BearingTargets::default(), &model(), &cfg).unwrap();
        let sol = solve_qp(&prob, &cfg).unwrap();
        assert!(sol.r_bar.x <= 5.0 + 1e-9 && sol.r_bar != far);
    }

    fn closed_loop(reference: Vec2, steps: usize) -> (RobotState, Vec<f64>, Vec2) {
        let m = model();
        let cfg = MpcConfig::default();
        let mut x = RobotState::default();
        let mut costs = Vec::new();
        let mut r_bar = Vec2::zeros();
        for _ in 0..steps {
            let step = mpc_control(&x, reference, &BearingTargets::default(), &m, &cfg).unwrap();
            costs.push(step.solution.objective);
            r_bar = step.solution.r_bar;
            x = m.step(&x, step.input);
        }
        (x, costs, r_bar)
    }

    #[test]
    fn closed_loop_regulation() {
        let target = Vec2::new(1.0, -0.5);
        let (x, costs, r_bar) = closed_loop(target, 150);
        assert!(
            (x.pos - target).norm() < 1e-3,
            "error {}",
            (x.pos - target).norm()
        );
        assert!((r_bar - target).norm() < 1e-3);
        for w in costs[15..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn out_of_bounds_reference_tracks_the_boundary() {
        let (x, _, r_bar) = closed_loop(Vec2::new(6.0, 1.0), 200);
        assert!((r_bar - Vec2::new(5.0, 1.0)).norm() < 1e-3, "{r_bar:?}");
        assert!((x.pos - Vec2::new(5.0, 1.0)).norm() < 1e-3);
    }
}
