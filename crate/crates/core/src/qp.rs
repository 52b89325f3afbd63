//! Dense strictly convex quadratic programs.
//!
//! ```text
//!     minimize     1/2 x' G x + a' x
//!     subject to   E x  = e
//!                  C x >= c
//! ```
//!
//! Solved with the Goldfarb-Idnani dual active-set method: start from the
//! unconstrained minimizer and repeatedly add the most violated constraint,
//! dropping active inequalities whose multipliers would turn negative. The
//! factorization `J' G J = I` and the upper-triangular `R` with
//! `J' N_active = [R; 0]` are kept up to date with Givens rotations, so each
//! add or drop costs `O(n^2)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    /// Equality normals, one row per constraint.
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    /// Inequality normals (`row . x >= rhs`), one row per constraint.
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
}

impl QpProblem {
    pub fn unconstrained(hessian: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    /// Largest equality residual or inequality violation at `x`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let eq = (&self.eq_matrix * x - &self.eq_rhs).amax();
        let ineq = (&self.ineq_rhs - &self.ineq_matrix * x)
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v));
        if self.eq_rhs.is_empty() {
            ineq
        } else {
            eq.max(ineq)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub max_iter: usize,
    /// Feasibility tolerance on the normalized constraint residual.
    pub feas_tol: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Active inequality indices (into the inequality rows).
    pub active_ineq: Vec<usize>,
    /// Multipliers of all equalities followed by the active inequalities.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("problem dimensions are inconsistent")]
    DimensionMismatch,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("iteration limit reached")]
    MaxIterations(Box<QpSolution>),
}

#[derive(Clone, Copy)]
struct ActiveEntry {
    // index into the combined constraint list (equalities first)
    index: usize,
    // +1 or -1; equalities may be added with a flipped sign
    sign: f64,
    equality: bool,
}

pub fn solve(problem: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    let n = problem.n();
    let n_eq = problem.eq_rhs.len();
    let n_in = problem.ineq_rhs.len();
    if problem.hessian.shape() != (n, n)
        || problem.eq_matrix.shape() != (n_eq, n)
        || problem.ineq_matrix.shape() != (n_in, n)
    {
        return Err(QpError::DimensionMismatch);
    }

    // Constraint normals as columns for cheap access.
    let mut normals = DMatrix::zeros(n, n_eq + n_in);
    let mut rhs = DVector::zeros(n_eq + n_in);
    for i in 0..n_eq {
        normals.set_column(i, &problem.eq_matrix.row(i).transpose());
        rhs[i] = problem.eq_rhs[i];
    }
    for i in 0..n_in {
        normals.set_column(n_eq + i, &problem.ineq_matrix.row(i).transpose());
        rhs[n_eq + i] = problem.ineq_rhs[i];
    }
    let norms: Vec<f64> = (0..n_eq + n_in)
        .map(|i| normals.column(i).norm().max(f64::MIN_POSITIVE))
        .collect();

    let chol = problem
        .hessian
        .clone()
        .cholesky()
        .ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let mut j_mat = l_inv.transpose();
    let mut r_mat = DMatrix::<f64>::zeros(n, n);

    let mut x = -chol.solve(&problem.linear);
    let mut active: Vec<ActiveEntry> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n);
    let mut is_active = vec![false; n_eq + n_in];
    let mut iterations = 0usize;

    let residual = |x: &DVector<f64>, idx: usize| normals.column(idx).dot(x) - rhs[idx];

    let finish =
        |x: DVector<f64>, active: &[ActiveEntry], u: &[f64], iterations: usize| -> QpSolution {
            let mut grad = &problem.hessian * &x + &problem.linear;
            for (entry, &mult) in active.iter().zip(u) {
                grad -= normals.column(entry.index) * (entry.sign * mult);
            }
            let mut kkt = grad.amax().max(problem.max_violation(&x));
            let mut eq_mult = vec![0.0; n_eq];
            let mut ineq = Vec::new();
            for (entry, &mult) in active.iter().zip(u) {
                if entry.equality {
                    eq_mult[entry.index] = entry.sign * mult;
                } else {
                    kkt = kkt.max(-mult);
                    ineq.push((entry.index - n_eq, mult));
                }
            }
            ineq.sort_by_key(|&(i, _)| i);
            let mut multipliers = eq_mult;
            multipliers.extend(ineq.iter().map(|&(_, m)| m));
            QpSolution {
                objective: problem.objective(&x),
                x,
                active_ineq: ineq.iter().map(|&(i, _)| i).collect(),
                multipliers,
                iterations,
                kkt_residual: kkt,
            }
        };

    let mut next_eq = 0usize;
    loop {
        // Step 1: pick a violated constraint.
        let mut pick: Option<(usize, f64)> = None;
        // Equalities are added first, in order.
        if next_eq < n_eq {
            let idx = next_eq;
            next_eq += 1;
            let sign = if residual(&x, idx) > 0.0 { -1.0 } else { 1.0 };
            pick = Some((idx, sign));
        }
        if pick.is_none() {
            let mut worst = -settings.feas_tol;
            for i in 0..n_in {
                let idx = n_eq + i;
                if is_active[idx] {
                    continue;
                }
                let s = residual(&x, idx) / norms[idx];
                if s < worst {
                    worst = s;
                    pick = Some((idx, 1.0));
                }
            }
        }
        let Some((p, sign)) = pick else {
            return Ok(finish(x, &active, &u, iterations));
        };
        let is_eq = p < n_eq;
        let np: DVector<f64> = normals.column(p) * sign;
        let bp = rhs[p] * sign;
        let mut up = 0.0;

        // Step 2: move until p becomes active.
        loop {
            iterations += 1;
            if iterations > settings.max_iter {
                let sol = finish(x, &active, &u, iterations);
                return Err(QpError::MaxIterations(Box::new(sol)));
            }
            let q = active.len();
            let d = j_mat.tr_mul(&np);
            let z = if q < n {
                j_mat.columns(q, n - q) * d.rows(q, n - q)
            } else {
                DVector::zeros(n)
            };
            let r = if q > 0 {
                r_mat
                    .view((0, 0), (q, q))
                    .solve_upper_triangular(&d.rows(0, q))
                    .ok_or(QpError::DimensionMismatch)?
            } else {
                DVector::zeros(0)
            };

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for k in 0..q {
                if !active[k].equality && r[k] > 0.0 {
                    let ratio = u[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(k);
                    }
                }
            }
            let s = np.dot(&x) - bp;
            let d2_norm = if q < n { d.rows(q, n - q).norm() } else { 0.0 };
            let degenerate = d2_norm <= 1e-12 * d.norm().max(1.0);
            let zn = z.dot(&np);
            let t2 = if !degenerate && zn > 0.0 {
                -s / zn
            } else {
                f64::INFINITY
            };

            if t2.is_infinite() {
                if is_eq && s.abs() <= settings.feas_tol * norms[p] {
                    // Redundant equality, already satisfied.
                    break;
                }
                if t1.is_infinite() {
                    return Err(QpError::Infeasible);
                }
                for k in 0..q {
                    u[k] -= t1 * r[k];
                }
                up += t1;
                let k = drop_at.expect("finite t1 has a drop index");
                drop_constraint(
                    k,
                    &mut active,
                    &mut u,
                    &mut is_active,
                    &mut r_mat,
                    &mut j_mat,
                );
                continue;
            }

            let t = t1.min(t2);
            x += &z * t;
            for k in 0..q {
                u[k] -= t * r[k];
            }
            up += t;
            if t2 <= t1 {
                add_constraint(&np, &mut r_mat, &mut j_mat, q);
                active.push(ActiveEntry {
                    index: p,
                    sign,
                    equality: is_eq,
                });
                u.push(up);
                is_active[p] = true;
                break;
            }
            let k = drop_at.expect("partial step has a drop index");
            drop_constraint(
                k,
                &mut active,
                &mut u,
                &mut is_active,
                &mut r_mat,
                &mut j_mat,
            );
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

fn rotate_columns(j_mat: &mut DMatrix<f64>, a: usize, b: usize, c: f64, s: f64) {
    for i in 0..j_mat.nrows() {
        let (x, y) = (j_mat[(i, a)], j_mat[(i, b)]);
        j_mat[(i, a)] = c * x + s * y;
        j_mat[(i, b)] = -s * x + c * y;
    }
}

fn add_constraint(np: &DVector<f64>, r_mat: &mut DMatrix<f64>, j_mat: &mut DMatrix<f64>, q: usize) {
    let n = j_mat.nrows();
    let mut d = j_mat.tr_mul(np);
    for jj in (q + 1..n).rev() {
        if d[jj] == 0.0 {
            continue;
        }
        let (c, s, h) = givens(d[jj - 1], d[jj]);
        d[jj - 1] = h;
        d[jj] = 0.0;
        rotate_columns(j_mat, jj - 1, jj, c, s);
    }
    for i in 0..=q {
        r_mat[(i, q)] = d[i];
    }
}

fn drop_constraint(
    k: usize,
    active: &mut Vec<ActiveEntry>,
    u: &mut Vec<f64>,
    is_active: &mut [bool],
    r_mat: &mut DMatrix<f64>,
    j_mat: &mut DMatrix<f64>,
) {
    let q = active.len();
    is_active[active[k].index] = false;
    active.remove(k);
    u.remove(k);
    for col in k..q - 1 {
        for row in 0..=col + 1 {
            r_mat[(row, col)] = r_mat[(row, col + 1)];
        }
    }
    for row in 0..q {
        r_mat[(row, q - 1)] = 0.0;
    }
    for jj in k..q - 1 {
        let (c, s, h) = givens(r_mat[(jj, jj)], r_mat[(jj + 1, jj)]);
        r_mat[(jj, jj)] = h;
        r_mat[(jj + 1, jj)] = 0.0;
        for col in jj + 1..q - 1 {
            let (a, b) = (r_mat[(jj, col)], r_mat[(jj + 1, col)]);
            r_mat[(jj, col)] = c * a + s * b;
            r_mat[(jj + 1, col)] = -s * a + c * b;
        }
        rotate_columns(j_mat, jj, jj + 1, c, s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_matches_normal_equations() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let sol = solve(
            &QpProblem::unconstrained(g.clone(), a.clone()),
            &QpSettings::default(),
        )
        .unwrap();
        let want = -g.lu().solve(&a).unwrap();
        assert!((sol.x - want).amax() < 1e-14);
    }

    #[test]
    fn single_inequality_textbook() {
        // min 1/2 (x^2 + y^2) + x  s.t.  x + 2y >= 1  ->  (-0.6, 0.8)
        let mut p =
            QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 0.0]));
        p.ineq_matrix = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        p.ineq_rhs = DVector::from_vec(vec![1.0]);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.x[0] + 0.6).abs() < 1e-14 && (sol.x[1] - 0.8).abs() < 1e-14);
        assert_eq!(sol.active_ineq, vec![0]);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn equality_and_bounds() {
        // min |x|^2 s.t. x0 + x1 + x2 = 3, x0 <= 0.5
        let mut p = QpProblem::unconstrained(DMatrix::identity(3, 3) * 2.0, DVector::zeros(3));
        p.eq_matrix = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        p.eq_rhs = DVector::from_vec(vec![3.0]);
        p.ineq_matrix = DMatrix::from_row_slice(1, 3, &[-1.0, 0.0, 0.0]);
        p.ineq_rhs = DVector::from_vec(vec![-0.5]);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
        assert!((sol.x[1] - 1.25).abs() < 1e-12);
        assert!((sol.x[2] - 1.25).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn detects_infeasible_bounds() {
        let mut p = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1));
        p.ineq_matrix = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        p.ineq_rhs = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(solve(&p, &QpSettings::default()), Err(QpError::Infeasible));
    }

    #[test]
    fn drops_constraints_that_become_inactive() {
        // min (x-2)^2 + (y-1)^2 with x <= 1, x + y <= 2, and y >= -5.
        let mut p = QpProblem::unconstrained(
            DMatrix::identity(2, 2) * 2.0,
            DVector::from_vec(vec![-4.0, -2.0]),
        );
        p.ineq_matrix = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, -1.0, -1.0, 0.0, 1.0]);
        p.ineq_rhs = DVector::from_vec(vec![-1.0, -2.0, -5.0]);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-12);
    }
}
