//! In-contact grasp synthesis: hand joints plus one auxiliary point per finger, solved
//! by bound-constrained Gauss-Newton on the penalty objective
//!
//! ```text
//! sum_i  sdf_est(p_i)^2 + |phi_i(q) - p_i|^2 + alpha (1 - cos theta_i)^2
//! ```
//!
//! where `cos theta_i` is the angle between the fingertip pad normal and the direction
//! from the fingertip to `p_i`. Every accepted step lowers the cost and keeps the hand
//! free of self-collision.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::collision::{self_coll_with, CollisionPairSet};
use crate::kinematics::{HandArmModel, JointConfig, FINGER_DOF};
use crate::sdf::{surface_project, SignedDistance};
use crate::{Error, Result, Vec3};

/// Rows per finger in the residual vector.
pub const ROWS_PER_FINGER: usize = 5;
const DEGENERATE_GAP: f64 = 1e-9;

pub struct ContactProblem<'a> {
    pub model: &'a HandArmModel,
    pub est: &'a dyn SignedDistance,
    pub q_arm: Vec<f64>,
    pub q_hand_init: Vec<f64>,
    pub p_init: Vec<Vec3>,
    pairs: CollisionPairSet,
}

impl<'a> ContactProblem<'a> {
    /// Freezes the arm at `q0`'s arm joints and starts each auxiliary point halfway between
    /// its fingertip and the fingertip's projection onto the estimated surface.
    pub fn new(model: &'a HandArmModel, est: &'a dyn SignedDistance, q0: &JointConfig) -> Result<Self> {
        model.check_config(q0)?;
        let p_init = (0..model.finger_count())
            .map(|f| {
                let tip = model.fingertip_position(q0, f)?;
                let surface = surface_project(est, &tip, 50).unwrap_or_else(|fail| fail.point);
                Ok((tip + surface) * 0.5)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ContactProblem {
            model,
            est,
            q_arm: q0.arm().to_vec(),
            q_hand_init: q0.hand().to_vec(),
            p_init,
            pairs: CollisionPairSet::for_model(model),
        })
    }

    /// Problem with explicit auxiliary points.
    pub fn with_points(
        model: &'a HandArmModel,
        est: &'a dyn SignedDistance,
        q0: &JointConfig,
        p_init: Vec<Vec3>,
    ) -> Result<Self> {
        model.check_config(q0)?;
        if p_init.len() != model.finger_count() {
            return Err(Error::Dimension {
                expected: model.finger_count(),
                got: p_init.len(),
            });
        }
        Ok(ContactProblem {
            model,
            est,
            q_arm: q0.arm().to_vec(),
            q_hand_init: q0.hand().to_vec(),
            p_init,
            pairs: CollisionPairSet::for_model(model),
        })
    }

    pub fn config(&self, q_hand: &[f64]) -> JointConfig {
        JointConfig::from_parts(&self.q_arm, q_hand)
    }

    pub fn variable_count(&self) -> usize {
        self.model.hand_dof() + 3 * self.model.finger_count()
    }

    pub fn residual_count(&self) -> usize {
        ROWS_PER_FINGER * self.model.finger_count()
    }

    fn self_collisions(&self, q_hand: &[f64]) -> usize {
        self_coll_with(self.model, &self.pairs, &self.config(q_hand)).expect("config matches model")
    }
}

#[derive(Clone, Debug)]
pub struct Residuals {
    pub values: DVector<f64>,
    /// `residual_count x (hand_dof + 3F)`: hand joint columns first, then `p_0, p_1, ...`.
    pub jacobian: DMatrix<f64>,
    /// Fingers whose alignment rows were zeroed because `p_i` sits on the fingertip.
    pub degenerate: Vec<bool>,
}

impl Residuals {
    pub fn cost(&self) -> f64 {
        self.values.norm_squared()
    }
}

/// Residual vector and Jacobian of the penalty objective at `(q_hand, p)`.
pub fn build_residuals(problem: &ContactProblem, q_hand: &[f64], p: &[Vec3], alpha: f64) -> Result<Residuals> {
    let model = problem.model;
    let nf = model.finger_count();
    if q_hand.len() != model.hand_dof() {
        return Err(Error::Dimension {
            expected: model.hand_dof(),
            got: q_hand.len(),
        });
    }
    if p.len() != nf {
        return Err(Error::Dimension {
            expected: nf,
            got: p.len(),
        });
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    let q = problem.config(q_hand);
    let arm = model.arm_dof();
    let m = model.hand_dof();
    let sqrt_alpha = alpha.sqrt();
    let mut values = DVector::zeros(ROWS_PER_FINGER * nf);
    let mut jac = DMatrix::zeros(ROWS_PER_FINGER * nf, m + 3 * nf);
    let mut degenerate = vec![false; nf];

    for i in 0..nf {
        let row = ROWS_PER_FINGER * i;
        let pcol = m + 3 * i;
        let s = model.fingertip_state(&q, i)?;
        let hand_cols = model.finger_offset(i) - arm..model.finger_offset(i) - arm + FINGER_DOF;
        let ji = s.position_jacobian.columns(arm + hand_cols.start, FINGER_DOF);
        let jn = s.normal_jacobian.columns(arm + hand_cols.start, FINGER_DOF);

        let sample = problem.est.query(&p[i]);
        values[row] = sample.distance;
        jac.view_mut((row, pcol), (1, 3)).copy_from(&sample.gradient.transpose());

        let gap = s.position - p[i];
        values.rows_mut(row + 1, 3).copy_from(&gap);
        jac.view_mut((row + 1, hand_cols.start), (3, FINGER_DOF)).copy_from(&ji);
        jac.view_mut((row + 1, pcol), (3, 3)).copy_from(&(-Matrix3::identity()));

        let d = p[i] - s.position;
        let len = d.norm();
        if len < DEGENERATE_GAP {
            degenerate[i] = true;
            continue;
        }
        let dhat = d / len;
        let n = s.normal;
        values[row + 4] = sqrt_alpha * (1.0 - n.dot(&dhat));
        let proj = (Matrix3::identity() - dhat * dhat.transpose()) / len;
        let wrt_p = -(proj * n).transpose() * sqrt_alpha;
        let wrt_q = -(dhat.transpose() * jn - (proj * n).transpose() * ji) * sqrt_alpha;
        jac.view_mut((row + 4, hand_cols.start), (1, FINGER_DOF)).copy_from(&wrt_q);
        jac.view_mut((row + 4, pcol), (1, 3)).copy_from(&wrt_p);
    }
    Ok(Residuals {
        values,
        jacobian: jac,
        degenerate,
    })
}

/// Penalty weight schedule for the alignment term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSchedule {
    /// `alpha = 1 / j^2` at iteration `j` (1-based).
    InverseSquare,
    /// `alpha = 0`; the faster variant used for data collection.
    Zero,
}

impl AlphaSchedule {
    pub fn alpha(self, iteration: usize) -> f64 {
        match self {
            AlphaSchedule::InverseSquare => 1.0 / (iteration as f64).powi(2),
            AlphaSchedule::Zero => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Levenberg damping added to the normal equations.
    pub damping: f64,
    pub max_halvings: usize,
    /// Convergence bound on `|sdf_est(phi_i)|`.
    pub sdf_tol: f64,
    pub step_tol: f64,
    pub schedule: AlphaSchedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 50,
            damping: 1e-6,
            max_halvings: 16,
            sdf_tol: 1e-3,
            step_tol: 1e-6,
            schedule: AlphaSchedule::InverseSquare,
        }
    }
}

/// One solver iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub alpha: f64,
    /// Cost at the start of the iteration (at this iteration's alpha).
    pub cost: f64,
    /// Cost after the accepted step (equal to `cost` when nothing was accepted).
    pub cost_after: f64,
    pub step_norm: f64,
    pub halvings: usize,
    pub accepted: bool,
    pub max_tip_sdf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FingerResidual {
    /// `|sdf_est(p_i)|`
    pub sdf: f64,
    /// `|phi_i - p_i|`
    pub gap: f64,
    /// `1 - cos theta_i` (0 when degenerate)
    pub misalignment: f64,
}

#[derive(Clone, Debug)]
pub struct GraspSolution {
    pub q_hand: Vec<f64>,
    pub p: Vec<Vec3>,
    pub residuals: Vec<FingerResidual>,
    /// `sdf_est` at each fingertip.
    pub tip_sdf: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl GraspSolution {
    pub fn max_tip_sdf(&self) -> f64 {
        self.tip_sdf.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

fn tip_sdf(problem: &ContactProblem, q_hand: &[f64]) -> Vec<f64> {
    let q = problem.config(q_hand);
    (0..problem.model.finger_count())
        .map(|f| problem.est.distance(&problem.model.fingertip_position(&q, f).unwrap()))
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, d| m.max(d.abs()))
}

/// Gauss-Newton with active-set joint bounds and a self-collision rejecting line search.
pub fn solve_contact(problem: &ContactProblem, opts: &SolverOptions) -> GraspSolution {
    let model = problem.model;
    let m = model.hand_dof();
    let nf = model.finger_count();
    let lower = model.hand_lower();
    let upper = model.hand_upper();
    let mut q: Vec<f64> = problem
        .q_hand_init
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect();
    let mut p = problem.p_init.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for j in 1..=opts.max_iters {
        iterations = j;
        let alpha = opts.schedule.alpha(j);
        let res = build_residuals(problem, &q, &p, alpha).expect("dimensions checked at construction");
        let cost = res.cost();
        let tips = tip_sdf(problem, &q);
        let step = gauss_newton_step(&res, &q, lower, upper, opts.damping);
        let step_norm = step.norm();
        let mut row = TraceRow {
            iteration: j,
            alpha,
            cost,
            cost_after: cost,
            step_norm,
            halvings: 0,
            accepted: false,
            max_tip_sdf: max_abs(&tips),
        };
        let settled = step_norm < opts.step_tol && max_abs(&tips) <= opts.sdf_tol;

        let mut t = 1.0;
        let mut accepted = None;
        for h in 0..=opts.max_halvings {
            row.halvings = h;
            let qt: Vec<f64> = (0..m).map(|k| (q[k] + t * step[k]).clamp(lower[k], upper[k])).collect();
            let pt: Vec<Vec3> = (0..nf)
                .map(|i| p[i] + Vec3::new(step[m + 3 * i], step[m + 3 * i + 1], step[m + 3 * i + 2]) * t)
                .collect();
            let trial = build_residuals(problem, &qt, &pt, alpha).expect("dimensions checked").cost();
            if trial < cost && problem.self_collisions(&qt) == 0 {
                accepted = Some((qt, pt, trial));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((qt, pt, c)) => {
                row.accepted = true;
                row.cost_after = c;
                q = qt;
                p = pt;
                trace.push(row);
                if t * step_norm < opts.step_tol && max_abs(&tip_sdf(problem, &q)) <= opts.sdf_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // A negligible step that no longer lowers the cost at an in-tolerance
                // point is convergence, not a stall.
                converged = settled;
                trace.push(row);
                break;
            }
        }
    }

    let res = build_residuals(problem, &q, &p, 0.0).expect("dimensions checked");
    let qc = problem.config(&q);
    let residuals = (0..nf)
        .map(|i| {
            let s = model.fingertip_state(&qc, i).unwrap();
            let d = p[i] - s.position;
            let misalignment = if d.norm() < DEGENERATE_GAP {
                0.0
            } else {
                1.0 - s.normal.dot(&d.normalize())
            };
            FingerResidual {
                sdf: res.values[ROWS_PER_FINGER * i].abs(),
                gap: d.norm(),
                misalignment,
            }
        })
        .collect();
    GraspSolution {
        tip_sdf: tip_sdf(problem, &q),
        q_hand: q,
        p,
        residuals,
        iterations,
        converged,
        trace,
    }
}

/// The same solve with the alignment weight pinned to zero.
pub fn data_collection_variant(problem: &ContactProblem, opts: &SolverOptions) -> GraspSolution {
    solve_contact(
        problem,
        &SolverOptions {
            schedule: AlphaSchedule::Zero,
            ..opts.clone()
        },
    )
}

/// Damped Gauss-Newton step. Joints sitting on a bound that the step would push further
/// out are removed from the system and the reduced problem is solved again.
fn gauss_newton_step(res: &Residuals, q: &[f64], lower: &[f64], upper: &[f64], damping: f64) -> DVector<f64> {
    let n = res.jacobian.ncols();
    let m = q.len();
    let mut free = vec![true; n];
    let jtj = res.jacobian.transpose() * &res.jacobian;
    let jtr = res.jacobian.transpose() * &res.values;
    loop {
        let idx: Vec<usize> = (0..n).filter(|&k| free[k]).collect();
        let k = idx.len();
        let mut a = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                a[(r, c)] = jtj[(ir, ic)];
            }
            a[(r, r)] += damping;
            b[r] = -jtr[ir];
        }
        let sol = a.clone().cholesky().map(|c| c.solve(&b)).unwrap_or_else(|| {
            a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(k))
        });
        let mut step = DVector::zeros(n);
        for (r, &i) in idx.iter().enumerate() {
            step[i] = sol[r];
        }
        let mut changed = false;
        for i in 0..m {
            if free[i] && ((q[i] <= lower[i] && step[i] < 0.0) || (q[i] >= upper[i] && step[i] > 0.0)) {
                free[i] = false;
                changed = true;
            }
        }
        if !changed {
            return step;
        }
    }
}
