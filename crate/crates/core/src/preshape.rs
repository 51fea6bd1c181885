//! Preshape generation: geometric palm sampling, damped least-squares arm IK and
//! box-constrained L-BFGS refinement of a surrogate standoff objective.

use nalgebra::{DVector, Matrix6, Rotation3, UnitQuaternion, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{gjk_distance, CollisionPairSet};
use crate::kinematics::{HandArmModel, JointConfig, FINGER_DOF};
use crate::optim::{minimize_box, LbfgsOptions};
use crate::sdf::SignedDistance;
use crate::{Pose, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreshapeParams {
    /// Palm distance beyond the bounding-box half diagonal.
    pub palm_standoff: f64,
    /// Target fingertip distance `d0` in the surrogate objective.
    pub fingertip_standoff: f64,
    /// Weight of the palm alignment term.
    pub w_align: f64,
    /// Minimum fingertip distance for a feasible preshape.
    pub standoff_min: f64,
    /// Open hand pose per finger joint `[j0, j1, j2, j3]` for non-thumb fingers.
    pub open_finger: [f64; FINGER_DOF],
    pub open_thumb: [f64; FINGER_DOF],
    /// Starting arm configuration for IK.
    pub arm_home: Vec<f64>,
    pub ik_damping: f64,
    pub ik_iters: usize,
    /// Extra randomized IK restarts after the home start fails.
    pub ik_restarts: usize,
    pub refine_iters: usize,
    pub grad_tol: f64,
    /// How many of the best-scoring feasible samples `plan_preshape` refines.
    pub refine_top: usize,
    /// Approach directions are bounding-box face normals tilted by up to this angle (rad).
    pub approach_jitter: f64,
    /// The palm roll lines the finger/thumb axis up with a box axis, up to this angle (rad).
    pub roll_jitter: f64,
}

impl Default for PreshapeParams {
    fn default() -> Self {
        PreshapeParams {
            palm_standoff: 0.08,
            fingertip_standoff: 0.02,
            w_align: 0.1,
            standoff_min: 0.0,
            open_finger: [0.0, -0.25, 0.1, 0.1],
            open_thumb: [0.0, -0.25, 0.1, 0.1],
            arm_home: vec![0.0, 0.6, 0.0, -1.4, 0.0, 0.9, 0.0],
            ik_damping: 1e-3,
            ik_iters: 100,
            ik_restarts: 2,
            refine_iters: 200,
            grad_tol: 1e-6,
            refine_top: 4,
            approach_jitter: 0.15,
            roll_jitter: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreshapeCandidate {
    pub q0: JointConfig,
    /// Palm pose reached by the arm (forward kinematics).
    pub palm_pose: Pose,
    /// Surrogate objective value.
    pub score: f64,
    pub feasible: bool,
    /// Arm IK reached the sampled palm pose.
    pub ik_converged: bool,
    /// Refinement reached the gradient tolerance (always true for unrefined samples).
    pub converged: bool,
}

/// Position error (m) and orientation error (rad) accepted as an IK solution.
pub const IK_TOLERANCE: f64 = 1e-7;

fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation.vector - current.translation.vector;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Damped least-squares IK for the palm pose, arm joints only. Hand joints of `q` are
/// left untouched. Returns whether the target was reached.
pub fn palm_ik(model: &HandArmModel, q: &mut JointConfig, target: &Pose, damping: f64, iters: usize) -> bool {
    let n = model.arm_dof();
    let lambda2 = damping * damping;
    for _ in 0..iters {
        let (pose, jac) = model.palm_jacobian(q).expect("config matches model");
        let e = pose_error(&pose, target);
        if e.fixed_rows::<3>(0).norm() < IK_TOLERANCE && e.fixed_rows::<3>(3).norm() < IK_TOLERANCE {
            return true;
        }
        let ja = jac.columns(0, n);
        let jjt: Matrix6<f64> = ja * ja.transpose() + Matrix6::identity() * lambda2;
        let Some(y) = jjt.cholesky().map(|c| c.solve(&e)) else {
            return false;
        };
        let dq = ja.transpose() * y;
        for k in 0..n {
            let v = q.values()[k] + dq[k];
            q.values_mut()[k] = v.clamp(model.lower()[k], model.upper()[k]);
        }
    }
    let pose = model.palm_pose(q).expect("config matches model");
    let e = pose_error(&pose, target);
    e.fixed_rows::<3>(0).norm() < IK_TOLERANCE && e.fixed_rows::<3>(3).norm() < IK_TOLERANCE
}

/// Surrogate objective and its gradient over all joints.
pub fn surrogate(
    model: &HandArmModel,
    est: &dyn SignedDistance,
    params: &PreshapeParams,
    q: &JointConfig,
) -> (f64, DVector<f64>) {
    let dof = model.dof();
    let mut value = 0.0;
    let mut grad = DVector::zeros(dof);
    for f in 0..model.finger_count() {
        let s = model.fingertip_state(q, f).expect("config matches model");
        let sample = est.query(&s.position);
        let r = sample.distance - params.fingertip_standoff;
        value += r * r;
        grad += (s.position_jacobian.transpose() * sample.gradient) * (2.0 * r);
    }
    let (palm, jac) = model.palm_jacobian(q).expect("config matches model");
    let to_center = est.center() - palm.translation.vector;
    let dist = to_center.norm();
    if dist > 1e-12 {
        let u = to_center / dist;
        let z = palm.rotation * Vec3::z();
        let c = z.dot(&u);
        value += params.w_align * (1.0 - c).powi(2);
        let jl = jac.fixed_rows::<3>(0);
        let jw = jac.fixed_rows::<3>(3);
        let proj = (nalgebra::Matrix3::identity() - u * u.transpose()) / dist;
        // dc/dq = u . (w x z) + z . du/dq, with du/dq = -(I - uu^T)/|d| J_lin.
        let mut dc = DVector::zeros(dof);
        for k in 0..dof {
            let w = jw.column(k).into_owned();
            let v = jl.column(k).into_owned();
            dc[k] = u.dot(&w.cross(&z)) - z.dot(&(proj * v));
        }
        grad -= dc * (2.0 * params.w_align * (1.0 - c));
    }
    (value, grad)
}

/// Feasibility: bounds, no self-collision, fingertips at least `standoff_min` outside the
/// surface and no hand link vertex inside the object.
pub fn is_feasible(
    model: &HandArmModel,
    pairs: &CollisionPairSet,
    est: &dyn SignedDistance,
    params: &PreshapeParams,
    q: &JointConfig,
) -> bool {
    q.within_bounds(model)
        && self_collision_free(model, pairs, q)
        && (0..model.finger_count())
            .all(|f| est.distance(&model.fingertip_position(q, f).unwrap()) >= params.standoff_min)
        && hand_clear_of_object(model, est, q)
}

fn self_collision_free(model: &HandArmModel, pairs: &CollisionPairSet, q: &JointConfig) -> bool {
    let poses = model.link_poses(q).expect("config matches model");
    let links = model.links();
    pairs.pairs().iter().all(|&(a, b)| match (&links[a].hull, &links[b].hull) {
        (Some(ha), Some(hb)) => !gjk_distance(ha, &poses[a], hb, &poses[b]).intersecting,
        _ => true,
    })
}

fn hand_clear_of_object(model: &HandArmModel, est: &dyn SignedDistance, q: &JointConfig) -> bool {
    let poses = model.link_poses(q).expect("config matches model");
    model
        .links()
        .iter()
        .zip(&poses)
        .filter(|(l, _)| l.kind.is_hand())
        .all(|(l, pose)| {
            l.hull
                .as_ref()
                .map_or(true, |h| h.world_vertices(pose).all(|v| est.distance(&v) >= 0.0))
        })
}

/// Open hand configuration from the params (thumb fingers use `open_thumb`).
pub fn open_hand(model: &HandArmModel, params: &PreshapeParams) -> Vec<f64> {
    model
        .fingers()
        .iter()
        .flat_map(|f| if f.thumb { params.open_thumb } else { params.open_finger })
        .collect()
}

/// Palm pose at `center - radius * z` whose z axis points at `center`, rolled by `roll`.
pub fn aimed_palm_pose(center: &Vec3, direction: &Vec3, radius: f64, roll: f64) -> Pose {
    let z = -direction.normalize();
    let helper = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    let base = Rotation3::from_basis_unchecked(&[x, y, z]);
    let rot = UnitQuaternion::from_rotation_matrix(&base) * UnitQuaternion::from_axis_angle(&Vec3::z_axis(), roll);
    Pose::from_parts((center + direction.normalize() * radius).into(), rot)
}

/// A bounding-box face normal tilted by a random angle up to `jitter`, and a roll that
/// puts the finger/thumb axis across the narrower in-plane box extent, up to `roll_jitter`.
fn face_approach(
    axes: &UnitQuaternion<f64>,
    half_extents: &Vec3,
    jitter: f64,
    roll_jitter: f64,
    rng: &mut impl Rng,
) -> (Vec3, f64) {
    let face = rng.gen_range(0..6);
    let sign = if face < 3 { 1.0 } else { -1.0 };
    let mut local = Vec3::zeros();
    local[face % 3] = sign;
    let (a, b) = ((face + 1) % 3, (face + 2) % 3);
    let across = if (half_extents[a] - half_extents[b]).abs() <= 1e-9 * half_extents.max() {
        if rng.gen_bool(0.5) { a } else { b }
    } else if half_extents[a] < half_extents[b] {
        a
    } else {
        b
    };
    let mut in_plane = Vec3::zeros();
    in_plane[across] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let normal = axes * local;
    let hint = axes * in_plane;

    let tilt_axis = normal.cross(&random_unit(rng));
    let dir = if tilt_axis.norm() > 1e-9 {
        let angle = rng.gen_range(0.0..=jitter);
        UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(tilt_axis), angle) * normal
    } else {
        normal
    };
    let base = aimed_palm_pose(&Vec3::zeros(), &dir, 1.0, 0.0);
    let x0 = base.rotation * Vec3::x();
    let y0 = base.rotation * Vec3::y();
    let roll = hint.dot(&y0).atan2(hint.dot(&x0)) + rng.gen_range(-roll_jitter..=roll_jitter);
    (dir, roll)
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Samples `count` palm poses on a sphere around the object and solves arm IK for each.
/// Every sample is returned; failed IK or collisions only clear `feasible`.
pub fn sample_preshapes(
    model: &HandArmModel,
    est: &dyn SignedDistance,
    params: &PreshapeParams,
    count: usize,
    seed: u64,
) -> Vec<PreshapeCandidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = CollisionPairSet::for_model(model);
    let center = est.center();
    let axes = est.axes();
    let extents = est.half_extents();
    let radius = est.half_diagonal() + params.palm_standoff;
    let hand = open_hand(model, params);
    let mut home = params.arm_home.clone();
    home.resize(model.arm_dof(), 0.0);
    (0..count)
        .map(|_| {
            let (dir, roll) = face_approach(&axes, &extents, params.approach_jitter, params.roll_jitter, &mut rng);
            let restarts: Vec<Vec<f64>> = (0..params.ik_restarts)
                .map(|_| {
                    (0..model.arm_dof())
                        .map(|k| {
                            let (lo, hi) = (model.lower()[k], model.upper()[k]);
                            rng.gen_range(lo * 0.5..=hi * 0.5)
                        })
                        .collect()
                })
                .collect();
            let target = aimed_palm_pose(&center, &dir, radius, roll);
            let mut best = None;
            for start in std::iter::once(&home).chain(restarts.iter()) {
                let mut q = JointConfig::from_parts(start, &hand);
                if palm_ik(model, &mut q, &target, params.ik_damping, params.ik_iters) {
                    best = Some(q);
                    break;
                }
                best.get_or_insert(q);
            }
            let q = best.expect("at least one IK attempt");
            let palm_pose = model.palm_pose(&q).expect("config matches model");
            let ik_converged = {
                let e = pose_error(&palm_pose, &target);
                e.fixed_rows::<3>(0).norm() < IK_TOLERANCE && e.fixed_rows::<3>(3).norm() < IK_TOLERANCE
            };
            let score = surrogate(model, est, params, &q).0;
            let feasible = ik_converged && is_feasible(model, &pairs, est, params, &q);
            PreshapeCandidate {
                q0: q,
                palm_pose,
                score,
                feasible,
                ik_converged,
                converged: true,
            }
        })
        .collect()
}

/// Refines a candidate with box-constrained L-BFGS on the surrogate objective. Steps that
/// self-collide are rejected by the line search; the objective never increases.
pub fn refine_preshape(
    model: &HandArmModel,
    est: &dyn SignedDistance,
    params: &PreshapeParams,
    candidate: &PreshapeCandidate,
) -> PreshapeCandidate {
    let pairs = CollisionPairSet::for_model(model);
    let arm_dof = model.arm_dof();
    let start_free = self_collision_free(model, &pairs, &candidate.q0);
    let opts = LbfgsOptions {
        max_iters: params.refine_iters,
        grad_tol: params.grad_tol,
        ..Default::default()
    };
    let result = minimize_box(
        |x: &DVector<f64>| surrogate(model, est, params, &JointConfig::new(x.iter().copied().collect(), arm_dof)),
        candidate.q0.values(),
        model.lower(),
        model.upper(),
        &opts,
        |x: &DVector<f64>| {
            !start_free || self_collision_free(model, &pairs, &JointConfig::new(x.iter().copied().collect(), arm_dof))
        },
    );
    let mut q = JointConfig::new(result.x.iter().copied().collect(), arm_dof);
    q.clamp_to_bounds(model);
    let palm_pose = model.palm_pose(&q).expect("config matches model");
    let score = surrogate(model, est, params, &q).0;
    PreshapeCandidate {
        feasible: candidate.ik_converged && is_feasible(model, &pairs, est, params, &q),
        q0: q,
        palm_pose,
        score,
        ik_converged: candidate.ik_converged,
        converged: result.converged,
    }
}

/// Samples, refines the `refine_top` best feasible samples and returns the best feasible
/// refined candidate by score (ties broken by sample order), or `None`.
pub fn plan_preshape(
    model: &HandArmModel,
    est: &dyn SignedDistance,
    params: &PreshapeParams,
    count: usize,
    seed: u64,
) -> Option<PreshapeCandidate> {
    let mut samples: Vec<PreshapeCandidate> = sample_preshapes(model, est, params, count, seed)
        .into_iter()
        .filter(|c| c.feasible)
        .collect();
    samples.sort_by(|a, b| a.score.total_cmp(&b.score));
    samples
        .iter()
        .take(params.refine_top.max(1))
        .map(|c| refine_preshape(model, est, params, c))
        .filter(|c| c.feasible)
        .min_by(|a, b| a.score.total_cmp(&b.score))
}
