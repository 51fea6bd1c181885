//! Self-tests against independent oracles, run by `vtgrasp check`.
//!
//! Every suite returns a [`CheckResult`] instead of panicking so the whole set can be
//! reported in one pass.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DVector, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::{gjk_distance, ConvexHull};
use crate::contact::{build_residuals, data_collection_variant, solve_contact, ContactProblem, SolverOptions};
use crate::grasp_eval::{force_closure, primitive_wrenches, Contact, ContactState, CONE_EDGES};
use crate::kinematics::{FingerChain, HandArmModel, Joint, JointConfig, FINGER_DOF};
use crate::preshape::{plan_preshape, PreshapeParams};
use crate::sdf::{EstimatedSdf, SdfSample, SdfScene, Shape, SignedDistance, TriMesh};
use crate::tactile::{
    squeeze, ClosingParams, ControlCase, FingerController, FingerPhase, GradientContext, StopReason, TactileSample,
    PRESSURE_THRESHOLD,
};
use crate::trajectory::{equalize_durations, plan_finger_trajectory, FingerTrajectory, TrajectoryLimits};
use crate::{Pose, Vec3, CONTROL_RATE_HZ};

pub mod oracle;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(name: &'static str, body: impl FnOnce() -> (bool, String)) -> CheckResult {
    let t = Instant::now();
    let (passed, detail) = body();
    CheckResult {
        name,
        passed,
        detail,
        elapsed: t.elapsed(),
    }
}

/// Every suite, in a fixed order.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    vec![
        jacobians(100, seed),
        sdf_oracles(seed),
        gjk_oracle(seed),
        alpha_schedule(5, seed),
        controller_state_machine(),
        trajectories(100, seed),
        squeeze_deltas(seed),
        force_closure_oracle(seed),
    ]
}

const FD_STEP: f64 = 1e-6;
const JACOBIAN_TOLERANCE: f64 = 1e-4;

fn random_config(model: &HandArmModel, rng: &mut impl Rng) -> JointConfig {
    let values = model.lower().iter().zip(model.upper()).map(|(&lo, &hi)| rng.gen_range(lo..=hi)).collect();
    JointConfig::new(values, model.arm_dof())
}

/// Largest relative error between two equally sized matrices (column-major slices), with
/// a floor of 1% of the largest analytic entry.
fn matrix_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-2 * scale).max(1e-12);
    analytic.iter().zip(numeric).map(|(&a, &b)| oracle::relative_error(a, b, floor)).fold(0.0, f64::max)
}

/// Fingertip position, fingertip normal and contact-residual Jacobians against central
/// differences at `configs` random configurations.
pub fn jacobians(configs: usize, seed: u64) -> CheckResult {
    timed("jacobians", || {
        let model = HandArmModel::default_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut pos_err, mut normal_err) = (0.0f64, 0.0f64);
        for _ in 0..configs {
            let q = random_config(&model, &mut rng);
            for f in 0..model.finger_count() {
                let s = model.fingertip_state(&q, f).unwrap();
                let mut dp = Vec::with_capacity(3 * model.dof());
                let mut dn = Vec::with_capacity(3 * model.dof());
                for c in 0..model.dof() {
                    let (mut qp, mut qm) = (q.clone(), q.clone());
                    qp.values_mut()[c] += FD_STEP;
                    qm.values_mut()[c] -= FD_STEP;
                    let p = (model.fingertip_position(&qp, f).unwrap() - model.fingertip_position(&qm, f).unwrap())
                        / (2.0 * FD_STEP);
                    let n = (model.fingertip_normal(&qp, f).unwrap() - model.fingertip_normal(&qm, f).unwrap())
                        / (2.0 * FD_STEP);
                    dp.extend(p.iter());
                    dn.extend(n.iter());
                }
                pos_err = pos_err.max(matrix_error(s.position_jacobian.as_slice(), &dp));
                normal_err = normal_err.max(matrix_error(s.normal_jacobian.as_slice(), &dn));
            }
        }

        let center = Vec3::new(0.5, 0.0, 0.25);
        let est = EstimatedSdf::exact(SdfScene::sphere(0.05, center));
        let q0 = JointConfig::from_parts(&[0.0, 0.6, 0.0, -1.4, 0.0, 0.9, 0.0], &vec![0.1; model.hand_dof()]);
        let problem = ContactProblem::new(&model, &est, &q0).unwrap();
        let mut residual_err = 0.0f64;
        for _ in 0..configs {
            let q: Vec<f64> = model.hand_lower().iter().zip(model.hand_upper()).map(|(&lo, &hi)| rng.gen_range(lo..=hi)).collect();
            let p: Vec<Vec3> = (0..model.finger_count())
                .map(|_| center + Vec3::from_fn(|_, _| rng.gen_range(-0.1..0.1)))
                .collect();
            let alpha = rng.gen_range(0.0..1.0);
            let analytic = build_residuals(&problem, &q, &p, alpha).unwrap().jacobian;
            let m = q.len();
            let mut numeric = Vec::with_capacity(analytic.len());
            for c in 0..analytic.ncols() {
                let (mut qp, mut qm) = (q.clone(), q.clone());
                let (mut pp, mut pm) = (p.clone(), p.clone());
                if c < m {
                    qp[c] += FD_STEP;
                    qm[c] -= FD_STEP;
                } else {
                    let (i, k) = ((c - m) / 3, (c - m) % 3);
                    pp[i][k] += FD_STEP;
                    pm[i][k] -= FD_STEP;
                }
                let rp = build_residuals(&problem, &qp, &pp, alpha).unwrap().values;
                let rm = build_residuals(&problem, &qm, &pm, alpha).unwrap().values;
                numeric.extend(((rp - rm) / (2.0 * FD_STEP)).iter());
            }
            residual_err = residual_err.max(matrix_error(analytic.as_slice(), &numeric));
        }
        let worst = pos_err.max(normal_err).max(residual_err);
        (
            worst <= JACOBIAN_TOLERANCE,
            format!(
                "max relative error: position {pos_err:.2e}, normal {normal_err:.2e}, residual {residual_err:.2e} over {configs} configs (tol {JACOBIAN_TOLERANCE:.0e})"
            ),
        )
    })
}

/// Icosphere mesh against the analytic sphere, and a posed box against its densely
/// sampled surface near the corners.
pub fn sdf_oracles(seed: u64) -> CheckResult {
    timed("sdf_oracles", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 0.05;
        let center = Vec3::new(0.5, 0.0, 0.25);
        let pose = Pose::translation(center.x, center.y, center.z);
        let mesh = SdfScene::new(Shape::Mesh(Arc::new(TriMesh::icosphere(r, 3))), pose, 1.0).unwrap();
        let sphere = SdfScene::sphere(r, center);
        let mut mesh_err = 0.0f64;
        let mut n = 0;
        while n < 1000 {
            let d = Vec3::from_fn(|_, _| rng.gen_range(-2.0 * r..2.0 * r));
            if d.norm() > 2.0 * r {
                continue;
            }
            mesh_err = mesh_err.max((mesh.distance(&(center + d)) - sphere.distance(&(center + d))).abs());
            n += 1;
        }

        let h = Vec3::new(0.03, 0.03, 0.05);
        let rotation = UnitQuaternion::from_euler_angles(0.3, -0.2, 0.7);
        let box_pose = Pose::from_parts(center.into(), rotation);
        let boxed = SdfScene::cuboid(h, box_pose);
        let samples = oracle::box_surface_grid(&h, 200);
        let mut box_err = 0.0f64;
        for i in 0..300 {
            let corner = Vec3::from_fn(|k, _| if rng.gen_bool(0.5) { h[k] } else { -h[k] });
            // Two thirds outside the corner region, one third just inside it.
            let local = if i % 3 < 2 {
                corner + corner.map(|c| c.signum() * rng.gen_range(0.002..0.03))
            } else {
                corner - corner.map(|c| c.signum() * rng.gen_range(0.002..0.01))
            };
            let expected = oracle::box_sdf_from_samples(&samples, &h, &local);
            box_err = box_err.max((boxed.distance(&(box_pose * nalgebra::Point3::from(local)).coords) - expected).abs());
        }
        let passed = mesh_err <= 0.02 * r && box_err <= 1e-4;
        (
            passed,
            format!(
                "icosphere max |err| {:.3e} m ({:.2}% of r, tol 2%); box corner max |err| {box_err:.2e} m (tol 1e-4)",
                mesh_err,
                100.0 * mesh_err / r
            ),
        )
    })
}

fn random_polytope(rng: &mut impl Rng, radius: f64) -> ConvexHull {
    loop {
        let n = rng.gen_range(4..=20);
        let v: Vec<Vec3> = (0..n).map(|_| Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0)) * radius).collect();
        if let Ok(h) = ConvexHull::new(v) {
            return h;
        }
    }
}

fn random_pose(rng: &mut impl Rng, spread: f64) -> Pose {
    let t = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0)) * spread;
    let axis = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    Pose::new(t, axis.normalize() * rng.gen_range(0.0..PI))
}

/// GJK distance against the brute-force polytope oracle on disjoint pairs, and
/// intersection on constructed overlaps.
pub fn gjk_oracle(seed: u64) -> CheckResult {
    timed("gjk", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut misses = 0;
        for _ in 0..200 {
            let gap = 10f64.powf(rng.gen_range(-3.0..0.0));
            let a = random_polytope(&mut rng, 1.0);
            let b = random_polytope(&mut rng, 1.0);
            let max_a = a.vertices().iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
            let min_b = b.vertices().iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
            let world = random_pose(&mut rng, 2.0);
            let pa = world * Pose::translation(-max_a - gap / 2.0, 0.0, 0.0);
            let pb = world * Pose::translation(-min_b + gap / 2.0, 0.0, 0.0);
            let wa: Vec<Vec3> = a.world_vertices(&pa).collect();
            let wb: Vec<Vec3> = b.world_vertices(&pb).collect();
            let expected = oracle::polytope_distance(&wa, &wb);
            let r = gjk_distance(&a, &pa, &b, &pb);
            if r.intersecting {
                misses += 1;
            }
            worst = worst.max((r.distance - expected).abs());
        }
        let mut detected = 0;
        for _ in 0..50 {
            let a = random_polytope(&mut rng, 1.0);
            let b = random_polytope(&mut rng, 1.0);
            let pa = random_pose(&mut rng, 2.0);
            // A vertex of b sits on a's vertex centroid, strictly inside a.
            let centroid = a.vertices().iter().sum::<Vec3>() / a.vertices().len() as f64;
            let inside = pa * nalgebra::Point3::from(centroid);
            let rot = random_pose(&mut rng, 0.0).rotation;
            let pb = Pose::from_parts((inside.coords - rot * b.vertices()[0]).into(), rot);
            if gjk_distance(&a, &pa, &b, &pb).intersecting {
                detected += 1;
            }
        }
        (
            worst <= 1e-6 && misses == 0 && detected == 50,
            format!("200 disjoint pairs: max |err| {worst:.2e} (tol 1e-6), {misses} false hits; overlaps detected {detected}/50"),
        )
    })
}

/// The solver's recorded alpha is `1/j^2` at every iteration, and zero throughout the
/// data-collection variant, on sphere and box preshapes.
pub fn alpha_schedule(seeds: u64, seed: u64) -> CheckResult {
    timed("alpha_schedule", || {
        let model = HandArmModel::default_model();
        let center = Vec3::new(0.5, 0.0, 0.25);
        let scenes = [
            SdfScene::sphere(0.05, center),
            SdfScene::cuboid(Vec3::new(0.03, 0.03, 0.05), Pose::translation(center.x, center.y, center.z)),
        ];
        let (mut iterations, mut bad, mut solves) = (0, 0, 0);
        for scene in scenes {
            let est = EstimatedSdf::exact(scene);
            for s in seed..seed + seeds {
                let Some(cand) = plan_preshape(&model, &est, &PreshapeParams::default(), 32, s) else { continue };
                let problem = ContactProblem::new(&model, &est, &cand.q0).unwrap();
                let sol = solve_contact(&problem, &SolverOptions::default());
                let zero = data_collection_variant(&problem, &SolverOptions::default());
                solves += 1;
                iterations += sol.trace.len() + zero.trace.len();
                let scheduled = sol
                    .trace
                    .iter()
                    .enumerate()
                    .all(|(k, row)| row.iteration == k + 1 && row.alpha == 1.0 / ((k + 1) as f64).powi(2));
                if sol.trace.is_empty() || !scheduled || zero.trace.iter().any(|r| r.alpha != 0.0) {
                    bad += 1;
                }
            }
        }
        (
            solves > 0 && bad == 0,
            format!("{solves} paired solves, {iterations} iterations, {bad} schedule violations"),
        )
    })
}

/// One finger whose first joint slides the pad down from 10 cm above `z = 0`.
fn plunger() -> HandArmModel {
    let locked = |name: &str| Joint::revolute(name, Vec3::x(), Pose::identity(), 0.0, 0.0);
    let finger = FingerChain {
        name: "plunger".into(),
        thumb: false,
        joints: vec![
            Joint::prismatic("slide", -Vec3::z(), Pose::translation(0.0, 0.0, 0.1), 0.0, 0.2),
            locked("l1"),
            locked("l2"),
            locked("l3"),
        ],
        tip_offset: Pose::identity(),
        tip_normal: -Vec3::z(),
    };
    HandArmModel::new(vec![], Pose::identity(), None, vec![finger]).expect("plunger model is valid")
}

struct Flat;

impl SignedDistance for Flat {
    fn query(&self, _: &Vec3) -> SdfSample {
        SdfSample {
            distance: 0.1,
            gradient: Vec3::zeros(),
        }
    }
    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }
    fn half_diagonal(&self) -> f64 {
        1.0
    }
}

/// What the control law must do at one tick, derived from the trace alone.
struct Expectation {
    fired: Option<usize>,
    run: usize,
}

fn expectation(trace: &[f64], k: usize, threshold: f64, required: usize) -> Expectation {
    let mut run = 0;
    let mut fired = None;
    for (i, &p) in trace.iter().enumerate().take(k + 1) {
        run = if p >= threshold { run + 1 } else { 0 };
        if fired.is_none() && run >= required {
            fired = Some(i);
        }
    }
    Expectation { fired, run }
}

/// Runs one controller over a synthesized pressure trace (zero pressure after it ends)
/// and returns the first violated rule.
fn audit_trace(
    trace: &[f64],
    budget: usize,
    stop_on_contact: bool,
    est: &dyn SignedDistance,
    model: &HandArmModel,
    plan: &FingerTrajectory,
    params: &ClosingParams,
) -> Result<(), String> {
    let mut ctrl = FingerController::new(0, params, budget, stop_on_contact);
    let mut q = JointConfig::from_parts(&[], &plan.samples[0]);
    let horizon = trace.len() + plan.ticks() + 64 * (budget + 1);
    let mut completed = 0;
    let mut padded = trace.to_vec();
    padded.resize(horizon + 1, 0.0);
    for k in 1..=horizon {
        let before = ctrl.phase;
        let sample = TactileSample {
            tick: k,
            pressure: padded[k],
        };
        let cmd = {
            let ctx = GradientContext { model, est, q: &q };
            ctrl.step(k, sample, plan, &ctx)
        };
        let e = expectation(&padded, k, params.pressure_threshold, params.consecutive_samples);
        let moved = cmd.delta.iter().any(|d| *d != 0.0);
        let fail = |rule: &str| Err(format!("tick {k}: {rule} (case {}, phase {})", cmd.case, ctrl.phase));
        if ctrl.contact_tick() != e.fired {
            return fail("classifier disagrees with the consecutive-sample rule");
        }
        if moved != matches!(cmd.case, ControlCase::Track | ControlCase::Gradient) {
            return fail("only tracking and gradient commands move");
        }
        if before.is_stopped() {
            if cmd.case != ControlCase::Idle || ctrl.phase != before {
                return fail("stopped phase is not absorbing");
            }
            continue;
        }
        match cmd.case {
            ControlCase::Contact => {
                if !(stop_on_contact && e.fired.is_some() && ctrl.phase == FingerPhase::Stopped(StopReason::Contact)) {
                    return fail("contact case without a fired classifier");
                }
            }
            ControlCase::Track => {
                if k > plan.ticks() || (stop_on_contact && e.fired.is_some()) || cmd.delta != plan.delta(k) {
                    return fail("tracking outside the plan or off the planned increment");
                }
            }
            ControlCase::Gradient => {
                if k <= plan.ticks() || e.fired.is_some() || completed >= budget {
                    return fail("gradient step outside the budget window");
                }
            }
            ControlCase::Wait => {
                if k <= plan.ticks() || e.fired.is_some() || e.run == 0 || completed != budget {
                    return fail("waiting without a pressure run in progress");
                }
            }
            ControlCase::Idle => {
                let ok = match ctrl.phase {
                    FingerPhase::Stopped(StopReason::Contact) => !stop_on_contact && k > plan.ticks() && e.fired.is_some(),
                    FingerPhase::Stopped(StopReason::Budget) => {
                        k > plan.ticks() && e.fired.is_none() && e.run == 0 && completed == budget
                    }
                    _ => false,
                };
                if !ok {
                    return fail("stopped for the wrong reason");
                }
            }
        }
        if let FingerPhase::GradientFollow { steps_taken } = ctrl.phase {
            completed = steps_taken;
        }
        if completed > budget {
            return fail("gradient budget exceeded");
        }
        for (j, d) in cmd.delta.iter().enumerate() {
            q.finger_mut(0)[j] += d;
        }
        if ctrl.phase.is_stopped() {
            return if e.fired.is_none() && completed != budget {
                Err(format!("stopped after {completed} of {budget} gradient steps"))
            } else {
                Ok(())
            };
        }
    }
    Err("controller never stopped".into())
}

/// Control-law rules over every binary pressure trace of length 14 (samples exactly at
/// or just below the threshold), for budgets 0..=2, closed and open loop; plus the
/// vanishing-gradient stop.
pub fn controller_state_machine() -> CheckResult {
    timed("controller", || {
        let model = plunger();
        let plane = EstimatedSdf::exact(SdfScene::plane(Vec3::zeros(), Vec3::z()));
        let params = ClosingParams {
            limits: TrajectoryLimits { v_max: 0.5, a_max: 50.0 },
            gradient_gain: 0.01,
            ..ClosingParams::default()
        };
        let plan = plan_finger_trajectory(0, [0.0; FINGER_DOF], [0.02, 0.0, 0.0, 0.0], &params.limits).unwrap();
        let below = PRESSURE_THRESHOLD.next_down();
        let len = 14;
        let mut traces = 0;
        let mut first_failure = None;
        'outer: for bits in 0u32..(1 << len) {
            let mut trace = vec![0.0];
            trace.extend((0..len).map(|i| if bits >> i & 1 == 1 { PRESSURE_THRESHOLD } else { below }));
            for budget in 0..=2 {
                for stop_on_contact in [true, false] {
                    traces += 1;
                    if let Err(e) = audit_trace(&trace, budget, stop_on_contact, &plane, &model, &plan, &params) {
                        first_failure = Some(format!("trace {bits:014b} budget {budget} closed {stop_on_contact}: {e}"));
                        break 'outer;
                    }
                }
            }
        }

        // Vanishing estimated gradient: stop without moving once the plan is done.
        let mut ctrl = FingerController::new(0, &params, 3, true);
        let q = JointConfig::from_parts(&[], &[0.0; FINGER_DOF]);
        let ctx = GradientContext {
            model: &model,
            est: &Flat,
            q: &q,
        };
        let mut degenerate_ok = false;
        for k in 1..=plan.ticks() + 1 {
            let cmd = ctrl.step(k, TactileSample { tick: k, pressure: 0.0 }, &plan, &ctx);
            if k == plan.ticks() + 1 {
                degenerate_ok = cmd.case == ControlCase::Idle
                    && cmd.delta == [0.0; FINGER_DOF]
                    && ctrl.phase == FingerPhase::Stopped(StopReason::Degenerate);
            }
        }
        let passed = first_failure.is_none() && degenerate_ok;
        let detail = match first_failure {
            Some(f) => f,
            None => format!(
                "{traces} traces audited (threshold {PRESSURE_THRESHOLD} Pa, {} samples); degenerate stop {}",
                params.consecutive_samples,
                if degenerate_ok { "ok" } else { "wrong" }
            ),
        };
        (passed, detail)
    })
}

/// Largest per-tick velocity and acceleration of a sampled trajectory, at rest outside it.
fn sampled_rates(t: &FingerTrajectory) -> (f64, f64) {
    let dt = 1.0 / CONTROL_RATE_HZ;
    let s = &t.samples;
    let at = |k: isize| s[k.clamp(0, s.len() as isize - 1) as usize];
    let (mut v, mut a) = (0.0f64, 0.0f64);
    for k in -1..=s.len() as isize {
        let (p, c, n) = (at(k - 1), at(k), at(k + 1));
        for j in 0..FINGER_DOF {
            v = v.max(((n[j] - c[j]) / dt).abs());
            a = a.max(((n[j] - 2.0 * c[j] + p[j]) / (dt * dt)).abs());
        }
    }
    (v, a)
}

/// Trapezoid durations against the closed form, equalization to the same tick count,
/// and velocity/acceleration bounds at every tick, over random plans.
pub fn trajectories(plans: usize, seed: u64) -> CheckResult {
    timed("trajectories", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut duration_err, mut bound_excess, mut endpoint_err) = (0.0f64, 0.0f64, 0.0f64);
        let mut tick_mismatch = 0;
        for _ in 0..plans {
            let limits = TrajectoryLimits {
                v_max: rng.gen_range(0.2..3.0),
                a_max: rng.gen_range(0.5..20.0),
            };
            let start: [f64; FINGER_DOF] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let fingers: Vec<FingerTrajectory> = (0..4)
                .map(|f| {
                    let goal: [f64; FINGER_DOF] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
                    plan_finger_trajectory(f, start, goal, &limits).unwrap()
                })
                .collect();
            for t in &fingers {
                let span = (0..FINGER_DOF).map(|j| (t.goal[j] - t.start[j]).abs()).fold(0.0, f64::max);
                let expected = oracle::trapezoid_time(span, limits.v_max, limits.a_max);
                duration_err = duration_err.max((t.duration - expected).abs());
            }
            let longest = fingers.iter().map(|t| t.duration).fold(0.0, f64::max);
            let ticks = (longest * CONTROL_RATE_HZ - 1e-9).ceil() as usize;
            for t in equalize_durations(&fingers) {
                if t.ticks() != ticks || t.duration != longest {
                    tick_mismatch += 1;
                }
                let (v, a) = sampled_rates(&t);
                bound_excess = bound_excess.max(v - limits.v_max).max(a - limits.a_max);
                let end = t.samples[t.ticks()];
                for j in 0..FINGER_DOF {
                    endpoint_err = endpoint_err.max((t.samples[0][j] - t.start[j]).abs()).max((end[j] - t.goal[j]).abs());
                }
            }
        }
        let passed = duration_err <= 1e-12 && tick_mismatch == 0 && bound_excess <= 1e-6 && endpoint_err <= 1e-9;
        (
            passed,
            format!(
                "{plans} four-finger plans: duration err {duration_err:.1e} s, {tick_mismatch} tick mismatches, bound excess {:.1e}, endpoint err {endpoint_err:.1e}",
                bound_excess.max(0.0)
            ),
        )
    })
}

/// Squeeze adds exactly 0.7 rad to non-thumb joints 1..3 and 0.5 rad to the last two
/// thumb joints, clamped at the upper limit, and leaves the rest alone.
pub fn squeeze_deltas(seed: u64) -> CheckResult {
    timed("squeeze", || {
        let model = HandArmModel::default_model();
        let params = ClosingParams::default();
        let (lo, hi) = (model.hand_lower(), model.hand_upper());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violations = 0;
        let mut clamped = 0;
        for i in 0..1000 {
            // Half the draws start near the upper limits so clamping is exercised.
            let q: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| if i % 2 == 0 { rng.gen_range(l..=h) } else { rng.gen_range((h - 0.6).max(l)..=h) })
                .collect();
            let mut out = q.clone();
            squeeze(&model, &mut out, &params);
            for (f, chain) in model.fingers().iter().enumerate() {
                for j in 0..FINGER_DOF {
                    let k = f * FINGER_DOF + j;
                    let amount = match (chain.thumb, j) {
                        (true, 2 | 3) => 0.5,
                        (false, 1..=3) => 0.7,
                        _ => 0.0,
                    };
                    let expected = if amount == 0.0 { q[k] } else { (q[k] + amount).min(hi[k]) };
                    if q[k] + amount > hi[k] {
                        clamped += 1;
                    }
                    if out[k] != expected {
                        violations += 1;
                    }
                }
            }
        }
        (violations == 0, format!("1000 hands, {clamped} clamped joints, {violations} wrong deltas"))
    })
}

fn sphere_contacts(center: Vec3, radius: f64, dirs: &[Vec3]) -> Vec<Contact> {
    dirs.iter()
        .enumerate()
        .map(|(i, d)| {
            let d = d.normalize();
            Contact {
                point: center + d * radius,
                normal: -d,
                finger: i,
            }
        })
        .collect()
}

/// Antipodal closure, single-contact rejection, epsilon against the sampling oracle on
/// tetrahedral contacts, and monotonicity in the friction coefficient.
pub fn force_closure_oracle(seed: u64) -> CheckResult {
    timed("force_closure", || {
        let center = Vec3::new(0.5, 0.0, 0.25);
        let r = 0.05;
        let antipodal = ContactState::new(sphere_contacts(center, r, &[Vec3::x(), -Vec3::x()]), 0.5, center);
        let antipodal_ok = force_closure(&antipodal, CONE_EDGES).is_closure;
        let single = force_closure(&ContactState::new(sphere_contacts(center, r, &[Vec3::x()]), 0.5, center), CONE_EDGES);
        let single_ok = !single.is_closure && single.epsilon == 0.0;

        let tetra = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let state = ContactState::new(sphere_contacts(center, r, &tetra), 0.3, center);
        let quality = force_closure(&state, CONE_EDGES);
        let points: Vec<DVector<f64>> = primitive_wrenches(&state, CONE_EDGES)
            .iter()
            .map(|w| DVector::from_column_slice(w.as_slice()))
            .collect();
        let sampled = oracle::sampled_epsilon(&points, 100_000, seed);
        let tetra_err = (quality.epsilon - sampled).abs();

        let eps: Vec<f64> = [0.1, 0.3, 0.5, 0.8]
            .iter()
            .map(|&mu| force_closure(&ContactState { friction: mu, ..state.clone() }, CONE_EDGES).epsilon)
            .collect();
        let monotone = eps.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let passed = antipodal_ok && single_ok && quality.is_closure && tetra_err <= 1e-6 && monotone;
        (
            passed,
            format!(
                "antipodal {antipodal_ok}, single rejected {single_ok}, tetrahedral eps {:.6} vs oracle {sampled:.6} (|err| {tetra_err:.1e}), eps over mu 0.1/0.3/0.5/0.8 = {}",
                quality.epsilon,
                eps.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join("/")
            ),
        )
    })
}
