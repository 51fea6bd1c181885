//! Closing the hand under tactile feedback.
//!
//! Each finger tracks its planned trajectory and stops as soon as the fingertip
//! pressure classifier fires. A finger that reaches the end of its plan without contact
//! follows the estimated-SDF gradient for a small budget of extra steps. When every
//! finger has stopped the squeeze heuristic tightens the grasp.
//!
//! The true scene is only ever read through [`simulate_pressure`] (and the disturbance
//! bookkeeping); the controller itself sees the estimate and the pressure samples.

use std::fmt;

use serde::{Deserialize, Serialize};

use nalgebra::Translation3;

use crate::kinematics::{HandArmModel, JointConfig, FINGER_DOF};
use crate::preshape::{palm_ik, PreshapeParams};
use crate::sdf::{SdfScene, SignedDistance};
use crate::trajectory::{equalize_durations, plan_finger_trajectory, FingerJoints, FingerTrajectory, TrajectoryLimits};
use crate::{Error, Result, CONTROL_RATE_HZ};

pub const PRESSURE_THRESHOLD: f64 = 365.0;
pub const CONSECUTIVE_SAMPLES: usize = 10;
/// Pa per meter of fingertip penetration.
pub const SENSOR_STIFFNESS: f64 = 1e6;
pub const GRADIENT_GAIN: f64 = 1.0;
pub const GRADIENT_BUDGET: usize = 1;
/// Below this estimated-SDF gradient norm the gradient step is uninformative.
pub const DEGENERATE_GRADIENT: f64 = 1e-8;
pub const SQUEEZE_FINGER: f64 = 0.7;
pub const SQUEEZE_THUMB: f64 = 0.5;

/// Closing strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Planned trajectories, tactile stops, gradient follow.
    Ours,
    /// As `Ours` with a zero gradient budget.
    NoGradient,
    /// Planned trajectories run to the end regardless of touch; the classifier only
    /// records contacts.
    OpenLoopB5,
    /// No contact solve: all flexion joints close at equal velocity until touch or limits.
    HeuristicB1,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ours, Variant::NoGradient, Variant::OpenLoopB5, Variant::HeuristicB1];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ours => "ours",
            Variant::NoGradient => "no_gradient",
            Variant::OpenLoopB5 => "open_loop_b5",
            Variant::HeuristicB1 => "heuristic_b1",
        }
    }

    /// Whether the variant needs a contact solution to plan toward.
    pub fn uses_contact_solve(self) -> bool {
        self != Variant::HeuristicB1
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant `{s}` (expected one of ours, no_gradient, open_loop_b5, heuristic_b1)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceThresholds {
    /// Largest penetration still scored as undisturbed (m).
    pub tilted: f64,
    /// Largest penetration still scored as tilted (m).
    pub knocked: f64,
    /// Fingertip push past its contact depth that is tolerated (m).
    pub overpush: f64,
}

impl Default for DisturbanceThresholds {
    fn default() -> Self {
        DisturbanceThresholds {
            tilted: 0.003,
            knocked: 0.010,
            overpush: 0.002,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosingParams {
    pub pressure_threshold: f64,
    pub consecutive_samples: usize,
    pub sensor_stiffness: f64,
    /// Constant offset added to every raw reading; removed by taring.
    pub ambient_pressure: f64,
    /// Extra gradient steps after the plan (`k̄`).
    pub gradient_budget: usize,
    pub gradient_gain: f64,
    pub limits: TrajectoryLimits,
    pub squeeze_finger: f64,
    pub squeeze_thumb: f64,
    /// Hard cap on closing ticks.
    pub max_ticks: usize,
    /// The heuristic close first advances the palm until the nearest fingertip is this
    /// far from the estimated surface (m).
    pub heuristic_margin: f64,
    pub disturbance: DisturbanceThresholds,
}

impl Default for ClosingParams {
    fn default() -> Self {
        ClosingParams {
            pressure_threshold: PRESSURE_THRESHOLD,
            consecutive_samples: CONSECUTIVE_SAMPLES,
            sensor_stiffness: SENSOR_STIFFNESS,
            ambient_pressure: 0.0,
            gradient_budget: GRADIENT_BUDGET,
            gradient_gain: GRADIENT_GAIN,
            limits: TrajectoryLimits::default(),
            squeeze_finger: SQUEEZE_FINGER,
            squeeze_thumb: SQUEEZE_THUMB,
            max_ticks: 3000,
            heuristic_margin: 0.005,
            disturbance: DisturbanceThresholds::default(),
        }
    }
}

impl ClosingParams {
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.pressure_threshold, "pressure_threshold")?;
        positive(self.sensor_stiffness, "sensor_stiffness")?;
        positive(self.gradient_gain, "gradient_gain")?;
        if self.consecutive_samples == 0 {
            return Err(Error::Config("consecutive_samples must be at least 1".into()));
        }
        if !self.heuristic_margin.is_finite() {
            return Err(Error::Config("heuristic_margin must be finite".into()));
        }
        if !self.ambient_pressure.is_finite() || !self.squeeze_finger.is_finite() || !self.squeeze_thumb.is_finite() {
            return Err(Error::Config("pressure offset and squeeze amounts must be finite".into()));
        }
        let d = &self.disturbance;
        if !(d.tilted >= 0.0 && d.knocked >= d.tilted && d.overpush >= 0.0) {
            return Err(Error::Config("disturbance thresholds must satisfy 0 <= tilted <= knocked".into()));
        }
        Ok(())
    }
}

/// Tared fingertip pressure at one control tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TactileSample {
    pub tick: usize,
    /// Pa, never negative.
    pub pressure: f64,
}

/// Raw fingertip pressure from the true scene: `k_p * max(0, -sdf(tip))`.
pub fn simulate_pressure(
    scene_true: &SdfScene,
    model: &HandArmModel,
    q: &JointConfig,
    finger: usize,
    stiffness: f64,
) -> Result<f64> {
    let tip = model.fingertip_position(q, finger)?;
    Ok(stiffness * (-scene_true.sdf_query(&tip).distance).max(0.0))
}

/// Fires once `required` successive samples reach the threshold; stays fired.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactClassifier {
    pub threshold: f64,
    pub required: usize,
    run: usize,
    fired_at: Option<usize>,
}

impl ContactClassifier {
    pub fn new(threshold: f64, required: usize) -> Self {
        ContactClassifier {
            threshold,
            required,
            run: 0,
            fired_at: None,
        }
    }

    /// Feeds one sample; returns whether the classifier has fired.
    pub fn update(&mut self, sample: TactileSample) -> bool {
        if self.fired_at.is_some() {
            return true;
        }
        if sample.pressure >= self.threshold {
            self.run += 1;
        } else {
            self.run = 0;
        }
        if self.run >= self.required {
            self.fired_at = Some(sample.tick);
        }
        self.fired_at.is_some()
    }

    pub fn fired_at(&self) -> Option<usize> {
        self.fired_at
    }

    /// Current number of successive samples at or above the threshold.
    pub fn run_length(&self) -> usize {
        self.run
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Contact,
    /// Plan and gradient budget used up without contact.
    Budget,
    /// The estimated-SDF gradient vanished during gradient following.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FingerPhase {
    TrackingPlan,
    GradientFollow { steps_taken: usize },
    Stopped(StopReason),
}

impl FingerPhase {
    pub fn is_stopped(&self) -> bool {
        matches!(self, FingerPhase::Stopped(_))
    }
}

impl fmt::Display for FingerPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FingerPhase::TrackingPlan => f.write_str("tracking"),
            FingerPhase::GradientFollow { steps_taken } => write!(f, "gradient_{steps_taken}"),
            FingerPhase::Stopped(StopReason::Contact) => f.write_str("stopped_contact"),
            FingerPhase::Stopped(StopReason::Budget) => f.write_str("stopped_budget"),
            FingerPhase::Stopped(StopReason::Degenerate) => f.write_str("stopped_degenerate"),
        }
    }
}

/// Which branch of the control law produced a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlCase {
    /// Classifier fired: hold.
    Contact,
    /// `k <= K`: planned increment.
    Track,
    /// `K < k`, budget left: estimated-SDF gradient step.
    Gradient,
    /// Out of plan and budget while a pressure run is still building: hold and listen.
    Wait,
    /// Already stopped.
    Idle,
}

impl fmt::Display for ControlCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlCase::Contact => "contact",
            ControlCase::Track => "track",
            ControlCase::Gradient => "gradient",
            ControlCase::Wait => "wait",
            ControlCase::Idle => "idle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Command {
    pub delta: FingerJoints,
    pub case: ControlCase,
}

impl Command {
    fn hold(case: ControlCase) -> Self {
        Command {
            delta: [0.0; FINGER_DOF],
            case,
        }
    }
}

/// What a gradient step needs to know about the current state.
pub struct GradientContext<'a> {
    pub model: &'a HandArmModel,
    pub est: &'a dyn SignedDistance,
    pub q: &'a JointConfig,
}

/// Per-finger controller state.
#[derive(Clone, Debug)]
pub struct FingerController {
    pub finger: usize,
    pub phase: FingerPhase,
    pub classifier: ContactClassifier,
    /// Gradient steps allowed after the plan.
    pub budget: usize,
    pub gain: f64,
    /// Per-joint motion cap per tick.
    pub max_step: f64,
    /// False for the open-loop baseline: contacts are recorded but never stop the finger.
    pub stop_on_contact: bool,
    /// Part of the current gradient step not yet executed.
    pending: Option<FingerJoints>,
}

impl FingerController {
    pub fn new(finger: usize, params: &ClosingParams, budget: usize, stop_on_contact: bool) -> Self {
        FingerController {
            finger,
            phase: FingerPhase::TrackingPlan,
            classifier: ContactClassifier::new(params.pressure_threshold, params.consecutive_samples),
            budget,
            gain: params.gradient_gain,
            max_step: params.limits.per_tick_step(),
            stop_on_contact,
            pending: None,
        }
    }

    pub fn contact_tick(&self) -> Option<usize> {
        self.classifier.fired_at()
    }

    /// One control tick `k >= 1` given the tactile sample taken before moving.
    pub fn step(&mut self, k: usize, sample: TactileSample, plan: &FingerTrajectory, ctx: &GradientContext) -> Command {
        let fired = self.classifier.update(sample);
        if self.phase.is_stopped() {
            return Command::hold(ControlCase::Idle);
        }
        if fired && self.stop_on_contact {
            self.phase = FingerPhase::Stopped(StopReason::Contact);
            return Command::hold(ControlCase::Contact);
        }
        if k <= plan.ticks() {
            return Command {
                delta: plan.delta(k),
                case: ControlCase::Track,
            };
        }
        if fired {
            // Open loop: the plan is over and contact was recorded along the way.
            self.phase = FingerPhase::Stopped(StopReason::Contact);
            return Command::hold(ControlCase::Idle);
        }
        let steps_taken = match self.phase {
            FingerPhase::GradientFollow { steps_taken } => steps_taken,
            _ => 0,
        };
        if self.pending.is_none() && steps_taken >= self.budget {
            if self.classifier.run_length() > 0 {
                self.phase = FingerPhase::GradientFollow { steps_taken };
                return Command::hold(ControlCase::Wait);
            }
            self.phase = FingerPhase::Stopped(StopReason::Budget);
            return Command::hold(ControlCase::Idle);
        }
        self.phase = FingerPhase::GradientFollow { steps_taken };
        let remaining = match self.pending {
            Some(r) => r,
            None => match gradient_step(ctx, self.finger, self.gain) {
                Some(step) => step,
                None => {
                    self.phase = FingerPhase::Stopped(StopReason::Degenerate);
                    return Command::hold(ControlCase::Idle);
                }
            },
        };
        let largest = remaining.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // A sliver left over from rounding is folded into this tick.
        let scale = if largest > self.max_step * (1.0 + 1e-9) { self.max_step / largest } else { 1.0 };
        let delta: FingerJoints = std::array::from_fn(|j| remaining[j] * scale);
        if scale < 1.0 {
            self.pending = Some(std::array::from_fn(|j| remaining[j] - delta[j]));
        } else {
            self.pending = None;
            self.phase = FingerPhase::GradientFollow {
                steps_taken: steps_taken + 1,
            };
        }
        Command {
            delta,
            case: ControlCase::Gradient,
        }
    }
}

/// `-gain * J^T grad sdf_est(tip)` over the finger's own joints; `None` when the
/// estimated gradient is (near) zero.
pub fn gradient_step(ctx: &GradientContext, finger: usize, gain: f64) -> Option<FingerJoints> {
    let state = ctx.model.fingertip_state(ctx.q, finger).ok()?;
    let g = ctx.est.query(&state.position).gradient;
    if !(g.norm() >= DEGENERATE_GRADIENT) {
        return None;
    }
    let base = ctx.model.finger_offset(finger);
    Some(std::array::from_fn(|j| -gain * state.position_jacobian.column(base + j).dot(&g)))
}

/// Adds the squeeze to every flexion joint but the first of each finger and to the last
/// two thumb joints, clamped to limits.
pub fn squeeze(model: &HandArmModel, q_hand: &mut [f64], params: &ClosingParams) {
    let lower = model.hand_lower();
    let upper = model.hand_upper();
    for (f, chain) in model.fingers().iter().enumerate() {
        let base = f * FINGER_DOF;
        let (joints, amount) = if chain.thumb {
            (FINGER_DOF - 2..FINGER_DOF, params.squeeze_thumb)
        } else {
            (1..FINGER_DOF, params.squeeze_finger)
        };
        for j in joints {
            let k = base + j;
            q_hand[k] = (q_hand[k] + amount).clamp(lower[k], upper[k]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Disturbance {
    None,
    Tilted,
    Knocked,
}

impl Disturbance {
    pub const ALL: [Disturbance; 3] = [Disturbance::None, Disturbance::Tilted, Disturbance::Knocked];

    pub fn name(self) -> &'static str {
        match self {
            Disturbance::None => "none",
            Disturbance::Tilted => "tilted",
            Disturbance::Knocked => "knocked",
        }
    }

    /// 0, 1, 2 for none, tilted, knocked.
    pub fn score(self) -> u8 {
        self as u8
    }

    pub fn from_depth(depth: f64, thresholds: &DisturbanceThresholds) -> Self {
        if depth <= thresholds.tilted {
            Disturbance::None
        } else if depth <= thresholds.knocked {
            Disturbance::Tilted
        } else {
            Disturbance::Knocked
        }
    }
}

impl fmt::Display for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Deepest penetration of any non-fingertip hand link hull vertex into the true object
/// over the trace, together with fingertip over-push: how far a fingertip went past its
/// depth at the contact tick, counted once it exceeds the tolerated amount.
///
/// `q_trace[k]` is the hand configuration after tick `k`; `contact_ticks[f]` indexes it.
pub fn disturbance_depth(
    scene_true: &SdfScene,
    model: &HandArmModel,
    q_arm: &[f64],
    q_trace: &[Vec<f64>],
    contact_ticks: &[Option<usize>],
    thresholds: &DisturbanceThresholds,
) -> Result<f64> {
    let mut deepest = 0.0f64;
    let mut tip_depths = vec![Vec::with_capacity(q_trace.len()); model.finger_count()];
    for hand in q_trace {
        let q = JointConfig::from_parts(q_arm, hand);
        let poses = model.link_poses(&q)?;
        for (link, pose) in model.links().iter().zip(&poses) {
            if !link.kind.is_hand() || link.kind.is_fingertip() {
                continue;
            }
            if let Some(hull) = &link.hull {
                for v in hull.world_vertices(pose) {
                    deepest = deepest.max(-scene_true.sdf_query(&v).distance);
                }
            }
        }
        for (f, depths) in tip_depths.iter_mut().enumerate() {
            let tip = model.fingertip_position(&q, f)?;
            depths.push((-scene_true.sdf_query(&tip).distance).max(0.0));
        }
    }
    for (depths, tick) in tip_depths.iter().zip(contact_ticks) {
        let Some(c) = *tick else { continue };
        if c >= depths.len() {
            continue;
        }
        let push = depths[c..].iter().fold(0.0f64, |m, d| m.max(*d)) - depths[c];
        if push > thresholds.overpush {
            deepest = deepest.max(push);
        }
    }
    Ok(deepest.max(0.0))
}

pub fn disturbance_score(
    scene_true: &SdfScene,
    model: &HandArmModel,
    q_arm: &[f64],
    q_trace: &[Vec<f64>],
    contact_ticks: &[Option<usize>],
    thresholds: &DisturbanceThresholds,
) -> Result<Disturbance> {
    let depth = disturbance_depth(scene_true, model, q_arm, q_trace, contact_ticks, thresholds)?;
    Ok(Disturbance::from_depth(depth, thresholds))
}

/// One finger at one tick, for plotting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TickRow {
    pub tick: usize,
    pub finger: usize,
    pub phase: String,
    pub case: String,
    /// Tared pressure sampled at the start of the tick (Pa).
    pub pressure: f64,
    /// Finger joints after the tick's command.
    pub joints: FingerJoints,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FingerOutcome {
    pub phase: FingerPhase,
    pub contact_tick: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ClosingReport {
    pub variant: Variant,
    pub fingers: Vec<FingerOutcome>,
    /// Fingers that ended in `Stopped(Contact)`.
    pub fingertips_in_contact: usize,
    pub disturbance: Disturbance,
    /// Depth behind the disturbance score (m).
    pub disturbance_depth: f64,
    /// Plan length `K` (the longest plan for the heuristic close).
    pub plan_ticks: usize,
    /// Ticks until every finger stopped.
    pub ticks: usize,
    /// Arm joints during the close.
    pub q_arm: Vec<f64>,
    /// Hand joints when the last finger stopped, before the squeeze.
    pub q_hand_contact: Vec<f64>,
    /// Hand joints after the squeeze.
    pub q_hand: Vec<f64>,
    pub trace: Vec<TickRow>,
}

impl ClosingReport {
    pub fn contact_ticks(&self) -> Vec<Option<usize>> {
        self.fingers.iter().map(|f| f.contact_tick).collect()
    }
}

/// Equal-velocity closing of every flexion joint toward its upper limit.
fn heuristic_plans(model: &HandArmModel, q0: &JointConfig, limits: &TrajectoryLimits) -> Vec<FingerTrajectory> {
    let upper = model.hand_upper();
    let step = limits.per_tick_step();
    (0..model.finger_count())
        .map(|f| {
            let start: FingerJoints = std::array::from_fn(|j| q0.finger(f)[j]);
            let top: FingerJoints = std::array::from_fn(|j| if j == 0 { start[0] } else { upper[f * FINGER_DOF + j].max(start[j]) });
            let ticks = (1..FINGER_DOF)
                .map(|j| ((top[j] - start[j]) / step - 1e-9).ceil().max(0.0) as usize)
                .max()
                .unwrap_or(0);
            let samples = (0..=ticks)
                .map(|k| std::array::from_fn(|j| (start[j] + k as f64 * step).min(top[j])))
                .collect();
            FingerTrajectory::from_samples(f, samples)
        })
        .collect()
}

/// Advances the palm along its approach axis (arm joints only) until the nearest
/// fingertip is `margin` from the estimated surface. The hand joints are unchanged.
pub fn heuristic_approach(
    model: &HandArmModel,
    est: &dyn SignedDistance,
    q0: &JointConfig,
    margin: f64,
) -> Result<JointConfig> {
    let ik = PreshapeParams::default();
    let mut q = q0.clone();
    for _ in 0..5 {
        let nearest = (0..model.finger_count())
            .map(|f| model.fingertip_position(&q, f).map(|p| est.distance(&p)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let advance = nearest - margin;
        if advance.abs() < 1e-4 {
            break;
        }
        let target = model.palm_pose(&q)? * Translation3::new(0.0, 0.0, advance);
        palm_ik(model, &mut q, &target, ik.ik_damping, ik.ik_iters);
    }
    Ok(q)
}

/// Plans straight-line, duration-equalized finger trajectories from `q0` to `goal_hand`.
pub fn plan_closing(
    model: &HandArmModel,
    q0: &JointConfig,
    goal_hand: &[f64],
    limits: &TrajectoryLimits,
) -> Result<Vec<FingerTrajectory>> {
    if goal_hand.len() != model.hand_dof() {
        return Err(Error::Dimension {
            expected: model.hand_dof(),
            got: goal_hand.len(),
        });
    }
    let plans = (0..model.finger_count())
        .map(|f| {
            let start: FingerJoints = std::array::from_fn(|j| q0.finger(f)[j]);
            let goal: FingerJoints = std::array::from_fn(|j| goal_hand[f * FINGER_DOF + j]);
            plan_finger_trajectory(f, start, goal, limits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(equalize_durations(&plans))
}

/// Runs the closing controller for `variant` from `q0` in lockstep at the control rate.
///
/// `goal_hand` is the contact solution's hand configuration; the heuristic close ignores
/// it and may be given `None`. The heuristic close starts with [`heuristic_approach`], so
/// its report carries a different arm configuration.
pub fn close_hand(
    model: &HandArmModel,
    scene_true: &SdfScene,
    est: &dyn SignedDistance,
    q0: &JointConfig,
    goal_hand: Option<&[f64]>,
    variant: Variant,
    params: &ClosingParams,
) -> Result<ClosingReport> {
    params.validate()?;
    model.check_config(q0)?;
    let approached;
    let q0 = if variant == Variant::HeuristicB1 {
        approached = heuristic_approach(model, est, q0, params.heuristic_margin)?;
        &approached
    } else {
        q0
    };
    let plans = match (variant, goal_hand) {
        (Variant::HeuristicB1, _) => heuristic_plans(model, q0, &params.limits),
        (_, Some(goal)) => plan_closing(model, q0, goal, &params.limits)?,
        (_, None) => {
            return Err(Error::InvalidArgument(format!("variant {variant} needs a contact solution")));
        }
    };
    let (budget, stop_on_contact) = match variant {
        Variant::Ours => (params.gradient_budget, true),
        Variant::NoGradient | Variant::HeuristicB1 => (0, true),
        Variant::OpenLoopB5 => (0, false),
    };
    let nf = model.finger_count();
    let mut controllers: Vec<FingerController> =
        (0..nf).map(|f| FingerController::new(f, params, budget, stop_on_contact)).collect();

    let raw = |q: &JointConfig, f: usize| -> Result<f64> {
        Ok(simulate_pressure(scene_true, model, q, f, params.sensor_stiffness)? + params.ambient_pressure)
    };
    let mut q = q0.clone();
    let tare = (0..nf).map(|f| raw(&q, f)).collect::<Result<Vec<_>>>()?;
    let mut q_trace = vec![q.hand().to_vec()];
    let mut trace: Vec<TickRow> = (0..nf)
        .map(|f| TickRow {
            tick: 0,
            finger: f,
            phase: FingerPhase::TrackingPlan.to_string(),
            case: ControlCase::Idle.to_string(),
            pressure: 0.0,
            joints: std::array::from_fn(|j| q.finger(f)[j]),
        })
        .collect();

    let lower = model.hand_lower().to_vec();
    let upper = model.hand_upper().to_vec();
    let mut ticks = 0;
    for k in 1..=params.max_ticks {
        if controllers.iter().all(|c| c.phase.is_stopped()) {
            break;
        }
        ticks = k;
        let mut commands = Vec::with_capacity(nf);
        let mut pressures = Vec::with_capacity(nf);
        for (f, controller) in controllers.iter_mut().enumerate() {
            let pressure = (raw(&q, f)? - tare[f]).max(0.0);
            let ctx = GradientContext { model, est, q: &q };
            commands.push(controller.step(k, TactileSample { tick: k, pressure }, &plans[f], &ctx));
            pressures.push(pressure);
        }
        for (f, cmd) in commands.iter().enumerate() {
            let finger = q.finger_mut(f);
            for j in 0..FINGER_DOF {
                let idx = f * FINGER_DOF + j;
                finger[j] = (finger[j] + cmd.delta[j]).clamp(lower[idx], upper[idx]);
            }
        }
        q_trace.push(q.hand().to_vec());
        for (f, controller) in controllers.iter().enumerate() {
            trace.push(TickRow {
                tick: k,
                finger: f,
                phase: controller.phase.to_string(),
                case: commands[f].case.to_string(),
                pressure: pressures[f],
                joints: std::array::from_fn(|j| q.finger(f)[j]),
            });
        }
    }
    for c in controllers.iter_mut() {
        if !c.phase.is_stopped() {
            c.phase = FingerPhase::Stopped(StopReason::Budget);
        }
    }

    let fingers: Vec<FingerOutcome> = controllers
        .iter()
        .map(|c| FingerOutcome {
            phase: c.phase,
            contact_tick: match c.phase {
                FingerPhase::Stopped(StopReason::Contact) => c.contact_tick(),
                _ => None,
            },
        })
        .collect();
    let contact_ticks: Vec<Option<usize>> = fingers.iter().map(|f| f.contact_tick).collect();
    let depth = disturbance_depth(scene_true, model, q0.arm(), &q_trace, &contact_ticks, &params.disturbance)?;
    let q_hand_contact = q.hand().to_vec();
    let mut q_hand = q_hand_contact.clone();
    squeeze(model, &mut q_hand, params);
    Ok(ClosingReport {
        variant,
        fingertips_in_contact: fingers
            .iter()
            .filter(|f| f.phase == FingerPhase::Stopped(StopReason::Contact))
            .count(),
        fingers,
        disturbance: Disturbance::from_depth(depth, &params.disturbance),
        disturbance_depth: depth,
        plan_ticks: plans.iter().map(|p| p.ticks()).max().unwrap_or(0),
        ticks,
        q_arm: q0.arm().to_vec(),
        q_hand_contact,
        q_hand,
        trace,
    })
}

/// Seconds of closing time for a tick count.
pub fn ticks_to_seconds(ticks: usize) -> f64 {
    ticks as f64 / CONTROL_RATE_HZ
}
