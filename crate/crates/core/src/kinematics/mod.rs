//! Hand-arm kinematic model: fingertip positions, pad normals and their analytic Jacobians.
//!
//! Configuration layout is `[arm joints | finger 0 (4) | finger 1 (4) | ...]`. Every finger
//! has exactly four joints hanging off the palm, and the palm is rigidly attached to the
//! last arm link.

mod description;

pub use description::{
    FingerDescription, HullDescription, JointDescription, JointKindDescription, ModelDescription,
    PalmDescription, PoseDescription, MODEL_FORMAT,
};

use nalgebra::{DVector, Matrix3xX, Matrix6xX, Translation3, UnitQuaternion};

use crate::collision::ConvexHull;
use crate::{Error, Pose, Result, Vec3};

/// Joints per finger.
pub const FINGER_DOF: usize = 4;

const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// A single joint plus the rigid link that moves with it.
#[derive(Clone, Debug)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    /// Unit axis expressed in the joint frame.
    pub axis: Vec3,
    /// Parent frame to joint frame, applied before the joint motion.
    pub offset: Pose,
    pub lower: f64,
    pub upper: f64,
    /// Geometry of the link driven by this joint, in the post-motion joint frame.
    pub hull: Option<ConvexHull>,
}

impl Joint {
    pub fn revolute(name: impl Into<String>, axis: Vec3, offset: Pose, lower: f64, upper: f64) -> Self {
        Joint {
            name: name.into(),
            kind: JointKind::Revolute,
            axis,
            offset,
            lower,
            upper,
            hull: None,
        }
    }

    pub fn prismatic(name: impl Into<String>, axis: Vec3, offset: Pose, lower: f64, upper: f64) -> Self {
        Joint {
            kind: JointKind::Prismatic,
            ..Joint::revolute(name, axis, offset, lower, upper)
        }
    }

    pub fn with_hull(mut self, hull: ConvexHull) -> Self {
        self.hull = Some(hull);
        self
    }

    fn motion(&self, value: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(self.axis * value),
            ),
            JointKind::Prismatic => Pose::from_parts(
                Translation3::from(self.axis * value),
                UnitQuaternion::identity(),
            ),
        }
    }
}

/// One four-joint finger.
#[derive(Clone, Debug)]
pub struct FingerChain {
    pub name: String,
    pub thumb: bool,
    pub joints: Vec<Joint>,
    /// Last joint frame to the fingertip frame; its origin is the pad center point.
    pub tip_offset: Pose,
    /// Outward pad normal in the fingertip frame.
    pub tip_normal: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkKind {
    Arm(usize),
    Palm,
    Finger { finger: usize, joint: usize },
}

impl LinkKind {
    pub fn is_fingertip(&self) -> bool {
        matches!(self, LinkKind::Finger { joint, .. } if *joint == FINGER_DOF - 1)
    }

    pub fn is_hand(&self) -> bool {
        !matches!(self, LinkKind::Arm(_))
    }
}

#[derive(Clone, Debug)]
pub struct Link {
    pub name: String,
    pub kind: LinkKind,
    pub parent: Option<usize>,
    pub hull: Option<ConvexHull>,
}

/// Immutable hand-arm model.
#[derive(Clone, Debug)]
pub struct HandArmModel {
    arm: Vec<Joint>,
    palm_offset: Pose,
    palm_hull: Option<ConvexHull>,
    fingers: Vec<FingerChain>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    links: Vec<Link>,
}

/// Joint values for the full model, `[q_A | q_H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointConfig {
    values: DVector<f64>,
    arm_dof: usize,
}

impl JointConfig {
    pub fn new(values: Vec<f64>, arm_dof: usize) -> Self {
        assert!(arm_dof <= values.len());
        JointConfig {
            values: DVector::from_vec(values),
            arm_dof,
        }
    }

    pub fn from_parts(arm: &[f64], hand: &[f64]) -> Self {
        let mut v = arm.to_vec();
        v.extend_from_slice(hand);
        JointConfig::new(v, arm.len())
    }

    pub fn zeros(model: &HandArmModel) -> Self {
        JointConfig::new(vec![0.0; model.dof()], model.arm_dof())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn arm_dof(&self) -> usize {
        self.arm_dof
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn arm(&self) -> &[f64] {
        &self.values.as_slice()[..self.arm_dof]
    }

    pub fn hand(&self) -> &[f64] {
        &self.values.as_slice()[self.arm_dof..]
    }

    pub fn hand_mut(&mut self) -> &mut [f64] {
        let n = self.arm_dof;
        &mut self.values.as_mut_slice()[n..]
    }

    pub fn finger(&self, finger: usize) -> &[f64] {
        let s = self.arm_dof + finger * FINGER_DOF;
        &self.values.as_slice()[s..s + FINGER_DOF]
    }

    pub fn finger_mut(&mut self, finger: usize) -> &mut [f64] {
        let s = self.arm_dof + finger * FINGER_DOF;
        &mut self.values.as_mut_slice()[s..s + FINGER_DOF]
    }

    pub fn set_hand(&mut self, hand: &[f64]) {
        self.hand_mut().copy_from_slice(hand);
    }

    pub fn within_bounds(&self, model: &HandArmModel) -> bool {
        self.values
            .iter()
            .zip(model.lower.iter().zip(&model.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp_to_bounds(&mut self, model: &HandArmModel) {
        for (v, (lo, hi)) in self.values.iter_mut().zip(model.lower.iter().zip(&model.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// World-frame data for one moving joint, used to build geometric Jacobians.
#[derive(Clone, Copy, Debug)]
struct AxisFrame {
    dof: usize,
    kind: JointKind,
    origin: Vec3,
    axis: Vec3,
}

/// Fingertip position, pad normal and both Jacobians, evaluated at one configuration.
#[derive(Clone, Debug)]
pub struct FingertipState {
    pub position: Vec3,
    pub normal: Vec3,
    /// 3 x dof.
    pub position_jacobian: Matrix3xX<f64>,
    /// 3 x dof.
    pub normal_jacobian: Matrix3xX<f64>,
}

impl HandArmModel {
    pub fn new(
        arm: Vec<Joint>,
        palm_offset: Pose,
        palm_hull: Option<ConvexHull>,
        fingers: Vec<FingerChain>,
    ) -> Result<Self> {
        let mut arm = arm;
        let mut fingers = fingers;
        if fingers.is_empty() {
            return Err(Error::Model("model needs at least one finger".into()));
        }
        for j in arm.iter_mut() {
            normalize_axis(&mut j.axis, &j.name)?;
        }
        for f in fingers.iter_mut() {
            if f.joints.len() != FINGER_DOF {
                return Err(Error::Model(format!(
                    "finger `{}` has {} joints, expected {FINGER_DOF}",
                    f.name,
                    f.joints.len()
                )));
            }
            for j in f.joints.iter_mut() {
                normalize_axis(&mut j.axis, &j.name)?;
            }
            normalize_axis(&mut f.tip_normal, &format!("{} tip normal", f.name))?;
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for j in arm.iter().chain(fingers.iter().flat_map(|f| f.joints.iter())) {
            if !(j.lower <= j.upper) {
                return Err(Error::Model(format!(
                    "joint `{}` has lower bound {} above upper bound {}",
                    j.name, j.lower, j.upper
                )));
            }
            lower.push(j.lower);
            upper.push(j.upper);
        }

        let mut links = Vec::new();
        for (k, j) in arm.iter().enumerate() {
            links.push(Link {
                name: j.name.clone(),
                kind: LinkKind::Arm(k),
                parent: k.checked_sub(1),
                hull: j.hull.clone(),
            });
        }
        let palm_index = links.len();
        links.push(Link {
            name: "palm".into(),
            kind: LinkKind::Palm,
            parent: palm_index.checked_sub(1),
            hull: palm_hull.clone(),
        });
        for (fi, f) in fingers.iter().enumerate() {
            for (ji, j) in f.joints.iter().enumerate() {
                let parent = if ji == 0 { palm_index } else { links.len() - 1 };
                links.push(Link {
                    name: j.name.clone(),
                    kind: LinkKind::Finger { finger: fi, joint: ji },
                    parent: Some(parent),
                    hull: j.hull.clone(),
                });
            }
        }

        Ok(HandArmModel {
            arm,
            palm_offset,
            palm_hull,
            fingers,
            lower,
            upper,
            links,
        })
    }

    /// Bundled 7-DoF arm + 16-DoF four-finger hand.
    pub fn default_model() -> Self {
        ModelDescription::from_toml_str(DEFAULT_MODEL_TOML)
            .and_then(|d| d.build())
            .expect("bundled model description is valid")
    }

    pub fn arm_dof(&self) -> usize {
        self.arm.len()
    }

    pub fn hand_dof(&self) -> usize {
        self.fingers.len() * FINGER_DOF
    }

    pub fn dof(&self) -> usize {
        self.arm_dof() + self.hand_dof()
    }

    pub fn finger_count(&self) -> usize {
        self.fingers.len()
    }

    pub fn arm_joints(&self) -> &[Joint] {
        &self.arm
    }

    pub fn fingers(&self) -> &[FingerChain] {
        &self.fingers
    }

    pub fn palm_offset(&self) -> &Pose {
        &self.palm_offset
    }

    pub fn palm_hull(&self) -> Option<&ConvexHull> {
        self.palm_hull.as_ref()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Index of the first configuration entry belonging to `finger`.
    pub fn finger_offset(&self, finger: usize) -> usize {
        self.arm_dof() + finger * FINGER_DOF
    }

    pub fn hand_lower(&self) -> &[f64] {
        &self.lower[self.arm_dof()..]
    }

    pub fn hand_upper(&self) -> &[f64] {
        &self.upper[self.arm_dof()..]
    }

    pub fn check_config(&self, q: &JointConfig) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::Dimension {
                expected: self.dof(),
                got: q.len(),
            });
        }
        if q.arm_dof() != self.arm_dof() {
            return Err(Error::Dimension {
                expected: self.arm_dof(),
                got: q.arm_dof(),
            });
        }
        Ok(())
    }

    fn check_finger(&self, finger: usize) -> Result<()> {
        if finger >= self.fingers.len() {
            return Err(Error::FingerIndex {
                index: finger,
                count: self.fingers.len(),
            });
        }
        Ok(())
    }

    fn arm_chain(&self, q: &JointConfig, frames: Option<&mut Vec<AxisFrame>>) -> Pose {
        let mut pose = Pose::identity();
        let mut frames = frames;
        for (k, j) in self.arm.iter().enumerate() {
            pose *= j.offset;
            if let Some(fr) = frames.as_deref_mut() {
                fr.push(AxisFrame {
                    dof: k,
                    kind: j.kind,
                    origin: pose.translation.vector,
                    axis: pose.rotation * j.axis,
                });
            }
            pose *= j.motion(q.values[k]);
        }
        pose
    }

    pub fn palm_pose(&self, q: &JointConfig) -> Result<Pose> {
        self.check_config(q)?;
        Ok(self.arm_chain(q, None) * self.palm_offset)
    }

    /// Geometric Jacobian of the palm frame, rows `[linear; angular]`, arm columns only
    /// nonzero.
    pub fn palm_jacobian(&self, q: &JointConfig) -> Result<(Pose, Matrix6xX<f64>)> {
        self.check_config(q)?;
        let mut frames = Vec::with_capacity(self.arm_dof());
        let palm = self.arm_chain(q, Some(&mut frames)) * self.palm_offset;
        let p = palm.translation.vector;
        let mut jac = Matrix6xX::zeros(self.dof());
        for f in &frames {
            let (lin, ang) = match f.kind {
                JointKind::Revolute => (f.axis.cross(&(p - f.origin)), f.axis),
                JointKind::Prismatic => (f.axis, Vec3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, f.dof).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, f.dof).copy_from(&ang);
        }
        Ok((palm, jac))
    }

    /// World poses of the four links of `finger` and the fingertip frame, plus the axis
    /// frames of every joint upstream of the fingertip.
    fn finger_chain(
        &self,
        q: &JointConfig,
        finger: usize,
        frames: Option<&mut Vec<AxisFrame>>,
    ) -> ([Pose; FINGER_DOF], Pose) {
        let mut frames = frames;
        let mut pose = self.arm_chain(q, frames.as_deref_mut()) * self.palm_offset;
        let chain = &self.fingers[finger];
        let base = self.finger_offset(finger);
        let mut links = [Pose::identity(); FINGER_DOF];
        for (k, j) in chain.joints.iter().enumerate() {
            pose *= j.offset;
            if let Some(fr) = frames.as_deref_mut() {
                fr.push(AxisFrame {
                    dof: base + k,
                    kind: j.kind,
                    origin: pose.translation.vector,
                    axis: pose.rotation * j.axis,
                });
            }
            pose *= j.motion(q.values[base + k]);
            links[k] = pose;
        }
        (links, pose * chain.tip_offset)
    }

    pub fn fingertip_pose(&self, q: &JointConfig, finger: usize) -> Result<Pose> {
        self.check_config(q)?;
        self.check_finger(finger)?;
        Ok(self.finger_chain(q, finger, None).1)
    }

    pub fn fingertip_position(&self, q: &JointConfig, finger: usize) -> Result<Vec3> {
        Ok(self.fingertip_pose(q, finger)?.translation.vector)
    }

    pub fn fingertip_normal(&self, q: &JointConfig, finger: usize) -> Result<Vec3> {
        let tip = self.fingertip_pose(q, finger)?;
        Ok(tip.rotation * self.fingers[finger].tip_normal)
    }

    /// Position, normal and both Jacobians in one pass.
    pub fn fingertip_state(&self, q: &JointConfig, finger: usize) -> Result<FingertipState> {
        self.check_config(q)?;
        self.check_finger(finger)?;
        let mut frames = Vec::with_capacity(self.arm_dof() + FINGER_DOF);
        let (_, tip) = self.finger_chain(q, finger, Some(&mut frames));
        let p = tip.translation.vector;
        let n = tip.rotation * self.fingers[finger].tip_normal;
        let mut jp = Matrix3xX::zeros(self.dof());
        let mut jn = Matrix3xX::zeros(self.dof());
        for f in &frames {
            match f.kind {
                JointKind::Revolute => {
                    jp.set_column(f.dof, &f.axis.cross(&(p - f.origin)));
                    jn.set_column(f.dof, &f.axis.cross(&n));
                }
                JointKind::Prismatic => jp.set_column(f.dof, &f.axis),
            }
        }
        Ok(FingertipState {
            position: p,
            normal: n,
            position_jacobian: jp,
            normal_jacobian: jn,
        })
    }

    pub fn fingertip_jacobian(&self, q: &JointConfig, finger: usize) -> Result<Matrix3xX<f64>> {
        Ok(self.fingertip_state(q, finger)?.position_jacobian)
    }

    pub fn normal_jacobian(&self, q: &JointConfig, finger: usize) -> Result<Matrix3xX<f64>> {
        Ok(self.fingertip_state(q, finger)?.normal_jacobian)
    }

    /// World pose of every link, indexed like [`HandArmModel::links`].
    pub fn link_poses(&self, q: &JointConfig) -> Result<Vec<Pose>> {
        self.check_config(q)?;
        let mut poses = Vec::with_capacity(self.links.len());
        let mut pose = Pose::identity();
        for (k, j) in self.arm.iter().enumerate() {
            pose = pose * j.offset * j.motion(q.values[k]);
            poses.push(pose);
        }
        let palm = pose * self.palm_offset;
        poses.push(palm);
        for (fi, f) in self.fingers.iter().enumerate() {
            let base = self.finger_offset(fi);
            let mut p = palm;
            for (k, j) in f.joints.iter().enumerate() {
                p = p * j.offset * j.motion(q.values[base + k]);
                poses.push(p);
            }
        }
        Ok(poses)
    }
}

fn normalize_axis(v: &mut Vec3, what: &str) -> Result<()> {
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
        return Err(Error::Model(format!("`{what}` axis is not unit length (|v| = {n})")));
    }
    *v /= n;
    debug_assert!((v.norm() - 1.0).abs() < UNIT_TOL);
    Ok(())
}

const DEFAULT_MODEL_TOML: &str = include_str!("../../data/default_hand_arm.toml");

#[cfg(test)]
mod tests;
