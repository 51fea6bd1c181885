//! Declarative model description file (TOML).
//!
//! ```toml
//! format = "vtgrasp-model/1"
//!
//! [palm]
//! offset = { translation = [0.0, 0.0, 0.1], rpy = [0.0, 0.0, 0.0] }
//! hull = [[-0.06, -0.07, -0.03], ...]
//!
//! [[arm]]
//! name = "a1"
//! kind = "revolute"
//! axis = [0.0, 0.0, 1.0]
//! lower = -2.96
//! upper = 2.96
//!
//! [[fingers]]
//! name = "index"
//! tip = { translation = [-0.01, 0.0, 0.03] }
//! tip_normal = [-1.0, 0.0, 0.0]
//! [[fingers.joints]]
//! ...
//! ```

use std::path::Path;

use nalgebra::{Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{FingerChain, HandArmModel, Joint, JointKind};
use crate::collision::ConvexHull;
use crate::{Error, Pose, Result, Vec3};

pub const MODEL_FORMAT: &str = "vtgrasp-model/1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseDescription {
    #[serde(default)]
    pub translation: [f64; 3],
    /// Roll, pitch, yaw in radians (applied as `Rz(yaw) Ry(pitch) Rx(roll)`).
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl PoseDescription {
    pub fn to_pose(&self) -> Pose {
        let [x, y, z] = self.translation;
        let [r, p, yaw] = self.rpy;
        Pose::from_parts(
            Translation3::new(x, y, z),
            UnitQuaternion::from_euler_angles(r, p, yaw),
        )
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let t = pose.translation.vector;
        let (r, p, y) = pose.rotation.euler_angles();
        PoseDescription {
            translation: [t.x, t.y, t.z],
            rpy: [r, p, y],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKindDescription {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullDescription {
    pub vertices: Vec<[f64; 3]>,
    /// Point or segment pads are allowed only when tagged.
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDescription {
    pub name: String,
    pub kind: JointKindDescription,
    pub axis: [f64; 3],
    #[serde(default)]
    pub offset: PoseDescription,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<HullDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalmDescription {
    #[serde(default)]
    pub offset: PoseDescription,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<HullDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerDescription {
    pub name: String,
    #[serde(default)]
    pub thumb: bool,
    pub tip: PoseDescription,
    pub tip_normal: [f64; 3],
    pub joints: Vec<JointDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescription {
    pub format: String,
    #[serde(default)]
    pub arm: Vec<JointDescription>,
    pub palm: PalmDescription,
    pub fingers: Vec<FingerDescription>,
}

fn hull_from(desc: &Option<HullDescription>) -> Result<Option<ConvexHull>> {
    desc.as_ref()
        .map(|h| {
            let v = h.vertices.iter().map(|p| Vec3::from(*p)).collect();
            if h.degenerate {
                ConvexHull::degenerate(v)
            } else {
                ConvexHull::new(v)
            }
        })
        .transpose()
}

fn hull_to(hull: &Option<ConvexHull>) -> Option<HullDescription> {
    hull.as_ref().map(|h| HullDescription {
        vertices: h.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
        degenerate: h.is_degenerate(),
    })
}

impl JointDescription {
    fn build(&self) -> Result<Joint> {
        Ok(Joint {
            name: self.name.clone(),
            kind: match self.kind {
                JointKindDescription::Revolute => JointKind::Revolute,
                JointKindDescription::Prismatic => JointKind::Prismatic,
            },
            axis: Vec3::from(self.axis),
            offset: self.offset.to_pose(),
            lower: self.lower,
            upper: self.upper,
            hull: hull_from(&self.hull)?,
        })
    }

    fn from_joint(j: &Joint) -> Self {
        JointDescription {
            name: j.name.clone(),
            kind: match j.kind {
                JointKind::Revolute => JointKindDescription::Revolute,
                JointKind::Prismatic => JointKindDescription::Prismatic,
            },
            axis: [j.axis.x, j.axis.y, j.axis.z],
            offset: PoseDescription::from_pose(&j.offset),
            lower: j.lower,
            upper: j.upper,
            hull: hull_to(&j.hull),
        }
    }
}

impl ModelDescription {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let desc: ModelDescription = toml::from_str(s).map_err(|e| Error::Parse {
            path: "<model>".into(),
            message: e.to_string(),
        })?;
        if desc.format != MODEL_FORMAT {
            return Err(Error::Format {
                expected: MODEL_FORMAT.into(),
                found: desc.format,
            });
        }
        Ok(desc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("model description serializes")
    }

    pub fn build(&self) -> Result<HandArmModel> {
        let arm = self.arm.iter().map(JointDescription::build).collect::<Result<Vec<_>>>()?;
        let fingers = self
            .fingers
            .iter()
            .map(|f| {
                Ok(FingerChain {
                    name: f.name.clone(),
                    thumb: f.thumb,
                    joints: f.joints.iter().map(JointDescription::build).collect::<Result<_>>()?,
                    tip_offset: f.tip.to_pose(),
                    tip_normal: Vec3::from(f.tip_normal),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HandArmModel::new(arm, self.palm.offset.to_pose(), hull_from(&self.palm.hull)?, fingers)
    }

    pub fn from_model(model: &HandArmModel) -> Self {
        ModelDescription {
            format: MODEL_FORMAT.into(),
            arm: model.arm_joints().iter().map(JointDescription::from_joint).collect(),
            palm: PalmDescription {
                offset: PoseDescription::from_pose(model.palm_offset()),
                hull: hull_to(&model.palm_hull().cloned()),
            },
            fingers: model
                .fingers()
                .iter()
                .map(|f| FingerDescription {
                    name: f.name.clone(),
                    thumb: f.thumb,
                    tip: PoseDescription::from_pose(&f.tip_offset),
                    tip_normal: [f.tip_normal.x, f.tip_normal.y, f.tip_normal.z],
                    joints: f.joints.iter().map(JointDescription::from_joint).collect(),
                })
                .collect(),
        }
    }
}

impl HandArmModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelDescription::load(path)?.build()
    }
}
