//! Scene description file (TOML).
//!
//! ```toml
//! format = "vtgrasp-scene/1"
//!
//! [object]
//! scale = 1.0
//! pose = { translation = [0.5, 0.0, 0.25] }
//! shape = { kind = "sphere", radius = 0.05 }
//! ```
//!
//! Shape kinds: `sphere { radius }`, `box { half_extents }`, `cylinder { radius, half_height }`,
//! `capsule { radius, half_height }`, `mesh { path }`. Mesh paths are relative to the scene file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SdfScene, Shape, TriMesh};
use crate::kinematics::PoseDescription;
use crate::{Error, Result, Vec3};

pub const SCENE_FORMAT: &str = "vtgrasp-scene/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeDescription {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Cylinder { radius: f64, half_height: f64 },
    Capsule { radius: f64, half_height: f64 },
    Mesh { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDescription {
    pub shape: ShapeDescription,
    #[serde(default)]
    pub pose: PoseDescription,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub format: String,
    pub object: ObjectDescription,
}

impl SceneDescription {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let desc: SceneDescription = toml::from_str(s).map_err(|e| Error::Scene(e.to_string()))?;
        if desc.format != SCENE_FORMAT {
            return Err(Error::Format {
                expected: SCENE_FORMAT.into(),
                found: desc.format,
            });
        }
        Ok(desc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene description serializes")
    }

    /// Builds the scene; relative mesh paths resolve against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<SdfScene> {
        let o = &self.object;
        let shape = match &o.shape {
            ShapeDescription::Sphere { radius } => Shape::Sphere { radius: *radius },
            ShapeDescription::Box { half_extents } => Shape::Cuboid {
                half_extents: Vec3::from(*half_extents),
            },
            ShapeDescription::Cylinder { radius, half_height } => Shape::Cylinder {
                radius: *radius,
                half_height: *half_height,
            },
            ShapeDescription::Capsule { radius, half_height } => Shape::Capsule {
                radius: *radius,
                half_height: *half_height,
            },
            ShapeDescription::Mesh { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                Shape::Mesh(Arc::new(TriMesh::load_ascii(full)?))
            }
        };
        SdfScene::new(shape, o.pose.to_pose(), o.scale)
    }
}

impl SdfScene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let desc = SceneDescription::from_toml_str(&text).map_err(|e| match e {
            Error::Scene(message) => Error::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })?;
        desc.build(path.parent())
    }
}
