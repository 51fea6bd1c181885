//! Signed distance queries: positive outside, negative inside, zero on the surface.
//!
//! [`SdfScene`] is the ground-truth object. [`EstimatedSdf`] wraps it with a constant
//! bias plus a smooth seeded noise field and is what the planner sees.

mod estimated;
mod mesh;
mod scene_file;

use std::sync::Arc;

pub use estimated::{value_noise, EstimatedSdf};
pub use mesh::TriMesh;
pub use scene_file::{ObjectDescription, SceneDescription, ShapeDescription, SCENE_FORMAT};

use nalgebra::{Point3, UnitQuaternion};

use crate::{Error, Pose, Result, Vec3};

/// Step used for finite-difference gradients of non-analytic fields.
pub const FD_GRADIENT_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub gradient: Vec3,
}

pub trait SignedDistance: Send + Sync {
    fn query(&self, p: &Vec3) -> SdfSample;

    fn distance(&self, p: &Vec3) -> f64 {
        self.query(p).distance
    }

    /// Center of the object's bounding box, world frame.
    fn center(&self) -> Vec3;

    /// Half the diagonal of the object's bounding box.
    fn half_diagonal(&self) -> f64;

    /// Orientation of the bounding box axes in the world frame.
    fn axes(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::identity()
    }

    /// Bounding box half extents along [`SignedDistance::axes`].
    fn half_extents(&self) -> Vec3 {
        Vec3::repeat(self.half_diagonal() / 3f64.sqrt())
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    Sphere { radius: f64 },
    Cuboid { half_extents: Vec3 },
    /// Axis along local z.
    Cylinder { radius: f64, half_height: f64 },
    /// Segment along local z.
    Capsule { radius: f64, half_height: f64 },
    /// Half-space `z <= 0`; for toy problems.
    Plane,
    Mesh(Arc<TriMesh>),
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Scene(format!("{what} must be positive, got {v}")))
            }
        };
        match self {
            Shape::Sphere { radius } => positive(*radius, "radius"),
            Shape::Cuboid { half_extents } => half_extents
                .iter()
                .try_for_each(|h| positive(*h, "half extent")),
            Shape::Cylinder { radius, half_height } | Shape::Capsule { radius, half_height } => {
                positive(*radius, "radius")?;
                positive(*half_height, "half height")
            }
            Shape::Plane | Shape::Mesh(_) => Ok(()),
        }
    }

    fn local_query(&self, p: &Vec3) -> SdfSample {
        match self {
            Shape::Sphere { radius } => {
                let n = p.norm();
                let gradient = if n > 0.0 { p / n } else { Vec3::z() };
                SdfSample {
                    distance: n - radius,
                    gradient,
                }
            }
            Shape::Cuboid { half_extents } => box_sdf(p, half_extents),
            Shape::Cylinder { radius, half_height } => cylinder_sdf(p, *radius, *half_height),
            Shape::Capsule { radius, half_height } => {
                let c = Vec3::new(0.0, 0.0, p.z.clamp(-half_height, *half_height));
                let d = p - c;
                let n = d.norm();
                let gradient = if n > 0.0 { d / n } else { Vec3::x() };
                SdfSample {
                    distance: n - radius,
                    gradient,
                }
            }
            Shape::Plane => SdfSample {
                distance: p.z,
                gradient: Vec3::z(),
            },
            Shape::Mesh(mesh) => {
                let distance = mesh.signed_distance(p);
                let h = FD_GRADIENT_STEP;
                let mut gradient = Vec3::zeros();
                for i in 0..3 {
                    let mut e = Vec3::zeros();
                    e[i] = h;
                    gradient[i] = (mesh.signed_distance(&(p + e)) - mesh.signed_distance(&(p - e))) / (2.0 * h);
                }
                SdfSample { distance, gradient }
            }
        }
    }

    /// (center, half extents) of the local bounding box.
    fn local_bounds(&self) -> (Vec3, Vec3) {
        match self {
            Shape::Sphere { radius } => (Vec3::zeros(), Vec3::repeat(*radius)),
            Shape::Cuboid { half_extents } => (Vec3::zeros(), *half_extents),
            Shape::Cylinder { radius, half_height } => {
                (Vec3::zeros(), Vec3::new(*radius, *radius, *half_height))
            }
            Shape::Capsule { radius, half_height } => {
                (Vec3::zeros(), Vec3::new(*radius, *radius, half_height + radius))
            }
            Shape::Plane => (Vec3::zeros(), Vec3::zeros()),
            Shape::Mesh(mesh) => mesh.bounds(),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn box_sdf(p: &Vec3, h: &Vec3) -> SdfSample {
    let q = p.abs() - h;
    if q.iter().any(|&c| c > 0.0) {
        let o = q.map(|c| c.max(0.0));
        let d = o.norm();
        let gradient = Vec3::new(sign(p.x) * o.x, sign(p.y) * o.y, sign(p.z) * o.z) / d;
        SdfSample { distance: d, gradient }
    } else {
        let k = q.imax();
        let mut gradient = Vec3::zeros();
        gradient[k] = sign(p[k]);
        SdfSample {
            distance: q[k],
            gradient,
        }
    }
}

fn cylinder_sdf(p: &Vec3, r: f64, h: f64) -> SdfSample {
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let radial = if rho > 0.0 {
        Vec3::new(p.x / rho, p.y / rho, 0.0)
    } else {
        Vec3::x()
    };
    let axial = Vec3::new(0.0, 0.0, sign(p.z));
    let qr = rho - r;
    let qz = p.z.abs() - h;
    if qr > 0.0 || qz > 0.0 {
        let (or, oz) = (qr.max(0.0), qz.max(0.0));
        let d = or.hypot(oz);
        SdfSample {
            distance: d,
            gradient: (radial * or + axial * oz) / d,
        }
    } else if qr > qz {
        SdfSample {
            distance: qr,
            gradient: radial,
        }
    } else {
        SdfSample {
            distance: qz,
            gradient: axial,
        }
    }
}

/// Ground-truth object: a shape, a rigid pose and a uniform scale.
#[derive(Clone, Debug)]
pub struct SdfScene {
    shape: Shape,
    pose: Pose,
    scale: f64,
}

impl SdfScene {
    pub fn new(shape: Shape, pose: Pose, scale: f64) -> Result<Self> {
        shape.validate()?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Scene(format!("scale must be positive, got {scale}")));
        }
        Ok(SdfScene { shape, pose, scale })
    }

    pub fn sphere(radius: f64, center: Vec3) -> Self {
        SdfScene::new(Shape::Sphere { radius }, Pose::translation(center.x, center.y, center.z), 1.0)
            .expect("positive radius")
    }

    pub fn cuboid(half_extents: Vec3, pose: Pose) -> Self {
        SdfScene::new(Shape::Cuboid { half_extents }, pose, 1.0).expect("positive extents")
    }

    /// Half-space below the plane through `point` with outward normal `normal`.
    pub fn plane(point: Vec3, normal: Vec3) -> Self {
        let rot = nalgebra::UnitQuaternion::rotation_between(&Vec3::z(), &normal)
            .unwrap_or_else(|| nalgebra::UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI));
        SdfScene::new(Shape::Plane, Pose::from_parts(point.into(), rot), 1.0).expect("plane")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Signed distance and gradient at `p`.
    pub fn sdf_query(&self, p: &Vec3) -> SdfSample {
        let local = self.pose.inverse_transform_point(&Point3::from(*p)).coords / self.scale;
        let s = self.shape.local_query(&local);
        SdfSample {
            distance: s.distance * self.scale,
            gradient: self.pose.rotation * s.gradient,
        }
    }
}

impl SignedDistance for SdfScene {
    fn query(&self, p: &Vec3) -> SdfSample {
        self.sdf_query(p)
    }

    fn center(&self) -> Vec3 {
        let (c, _) = self.shape.local_bounds();
        (self.pose * Point3::from(c * self.scale)).coords
    }

    fn half_diagonal(&self) -> f64 {
        self.shape.local_bounds().1.norm() * self.scale
    }

    fn axes(&self) -> UnitQuaternion<f64> {
        self.pose.rotation
    }

    fn half_extents(&self) -> Vec3 {
        self.shape.local_bounds().1 * self.scale
    }
}

/// Outcome of a non-converged [`surface_project`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionFailure {
    pub point: Vec3,
    pub residual: f64,
}

/// Surface tolerance for [`surface_project`].
pub const PROJECTION_TOLERANCE: f64 = 1e-6;

/// Walks `p` along the field gradient until `|distance| <= 1e-6` m.
pub fn surface_project(
    scene: &dyn SignedDistance,
    p: &Vec3,
    max_iters: usize,
) -> std::result::Result<Vec3, ProjectionFailure> {
    let mut x = *p;
    for _ in 0..max_iters {
        let s = scene.query(&x);
        if s.distance.abs() <= PROJECTION_TOLERANCE {
            return Ok(x);
        }
        let g2 = s.gradient.norm_squared();
        if g2 < 1e-24 {
            return Err(ProjectionFailure {
                point: x,
                residual: s.distance,
            });
        }
        x -= s.gradient * (s.distance / g2);
    }
    let residual = scene.distance(&x);
    if residual.abs() <= PROJECTION_TOLERANCE {
        Ok(x)
    } else {
        Err(ProjectionFailure { point: x, residual })
    }
}

#[cfg(test)]
mod tests;
