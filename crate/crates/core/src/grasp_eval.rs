//! Geometric grasp quality of the achieved contacts: force closure and the epsilon
//! (largest resisted wrench ball) metric over linearized soft-finger friction cones.
//!
//! The object cannot move in this simulation, so force closure stands in for "the grasp
//! would survive a lift".

use nalgebra::{DVector, Vector6};
use serde::Serialize;

use crate::kinematics::{HandArmModel, JointConfig};
use crate::sdf::{surface_project, SdfScene, SignedDistance};
use crate::tactile::{ClosingReport, FingerPhase, StopReason};
use crate::{Error, Result, Vec3};

pub mod hull;

pub use hull::{convex_hull, Facet};

pub const CONE_EDGES: usize = 8;
pub const FRICTION_COEFFICIENT: f64 = 0.5;
/// Radius of the soft contact patch that turns friction into a torsional limit (m).
pub const TORSION_RADIUS: f64 = 0.005;
const PROJECTION_ITERS: usize = 50;

/// Force in the first three components, normalized torque in the last three.
pub type Wrench = Vector6<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub point: Vec3,
    /// Unit normal pointing into the object.
    pub normal: Vec3,
    pub finger: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactState {
    pub contacts: Vec<Contact>,
    pub friction: f64,
    /// Torsional friction `friction * torsion_radius * f_n` about each normal; 0 gives
    /// point contacts.
    pub torsion_radius: f64,
    /// Torque reference point (the object centroid).
    pub centroid: Vec3,
    /// Fingers reported in contact whose projection onto the surface failed.
    pub dropped: Vec<usize>,
}

impl ContactState {
    pub fn new(contacts: Vec<Contact>, friction: f64, centroid: Vec3) -> Self {
        ContactState {
            contacts,
            friction,
            torsion_radius: TORSION_RADIUS,
            centroid,
            dropped: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraspQuality {
    pub is_closure: bool,
    /// 0 unless `is_closure`.
    pub epsilon: f64,
}

impl GraspQuality {
    const NONE: GraspQuality = GraspQuality {
        is_closure: false,
        epsilon: 0.0,
    };
}

/// Contacts of every finger that stopped on touch, projected onto the true surface at
/// configuration `q`.
pub fn extract_contacts(
    scene_true: &SdfScene,
    model: &HandArmModel,
    q: &JointConfig,
    report: &ClosingReport,
    friction: f64,
) -> Result<ContactState> {
    if !(friction >= 0.0 && friction.is_finite()) {
        return Err(Error::InvalidArgument(format!("friction coefficient must be non-negative, got {friction}")));
    }
    let mut state = ContactState::new(Vec::new(), friction, scene_true.center());
    for (finger, outcome) in report.fingers.iter().enumerate() {
        if outcome.phase != FingerPhase::Stopped(StopReason::Contact) {
            continue;
        }
        let tip = model.fingertip_position(q, finger)?;
        match surface_project(scene_true, &tip, PROJECTION_ITERS) {
            Ok(point) => {
                let g = scene_true.sdf_query(&point).gradient;
                if g.norm() < 1e-12 {
                    state.dropped.push(finger);
                    continue;
                }
                state.contacts.push(Contact {
                    point,
                    normal: -g.normalize(),
                    finger,
                });
            }
            Err(_) => state.dropped.push(finger),
        }
    }
    Ok(state)
}

fn any_perpendicular(n: &Vec3) -> Vec3 {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    n.cross(&axis).normalize()
}

fn tangent_projection(v: &Vec3, n: &Vec3) -> Option<Vec3> {
    let t = v - n * n.dot(v);
    (t.norm() > 1e-9 * v.norm().max(1e-12)).then(|| t.normalize())
}

/// First cone-edge direction for every contact, derived from the contact geometry so the
/// linearized cones rotate with the contact set.
fn tangent_frames(contacts: &[Contact]) -> Vec<Vec3> {
    let c0 = &contacts[0];
    let reference = contacts[1..]
        .iter()
        .find_map(|c| tangent_projection(&(c.point - c0.point), &c0.normal))
        .or_else(|| contacts[1..].iter().find_map(|c| tangent_projection(&c.normal, &c0.normal)))
        .unwrap_or_else(|| any_perpendicular(&c0.normal));
    contacts
        .iter()
        .map(|c| tangent_projection(&reference, &c.normal).unwrap_or_else(|| any_perpendicular(&c.normal)))
        .collect()
}

/// Unit-normal-force primitive wrenches: `cone_edges` friction cone edges per contact plus
/// two torsional wrenches when `torsion_radius > 0`. Torques are taken about the centroid
/// and divided by the mean contact radius.
pub fn primitive_wrenches(state: &ContactState, cone_edges: usize) -> Vec<Wrench> {
    if state.contacts.is_empty() {
        return Vec::new();
    }
    let radius = state.contacts.iter().map(|c| (c.point - state.centroid).norm()).sum::<f64>()
        / state.contacts.len() as f64;
    let radius = if radius > 1e-12 { radius } else { 1.0 };
    let mu = state.friction;
    let tangents = tangent_frames(&state.contacts);
    let mut out = Vec::with_capacity(state.contacts.len() * (cone_edges + 2));
    for (c, t1) in state.contacts.iter().zip(&tangents) {
        let n = c.normal.normalize();
        let t2 = n.cross(t1);
        let arm = c.point - state.centroid;
        let wrench = |f: Vec3, torsion: f64| {
            let tau = (arm.cross(&f) + n * torsion) / radius;
            Wrench::new(f.x, f.y, f.z, tau.x, tau.y, tau.z)
        };
        for j in 0..cone_edges {
            let theta = std::f64::consts::TAU * j as f64 / cone_edges as f64;
            out.push(wrench(n + (t1 * theta.cos() + t2 * theta.sin()) * mu, 0.0));
        }
        if state.torsion_radius > 0.0 {
            let limit = mu * state.torsion_radius;
            out.push(wrench(n, limit));
            out.push(wrench(n, -limit));
        }
    }
    out
}

/// Force closure and epsilon quality of `state` with `cone_edges`-sided friction cones.
pub fn force_closure(state: &ContactState, cone_edges: usize) -> GraspQuality {
    if state.contacts.len() < 2 || cone_edges < 3 {
        return GraspQuality::NONE;
    }
    let points: Vec<DVector<f64>> = primitive_wrenches(state, cone_edges)
        .iter()
        .map(|w| DVector::from_column_slice(w.as_slice()))
        .collect();
    epsilon_of(&points)
}

/// Distance from the origin to the boundary of the hull of `points` if the origin is
/// strictly inside.
pub fn epsilon_of(points: &[DVector<f64>]) -> GraspQuality {
    let Some(facets) = convex_hull(points) else {
        return GraspQuality::NONE;
    };
    let epsilon = facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
    if epsilon > 1e-12 {
        GraspQuality {
            is_closure: true,
            epsilon,
        }
    } else {
        GraspQuality::NONE
    }
}
