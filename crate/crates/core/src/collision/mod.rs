//! Convex-hull distance queries and the hand self-collision counter.

mod gjk;

pub use gjk::{gjk_distance, GjkResult, GJK_MAX_ITERATIONS, GJK_TOLERANCE};

use crate::kinematics::{HandArmModel, JointConfig};
use crate::{Error, Pose, Result, Vec3};

/// Vertex set of a convex link shape, in the link frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexHull {
    vertices: Vec<Vec3>,
    degenerate: bool,
}

impl ConvexHull {
    /// A solid hull: at least four vertices that are not coplanar.
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::Hull(format!(
                "solid hull needs at least 4 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Hull("non-finite vertex".into()));
        }
        if affine_rank(&vertices) < 3 {
            return Err(Error::Hull("vertices are coplanar".into()));
        }
        Ok(ConvexHull {
            vertices,
            degenerate: false,
        })
    }

    /// A point or segment shape (e.g. a fingertip pad reduced to its center).
    pub fn degenerate(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Hull("hull has no vertices".into()));
        }
        Ok(ConvexHull {
            vertices,
            degenerate: true,
        })
    }

    /// Axis-aligned box with the given corners.
    pub fn cuboid(min: Vec3, max: Vec3) -> Self {
        let mut v = Vec::with_capacity(8);
        for &x in &[min.x, max.x] {
            for &y in &[min.y, max.y] {
                for &z in &[min.z, max.z] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        ConvexHull::new(v).expect("box with positive extents")
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Support point in the hull's own frame.
    pub fn support_local(&self, dir: &Vec3) -> Vec3 {
        let mut best = self.vertices[0];
        let mut best_dot = best.dot(dir);
        for v in &self.vertices[1..] {
            let d = v.dot(dir);
            if d > best_dot {
                best_dot = d;
                best = *v;
            }
        }
        best
    }

    /// Support point of the posed hull, in world frame.
    pub fn support(&self, pose: &Pose, dir: &Vec3) -> Vec3 {
        let local = pose.rotation.inverse() * dir;
        (pose * nalgebra::Point3::from(self.support_local(&local))).coords
    }

    pub fn world_vertices<'a>(&'a self, pose: &'a Pose) -> impl Iterator<Item = Vec3> + 'a {
        self.vertices
            .iter()
            .map(move |v| (pose * nalgebra::Point3::from(*v)).coords)
    }
}

fn affine_rank(points: &[Vec3]) -> usize {
    let scale = points
        .iter()
        .map(|p| (p - points[0]).norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-9 * scale;
    let mut basis: Vec<Vec3> = Vec::new();
    for p in points {
        let mut d = p - points[0];
        for b in &basis {
            d -= b * b.dot(&d);
        }
        let n = d.norm();
        if n > tol {
            basis.push(d / n);
            if basis.len() == 3 {
                break;
            }
        }
    }
    basis.len()
}

/// Link pairs eligible for self-collision checking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionPairSet {
    pairs: Vec<(usize, usize)>,
}

impl CollisionPairSet {
    /// All pairs of hand links that both carry geometry, excluding parent/child links.
    pub fn for_model(model: &HandArmModel) -> Self {
        let links = model.links();
        let mut pairs = Vec::new();
        for a in 0..links.len() {
            for b in a + 1..links.len() {
                let (la, lb) = (&links[a], &links[b]);
                if la.hull.is_none() || lb.hull.is_none() {
                    continue;
                }
                if !la.kind.is_hand() || !lb.kind.is_hand() {
                    continue;
                }
                if la.parent == Some(b) || lb.parent == Some(a) {
                    continue;
                }
                pairs.push((a, b));
            }
        }
        CollisionPairSet { pairs }
    }

    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Self {
        CollisionPairSet { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Number of eligible link pairs in contact or overlap at `q` (0 means collision free).
pub fn self_coll(model: &HandArmModel, q: &JointConfig) -> Result<usize> {
    self_coll_with(model, &CollisionPairSet::for_model(model), q)
}

pub fn self_coll_with(model: &HandArmModel, pairs: &CollisionPairSet, q: &JointConfig) -> Result<usize> {
    let poses = model.link_poses(q)?;
    let links = model.links();
    let mut count = 0;
    for &(a, b) in pairs.pairs() {
        let (Some(ha), Some(hb)) = (&links[a].hull, &links[b].hull) else {
            continue;
        };
        if gjk_distance(ha, &poses[a], hb, &poses[b]).intersecting {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests;
