//! Gilbert-Johnson-Keerthi distance between two posed convex hulls.
//!
//! The simplex sub-problem is solved by enumerating every face of the current simplex
//! (at most 15 for a tetrahedron) and keeping the closest affine projection that lies
//! strictly inside its face. That is slower than Johnson's recursive formulas but has
//! no special cases to get wrong.

use nalgebra::{Matrix3, Vector3};

use super::ConvexHull;
use crate::{Pose, Vec3};

pub const GJK_MAX_ITERATIONS: usize = 64;
pub const GJK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GjkResult {
    /// Separation distance; 0 when intersecting.
    pub distance: f64,
    pub intersecting: bool,
    /// False when the iteration cap was hit; `distance` is then the best lower bound.
    pub exact: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Vertex {
    w: Vec3,
}

fn support(a: &ConvexHull, pa: &Pose, b: &ConvexHull, pb: &Pose, dir: &Vec3) -> Vec3 {
    a.support(pa, dir) - b.support(pb, &-dir)
}

/// Closest point to the origin on the convex hull of `simplex`, together with the
/// minimal subset of vertices supporting it.
fn closest_on_simplex(simplex: &[Vertex]) -> (Vec3, Vec<Vertex>) {
    let n = simplex.len();
    let mut best: Option<(f64, Vec3, u32)> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let Some((point, weights)) = affine_projection(simplex, &idx) else {
            continue;
        };
        if weights.iter().any(|&l| l <= 0.0) {
            continue;
        }
        let d = point.norm_squared();
        if best.map_or(true, |(bd, _, bm)| {
            d < bd || (d == bd && mask.count_ones() < bm.count_ones())
        }) {
            best = Some((d, point, mask));
        }
    }
    // Degenerate simplices can reject every face; fall back to the nearest vertex.
    let (_, point, mask) = best.unwrap_or_else(|| {
        let (i, v) = simplex
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.w.norm_squared().total_cmp(&y.1.w.norm_squared()))
            .unwrap();
        (v.w.norm_squared(), v.w, 1 << i)
    });
    let kept = (0..n)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| simplex[i])
        .collect();
    (point, kept)
}

/// Orthogonal projection of the origin onto the affine hull of the selected vertices,
/// with barycentric weights. `None` if the vertices are affinely dependent.
fn affine_projection(simplex: &[Vertex], idx: &[usize]) -> Option<(Vec3, Vec<f64>)> {
    let p0 = simplex[idx[0]].w;
    if idx.len() == 1 {
        return Some((p0, vec![1.0]));
    }
    let k = idx.len() - 1;
    let edges: Vec<Vec3> = idx[1..].iter().map(|&i| simplex[i].w - p0).collect();
    // Solve (E^T E) t = -E^T p0.
    let mut g = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for r in 0..k {
        for c in 0..k {
            g[(r, c)] = edges[r].dot(&edges[c]);
        }
        rhs[r] = -edges[r].dot(&p0);
    }
    let scale = edges.iter().map(|e| e.norm_squared()).fold(0.0, f64::max);
    let sub = g.view((0, 0), (k, k)).into_owned();
    let det = sub.determinant();
    if det.abs() <= 1e-14 * scale.powi(k as i32) {
        return None;
    }
    let t = sub.lu().solve(&rhs.rows(0, k).into_owned())?;
    let mut point = p0;
    let mut weights = Vec::with_capacity(idx.len());
    let mut sum = 0.0;
    for r in 0..k {
        point += edges[r] * t[r];
        sum += t[r];
    }
    weights.push(1.0 - sum);
    weights.extend(t.iter().copied());
    Some((point, weights))
}

/// Distance between `hull_a` at `pose_a` and `hull_b` at `pose_b`.
pub fn gjk_distance(hull_a: &ConvexHull, pose_a: &Pose, hull_b: &ConvexHull, pose_b: &Pose) -> GjkResult {
    let start = Vec3::x();
    let mut simplex = vec![Vertex {
        w: support(hull_a, pose_a, hull_b, pose_b, &start),
    }];
    let mut v = simplex[0].w;
    let mut lower_bound = 0.0f64;

    for iteration in 1..=GJK_MAX_ITERATIONS {
        let vnorm = v.norm();
        if vnorm <= GJK_TOLERANCE {
            return GjkResult {
                distance: 0.0,
                intersecting: true,
                exact: true,
                iterations: iteration,
            };
        }
        let w = support(hull_a, pose_a, hull_b, pose_b, &-v);
        // v.w / |v| is a lower bound on the distance, |v| an upper bound.
        lower_bound = lower_bound.max(v.dot(&w) / vnorm);
        if vnorm - lower_bound <= GJK_TOLERANCE || simplex.iter().any(|s| (s.w - w).norm() <= 1e-15) {
            return GjkResult {
                distance: vnorm,
                intersecting: false,
                exact: true,
                iterations: iteration,
            };
        }
        simplex.push(Vertex { w });
        let (closest, kept) = closest_on_simplex(&simplex);
        simplex = kept;
        if simplex.len() == 4 {
            // Origin strictly inside the tetrahedron.
            return GjkResult {
                distance: 0.0,
                intersecting: true,
                exact: true,
                iterations: iteration,
            };
        }
        if closest.norm() >= vnorm {
            // No progress; numerical floor reached.
            return GjkResult {
                distance: vnorm.min(closest.norm()),
                intersecting: false,
                exact: true,
                iterations: iteration,
            };
        }
        v = closest;
    }
    GjkResult {
        distance: lower_bound.max(0.0),
        intersecting: false,
        exact: false,
        iterations: GJK_MAX_ITERATIONS,
    }
}
