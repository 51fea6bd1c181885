//! Brute-force reference computations the fast paths are checked against.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Vec3;

pub fn point_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let t = if l2 > 0.0 { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

pub fn point_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let edges = point_segment(p, a, b).min(point_segment(p, b, c)).min(point_segment(p, c, a));
    let n2 = n.norm_squared();
    if n2 < 1e-30 {
        return edges;
    }
    let proj = p - n * ((p - a).dot(&n) / n2);
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(proj - *u)).dot(&n) >= 0.0);
    if inside {
        (p - proj).norm()
    } else {
        edges
    }
}

pub fn segment_segment(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    // Convex quadratic on the unit square: interior stationary point or a boundary edge.
    let mut best = point_segment(a0, b0, b1)
        .min(point_segment(a1, b0, b1))
        .min(point_segment(b0, a0, a1))
        .min(point_segment(b1, a0, a1));
    let u = a1 - a0;
    let v = b1 - b0;
    let w = a0 - b0;
    let (uu, uv, vv, uw, vw) = (u.dot(&u), u.dot(&v), v.dot(&v), u.dot(&w), v.dot(&w));
    let det = uu * vv - uv * uv;
    if det > 1e-14 * uu * vv {
        let s = (uv * vw - vv * uw) / det;
        let t = (uu * vw - uv * uw) / det;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            best = best.min((a0 + u * s - b0 - v * t).norm());
        }
    }
    best
}

/// Distance between the hulls of two disjoint point sets.
///
/// The closest pair is realized by a vertex/triangle or a segment/segment pair drawn
/// from the vertex sets; those triangles and segments lie inside the hulls, so the
/// minimum over all of them is exact.
pub fn polytope_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for (xs, ys) in [(a, b), (b, a)] {
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                for k in j + 1..xs.len() {
                    for p in ys {
                        best = best.min(point_triangle(p, &xs[i], &xs[j], &xs[k]));
                    }
                }
            }
        }
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            for k in 0..b.len() {
                for l in k + 1..b.len() {
                    best = best.min(segment_segment(&a[i], &a[j], &b[k], &b[l]));
                }
            }
        }
    }
    best
}

/// `(n + 1)^2` grid points on each face of the axis-aligned box with half extents `h`.
pub fn box_surface_grid(h: &Vec3, n: usize) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(6 * (n + 1) * (n + 1));
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for s in [-1.0, 1.0] {
            for i in 0..=n {
                for j in 0..=n {
                    let mut p = Vec3::zeros();
                    p[axis] = s * h[axis];
                    p[u] = -h[u] + 2.0 * h[u] * i as f64 / n as f64;
                    p[v] = -h[v] + 2.0 * h[v] * j as f64 / n as f64;
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Signed distance to an axis-aligned box from its sampled surface: nearest sample,
/// negative when strictly inside.
pub fn box_sdf_from_samples(samples: &[Vec3], h: &Vec3, p: &Vec3) -> f64 {
    let d = samples.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt();
    let inside = (0..3).all(|k| p[k].abs() < h[k]);
    if inside {
        -d
    } else {
        d
    }
}

/// Standard normal draw (Box-Muller).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * rng.gen::<f64>()).cos()
}

/// Uniformly distributed unit vector in `dim` dimensions.
pub fn random_unit(rng: &mut impl Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| standard_normal(rng)).normalize()
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Epsilon quality by direction sampling: the minimum support value of the 6-D points
/// over `samples` random unit directions.
///
/// Raw sampling converges slowly in six dimensions, so each of the best directions is
/// polished: every hyperplane through six of its nearly supporting points (normal from
/// an SVD null vector) that supports the whole set is a candidate.
pub fn sampled_epsilon(points: &[DVector<f64>], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = |u: &DVector<f64>| points.iter().map(|p| u.dot(p)).fold(f64::NEG_INFINITY, f64::max);
    let mut scored: Vec<(f64, DVector<f64>)> = (0..samples)
        .map(|_| {
            let u = random_unit(&mut rng, 6);
            (support(&u), u)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0;
    for (_, u) in scored.iter().take(40) {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| u.dot(&points[b]).total_cmp(&u.dot(&points[a])));
        let near = &order[..order.len().min(11)];
        for combo in combinations(near.len(), 6) {
            let sel: Vec<&DVector<f64>> = combo.iter().map(|&k| &points[near[k]]).collect();
            let m = DMatrix::from_fn(6, 6, |r, c| if r < 5 { sel[r + 1][c] - sel[0][c] } else { 0.0 });
            let svd = m.svd(false, true);
            let Some(vt) = svd.v_t else { continue };
            let (k, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let mut n: DVector<f64> = vt.row(k).transpose();
            n /= n.norm();
            let mut b = n.dot(sel[0]);
            if b < 0.0 {
                n = -n;
                b = -b;
            }
            if points.iter().all(|p| n.dot(p) <= b + 1e-12) {
                best = best.min(b);
            }
        }
    }
    best
}

/// Closed-form minimum time of a rest-to-rest move of `distance` with speed bound `v`
/// and acceleration bound `a`: trapezoid when the cruise speed is reached, triangle
/// otherwise.
pub fn trapezoid_time(distance: f64, v: f64, a: f64) -> f64 {
    let d = distance.abs();
    if d * a >= v * v {
        d / v + v / a
    } else {
        2.0 * (d / a).sqrt()
    }
}

/// `|a - b|` relative to the larger magnitude, with `floor` keeping near-zero entries
/// from dominating.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
