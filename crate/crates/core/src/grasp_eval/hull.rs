//! Incremental (beneath-beyond) convex hull in any dimension, reporting facet
//! hyperplanes. Facets are simplices; a flat face of the polytope shows up as several
//! facets sharing one hyperplane, which is all the epsilon metric needs.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Indices into the input points, sorted.
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: DVector<f64>,
    /// `normal . x <= offset` for every hull point.
    pub offset: f64,
}

impl Facet {
    pub fn signed_distance(&self, p: &DVector<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Unit normal of the hyperplane through `d` points in `R^d`, from cofactors of the
/// edge matrix. `None` if the points are affinely dependent.
fn hyperplane(points: &[&DVector<f64>]) -> Option<(DVector<f64>, f64)> {
    let d = points[0].len();
    let edges = DMatrix::from_fn(d - 1, d, |r, c| points[r + 1][c] - points[0][c]);
    let mut normal = DVector::zeros(d);
    for k in 0..d {
        let minor = edges.clone().remove_column(k);
        let det = if d == 1 { 1.0 } else { minor.determinant() };
        normal[k] = if k % 2 == 0 { det } else { -det };
    }
    let norm = normal.norm();
    let scale = edges.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if !(norm > 1e-13 * scale.powi(d as i32 - 1)) {
        return None;
    }
    normal /= norm;
    let offset = points.iter().map(|p| normal.dot(p)).sum::<f64>() / d as f64;
    Some((normal, offset))
}

/// Greedy initial simplex: each new vertex is the point farthest from the affine span of
/// those already chosen.
fn initial_simplex(points: &[DVector<f64>], tol: f64) -> Option<Vec<usize>> {
    let d = points[0].len();
    let first = (0..points.len()).max_by(|&a, &b| {
        (&points[a] - &points[0]).norm().total_cmp(&(&points[b] - &points[0]).norm())
    })?;
    let mut chosen = vec![first];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    while chosen.len() <= d {
        let origin = &points[first];
        let residual = |p: &DVector<f64>| {
            let mut r = p - origin;
            for b in &basis {
                let c = b.dot(&r);
                r -= b * c;
            }
            r
        };
        let (best, r) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, residual(p)))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
        let n = r.norm();
        if n <= tol {
            return None;
        }
        basis.push(r / n);
        chosen.push(best);
    }
    Some(chosen)
}

fn oriented_facet(points: &[DVector<f64>], mut vertices: Vec<usize>, interior: &DVector<f64>) -> Option<Facet> {
    vertices.sort_unstable();
    let refs: Vec<&DVector<f64>> = vertices.iter().map(|&i| &points[i]).collect();
    let (mut normal, mut offset) = hyperplane(&refs)?;
    if normal.dot(interior) > offset {
        normal = -normal;
        offset = -offset;
    }
    Some(Facet {
        vertices,
        normal,
        offset,
    })
}

/// Facets of the convex hull of `points` (all of one dimension `d >= 2`). Points within
/// `1e-10` (relative to the point spread) of the current hull are treated as inside.
/// `None` if the points do not span `R^d`.
pub fn convex_hull(points: &[DVector<f64>]) -> Option<Vec<Facet>> {
    if points.is_empty() {
        return None;
    }
    let d = points[0].len();
    if d < 2 || points.len() <= d || points.iter().any(|p| p.len() != d || !p.iter().all(|v| v.is_finite())) {
        return None;
    }
    let spread = points.iter().map(|p| (p - &points[0]).norm()).fold(0.0f64, f64::max);
    let tol = 1e-10 * spread.max(f64::MIN_POSITIVE);
    let simplex = initial_simplex(points, tol)?;
    let interior = simplex.iter().map(|&i| &points[i]).sum::<DVector<f64>>() / simplex.len() as f64;

    let mut facets: Vec<Facet> = Vec::new();
    for skip in 0..simplex.len() {
        let verts = simplex.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &i)| i).collect();
        facets.push(oriented_facet(points, verts, &interior)?);
    }
    let mut added = vec![false; points.len()];
    for &i in &simplex {
        added[i] = true;
    }

    loop {
        // Farthest point above any facet goes in next.
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if added[i] {
                continue;
            }
            let height = facets.iter().map(|f| f.signed_distance(p)).fold(f64::NEG_INFINITY, f64::max);
            if height > tol && best.map_or(true, |(_, h)| height > h) {
                best = Some((i, height));
            }
        }
        let Some((apex, _)) = best else { break };
        added[apex] = true;
        let p = &points[apex];

        let (visible, kept): (Vec<Facet>, Vec<Facet>) = facets.into_iter().partition(|f| f.signed_distance(p) > tol);
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for f in &visible {
            for skip in 0..f.vertices.len() {
                let mut ridge = f.vertices.clone();
                ridge.remove(skip);
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        facets = kept;
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
        horizon.sort_unstable();
        for mut ridge in horizon {
            ridge.push(apex);
            if let Some(f) = oriented_facet(points, ridge, &interior) {
                facets.push(f);
            }
        }
    }
    Some(facets)
}
