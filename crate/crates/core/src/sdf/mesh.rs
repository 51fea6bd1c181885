//! Watertight triangle meshes with angle-weighted pseudo-normal sign tests.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Feature {
    Vertex(usize),
    Edge(usize, usize),
    Face,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    edge_normals: HashMap<(usize, usize), Vec3>,
    bounds: (Vec3, Vec3),
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    /// Validates and indexes a closed, consistently oriented (outward, counter-clockwise)
    /// triangle mesh.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || triangles.len() < 4 {
            return Err(Error::Mesh("mesh needs at least 4 triangles".into()));
        }
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Mesh("non-finite vertex".into()));
            }
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let diag = (hi - lo).norm();
        let area_tol = 1e-12 * diag * diag;

        let mut face_normals = Vec::with_capacity(triangles.len());
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = (b - a).cross(&(c - a));
            if 0.5 * n.norm() <= area_tol {
                return Err(Error::Mesh(format!("triangle {t} has (near) zero area")));
            }
            face_normals.push(n.normalize());
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::Mesh(format!(
                        "edge {e:?} used twice in the same direction (inconsistent orientation)"
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::Mesh(format!("edge ({a}, {b}) is open; mesh is not watertight")));
            }
        }

        let mut vertex_normals = vec![Vec3::zeros(); vertices.len()];
        let mut edge_normals: HashMap<(usize, usize), Vec3> = HashMap::new();
        let mut volume = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            let n = face_normals[t];
            for k in 0..3 {
                let i = tri[k];
                let e1 = (vertices[tri[(k + 1) % 3]] - vertices[i]).normalize();
                let e2 = (vertices[tri[(k + 2) % 3]] - vertices[i]).normalize();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                vertex_normals[i] += n * angle;
                *edge_normals.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert_with(Vec3::zeros) += n;
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            volume += a.dot(&b.cross(&c)) / 6.0;
        }
        if volume <= 0.0 {
            return Err(Error::Mesh("mesh encloses non-positive volume (faces point inward?)".into()));
        }
        for n in vertex_normals.iter_mut() {
            *n = n.normalize();
        }
        for n in edge_normals.values_mut() {
            *n = n.normalize();
        }
        Ok(TriMesh {
            vertices,
            triangles,
            face_normals,
            vertex_normals,
            edge_normals,
            bounds: ((lo + hi) * 0.5, (hi - lo) * 0.5),
        })
    }

    /// Icosahedron refined `subdivisions` times and pushed onto a sphere of `radius`.
    pub fn icosphere(radius: f64, subdivisions: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, vs: &mut Vec<Vec3>| {
                *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
                    vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                    vs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = vertices.into_iter().map(|v| v * radius).collect();
        TriMesh::new(vertices, faces).expect("icosphere is a valid closed mesh")
    }

    /// Reads a minimal Wavefront-style ASCII triangle list: `v x y z` and `f i j k`
    /// lines (1-based indices, `i/..` suffixes ignored, `#` comments).
    pub fn load_ascii(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_ascii(&text).map_err(|e| match e {
            Error::Mesh(m) => Error::Parse {
                path: path.into(),
                message: m,
            },
            other => other,
        })
    }

    pub fn parse_ascii(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            let bad = || Error::Mesh(format!("line {}: malformed `{line}`", lineno + 1));
            match it.next() {
                None => {}
                Some("v") => {
                    let c: Vec<f64> = it.map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
                    if c.len() != 3 {
                        return Err(bad());
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|s| {
                            s.split('/')
                                .next()
                                .and_then(|i| i.parse::<usize>().ok())
                                .filter(|&i| i >= 1)
                                .map(|i| i - 1)
                                .ok_or_else(bad)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() != 3 {
                        return Err(bad());
                    }
                    triangles.push([idx[0], idx[1], idx[2]]);
                }
                Some(_) => return Err(bad()),
            }
        }
        TriMesh::new(vertices, triangles)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        self.bounds
    }

    /// Brute-force closest triangle; sign from the pseudo-normal of the closest feature.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        let mut best_sign = 1.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let (c, feature) = closest_point_on_triangle(p, tri, &self.vertices);
            let d2 = (p - c).norm_squared();
            if d2 < best {
                best = d2;
                let normal = match feature {
                    Feature::Face => self.face_normals[t],
                    Feature::Vertex(i) => self.vertex_normals[i],
                    Feature::Edge(a, b) => self.edge_normals[&edge_key(a, b)],
                };
                best_sign = if (p - c).dot(&normal) < 0.0 { -1.0 } else { 1.0 };
            }
        }
        best_sign * best.sqrt()
    }
}

/// Closest point on a triangle and the feature it lies on (Voronoi region walk).
fn closest_point_on_triangle(p: &Vec3, tri: &[usize; 3], vs: &[Vec3]) -> (Vec3, Feature) {
    let [ia, ib, ic] = *tri;
    let (a, b, c) = (vs[ia], vs[ib], vs[ic]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, Feature::Vertex(ia));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, Feature::Vertex(ib));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(ia, ib));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, Feature::Vertex(ic));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(ia, ic));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(ib, ic));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}
