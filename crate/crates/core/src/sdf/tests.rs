use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn unit_sphere() -> SdfScene {
    SdfScene::sphere(1.0, Vec3::zeros())
}

fn unit_box() -> SdfScene {
    SdfScene::cuboid(Vec3::repeat(0.5), Pose::identity())
}

fn random_in_cube(rng: &mut impl Rng, half: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half))
}

/// Dense grid on the surface of an axis-aligned box.
fn box_surface_samples(h: &Vec3, n: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
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

#[test]
fn sphere_values() {
    let s = unit_sphere().sdf_query(&Vec3::new(2.0, 0.0, 0.0));
    assert_eq!(s.distance, 1.0);
    assert_eq!(s.gradient, Vec3::x());
    assert_eq!(unit_sphere().distance(&Vec3::zeros()), -1.0);
}

#[test]
fn box_corner_region_matches_surface_oracle() {
    let scene = unit_box();
    let p = Vec3::new(1.5, 1.5, 0.0);
    let s = scene.sdf_query(&p);
    assert!((s.distance - 2f64.sqrt()).abs() < 1e-9);

    let samples = box_surface_samples(&Vec3::repeat(0.5), 200);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let dir = random_in_cube(&mut rng, 1.0).map(|c| c.abs() + 0.2);
        let p = Vec3::repeat(0.5) + dir;
        let oracle = samples.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
        assert!((scene.distance(&p) - oracle).abs() < 1e-4);
    }
}

#[test]
fn surface_projection() {
    let p = surface_project(&unit_sphere(), &Vec3::new(3.0, 0.0, 0.0), 1).unwrap();
    assert!((p - Vec3::x()).norm() < 1e-12);
    let on = Vec3::new(0.0, 1.0, 0.0);
    assert_eq!(surface_project(&unit_sphere(), &on, 10).unwrap(), on);

    let scene = unit_box();
    let samples = box_surface_samples(&Vec3::repeat(0.5), 400);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let p = Vec3::repeat(0.5) + random_in_cube(&mut rng, 1.0).map(|c| c.abs() + 0.1);
        let projected = surface_project(&scene, &p, 20).unwrap();
        let nearest = samples
            .iter()
            .min_by(|a, b| (p - *a).norm().total_cmp(&(p - *b).norm()))
            .unwrap();
        assert!((projected - nearest).norm() < 1e-5, "{projected} vs {nearest}");
    }
}

struct Flat;

impl SignedDistance for Flat {
    fn query(&self, _: &Vec3) -> SdfSample {
        SdfSample { distance: 0.5, gradient: Vec3::zeros() }
    }
    fn center(&self) -> Vec3 {
        Vec3::zeros()
    }
    fn half_diagonal(&self) -> f64 {
        0.0
    }
}

#[test]
fn projection_failure_reports_residual() {
    let err = surface_project(&Flat, &Vec3::zeros(), 5).unwrap_err();
    assert_eq!(err.residual, 0.5);
    // Zero iterations from off the surface cannot converge.
    let err = surface_project(&unit_sphere(), &Vec3::new(3.0, 0.0, 0.0), 0).unwrap_err();
    assert!((err.residual - 2.0).abs() < 1e-12);
}

fn primitive_scenes() -> Vec<SdfScene> {
    let pose = Pose::new(Vec3::new(0.1, -0.2, 0.3), Vec3::new(0.3, -0.5, 0.8));
    vec![
        SdfScene::sphere(0.4, Vec3::new(0.1, 0.0, -0.1)),
        SdfScene::cuboid(Vec3::new(0.3, 0.2, 0.5), pose),
        SdfScene::new(Shape::Cylinder { radius: 0.3, half_height: 0.4 }, pose, 1.0).unwrap(),
        SdfScene::new(Shape::Capsule { radius: 0.2, half_height: 0.3 }, pose, 1.5).unwrap(),
    ]
}

#[test]
fn eikonal_on_exterior_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for scene in primitive_scenes() {
        let mut n = 0;
        while n < 1000 {
            let p = random_in_cube(&mut rng, 2.0);
            let s = scene.sdf_query(&p);
            if s.distance <= 0.0 {
                continue;
            }
            let g = s.gradient.norm();
            assert!((0.99..=1.01).contains(&g));
            // Analytic gradient agrees with the field itself.
            let h = 1e-6;
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = h;
                let fd = (scene.distance(&(p + e)) - scene.distance(&(p - e))) / (2.0 * h);
                assert!((fd - s.gradient[i]).abs() < 1e-4);
            }
            n += 1;
        }
    }
}

#[test]
fn sign_consistency() {
    let h = Vec3::new(0.3, 0.2, 0.5);
    let boxed = SdfScene::cuboid(h, Pose::identity());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let u = Vec3::new(rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99));
        assert!(boxed.distance(&u.component_mul(&h)) < 0.0);
        let mut out = u.component_mul(&h);
        let k = rng.gen_range(0..3);
        out[k] = h[k] * rng.gen_range(1.01..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        assert!(boxed.distance(&out) > 0.0);
    }
}

#[test]
fn icosphere_mesh_agrees_with_sphere() {
    let r = 0.05;
    let mesh = SdfScene::new(Shape::Mesh(Arc::new(TriMesh::icosphere(r, 3))), Pose::identity(), 1.0).unwrap();
    let sphere = SdfScene::sphere(r, Vec3::zeros());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut n = 0;
    while n < 1000 {
        let p = random_in_cube(&mut rng, 2.0 * r);
        if p.norm() > 2.0 * r {
            continue;
        }
        let d_mesh = mesh.distance(&p);
        let d_true = sphere.distance(&p);
        assert!((d_mesh - d_true).abs() <= 0.02 * r, "{d_mesh} vs {d_true} at {p}");
        n += 1;
    }
}

#[test]
fn mesh_validation() {
    let ico = TriMesh::icosphere(1.0, 0);
    let mut tris = ico.triangles().to_vec();
    tris.pop();
    assert!(TriMesh::new(ico.vertices().to_vec(), tris).is_err(), "open mesh accepted");

    let mut flipped = ico.triangles().to_vec();
    flipped[0].swap(1, 2);
    assert!(TriMesh::new(ico.vertices().to_vec(), flipped).is_err(), "inconsistent orientation accepted");

    let inward: Vec<[usize; 3]> = ico.triangles().iter().map(|t| [t[0], t[2], t[1]]).collect();
    assert!(TriMesh::new(ico.vertices().to_vec(), inward).is_err(), "inside-out mesh accepted");

    let mut v = ico.vertices().to_vec();
    let t = ico.triangles()[0];
    v[t[1]] = v[t[0]];
    assert!(TriMesh::new(v, ico.triangles().to_vec()).is_err(), "zero-area triangle accepted");
}

#[test]
fn ascii_mesh_parsing() {
    let text = "# tetrahedron\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";
    let mesh = TriMesh::parse_ascii(text).unwrap();
    assert_eq!(mesh.triangles().len(), 4);
    assert!(mesh.signed_distance(&Vec3::repeat(0.1)) < 0.0);
    assert!((mesh.signed_distance(&Vec3::new(-1.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
    assert!(TriMesh::parse_ascii("v 0 0\n").is_err());
    assert!(TriMesh::parse_ascii("v 0 0 0\nf 0 1 2\n").is_err());
}

#[test]
fn scene_file_round_trip() {
    let desc = SceneDescription {
        format: SCENE_FORMAT.into(),
        object: ObjectDescription {
            shape: ShapeDescription::Box { half_extents: [0.03, 0.03, 0.05] },
            pose: crate::kinematics::PoseDescription {
                translation: [0.5, 0.0, 0.25],
                rpy: [0.0, 0.0, 0.3],
            },
            scale: 1.0,
        },
    };
    let text = desc.to_toml_string();
    let back = SceneDescription::from_toml_str(&text).unwrap();
    assert_eq!(back, desc);
    let scene = back.build(None).unwrap();
    assert!((scene.center() - Vec3::new(0.5, 0.0, 0.25)).norm() < 1e-12);
    assert!(SceneDescription::from_toml_str(&text.replace(SCENE_FORMAT, "other/1")).is_err());

    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("tet.obj");
    std::fs::write(&mesh_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n").unwrap();
    let scene_path = dir.path().join("scene.toml");
    std::fs::write(
        &scene_path,
        format!("format = \"{SCENE_FORMAT}\"\n[object]\nshape = {{ kind = \"mesh\", path = \"tet.obj\" }}\n"),
    )
    .unwrap();
    let scene = SdfScene::load(&scene_path).unwrap();
    assert!(scene.distance(&Vec3::repeat(0.1)) < 0.0);
}

#[test]
fn estimated_identity_and_bias() {
    let base = SdfScene::sphere(0.05, Vec3::zeros());
    let exact = EstimatedSdf::new(base.clone(), 0.0, 0.0, 99, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = random_in_cube(&mut rng, 0.2);
        assert_eq!(exact.query(&p), base.sdf_query(&p));
    }
    let biased = EstimatedSdf::new(base, 0.005, 0.0, 0, 0.05).unwrap();
    assert!((biased.distance(&Vec3::new(0.05, 0.0, 0.0)) - 0.005).abs() < 1e-15);
}

#[test]
fn estimated_noise_is_deterministic_and_bounded() {
    let base = SdfScene::sphere(0.05, Vec3::zeros());
    let est = EstimatedSdf::new(base.clone(), -0.008, 0.004, 42, 0.03).unwrap();
    let other = EstimatedSdf::new(base.clone(), -0.008, 0.004, 43, 0.03).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut differs = false;
    for _ in 0..200 {
        let p = random_in_cube(&mut rng, 0.2);
        let a = est.query(&p);
        let b = est.query(&p);
        assert_eq!(a.distance.to_bits(), b.distance.to_bits());
        assert_eq!(a.gradient, b.gradient);
        let dev = a.distance - base.distance(&p) + 0.008;
        assert!(dev.abs() <= 0.004 + 1e-12);
        differs |= other.distance(&p) != a.distance;
    }
    assert!(differs);
}

proptest! {
    #[test]
    fn value_noise_is_bounded_and_continuous(
        x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0, seed in any::<u64>()
    ) {
        let p = Vec3::new(x, y, z);
        let v = value_noise(&p, 0.5, seed);
        prop_assert!((-1.0..=1.0).contains(&v));
        let w = value_noise(&(p + Vec3::repeat(1e-7)), 0.5, seed);
        prop_assert!((v - w).abs() < 1e-5);
    }

    #[test]
    fn sphere_sign_matches_radius(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let p = Vec3::new(x, y, z);
        let d = SdfScene::sphere(0.5, Vec3::zeros()).distance(&p);
        prop_assert!((d - (p.norm() - 0.5)).abs() < 1e-15);
    }
}
