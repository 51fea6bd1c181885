use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kinematics::{FingerChain, Joint, FINGER_DOF};

use crate::check::oracle::polytope_distance as oracle_distance;

fn random_polytope(rng: &mut impl Rng, radius: f64) -> ConvexHull {
    loop {
        let n = rng.gen_range(4..=20);
        let v: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    * radius
            })
            .collect();
        if let Ok(h) = ConvexHull::new(v) {
            return h;
        }
    }
}

fn random_pose(rng: &mut impl Rng, spread: f64) -> Pose {
    let t = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * spread;
    let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Pose::new(t, axis * rng.gen_range(0.0..PI))
}

fn unit_cube() -> ConvexHull {
    ConvexHull::cuboid(Vec3::repeat(-0.5), Vec3::repeat(0.5))
}

#[test]
fn separated_cubes() {
    let r = gjk_distance(&unit_cube(), &Pose::identity(), &unit_cube(), &Pose::translation(3.0, 0.0, 0.0));
    assert!(!r.intersecting);
    assert!(r.exact);
    assert!((r.distance - 2.0).abs() < 1e-9);
}

#[test]
fn identical_cubes_intersect() {
    let r = gjk_distance(&unit_cube(), &Pose::identity(), &unit_cube(), &Pose::identity());
    assert!(r.intersecting);
    assert_eq!(r.distance, 0.0);
}

/// Two random polytopes separated by the plane x = 0 (gap `gap`), then posed rigidly.
fn disjoint_pair(rng: &mut impl Rng, gap: f64) -> (ConvexHull, Pose, ConvexHull, Pose) {
    let a = random_polytope(rng, 1.0);
    let b = random_polytope(rng, 1.0);
    let max_a = a.vertices().iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let min_b = b.vertices().iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let world = random_pose(rng, 2.0);
    let pa = world * Pose::translation(-max_a - gap / 2.0, 0.0, 0.0);
    let pb = world * Pose::translation(-min_b + gap / 2.0, 0.0, 0.0);
    (a, pa, b, pb)
}

#[test]
fn matches_brute_force_on_random_disjoint_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let gap = 10f64.powf(rng.gen_range(-3.0..0.0));
        let (a, pa, b, pb) = disjoint_pair(&mut rng, gap);
        let wa: Vec<Vec3> = a.world_vertices(&pa).collect();
        let wb: Vec<Vec3> = b.world_vertices(&pb).collect();
        let expected = oracle_distance(&wa, &wb);
        assert!(expected >= gap - 1e-9);
        let r = gjk_distance(&a, &pa, &b, &pb);
        assert!(!r.intersecting, "oracle {expected} result {r:?}");
        assert!(r.iterations <= GJK_MAX_ITERATIONS);
        assert!((r.distance - expected).abs() < 1e-6, "gjk {} oracle {expected}", r.distance);
    }
}

#[test]
fn constructed_overlaps_are_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let a = random_polytope(&mut rng, 1.0);
        let b = random_polytope(&mut rng, 1.0);
        let pa = random_pose(&mut rng, 2.0);
        // Place a vertex of b on a point strictly inside a (its vertex centroid).
        let inside = pa * nalgebra::Point3::from(
            a.vertices().iter().sum::<Vec3>() / a.vertices().len() as f64,
        );
        let rot = random_pose(&mut rng, 0.0).rotation;
        let vb = rot * b.vertices()[0];
        let pb = Pose::from_parts((inside.coords - vb).into(), rot);
        let r = gjk_distance(&a, &pa, &b, &pb);
        assert!(r.intersecting, "distance {}", r.distance);
    }
}

#[test]
fn degenerate_point_hull() {
    let p = ConvexHull::degenerate(vec![Vec3::zeros()]).unwrap();
    let r = gjk_distance(&p, &Pose::translation(0.0, 0.0, 2.0), &unit_cube(), &Pose::identity());
    assert!((r.distance - 1.5).abs() < 1e-9);
    assert!(ConvexHull::new(vec![Vec3::x(), Vec3::y(), Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_translation_invariant(seed in any::<u64>(), shift in prop::array::uniform3(-5.0f64..5.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_polytope(&mut rng, 1.0);
        let b = random_polytope(&mut rng, 1.0);
        let pa = random_pose(&mut rng, 1.0);
        let pb = random_pose(&mut rng, 3.0);
        let ab = gjk_distance(&a, &pa, &b, &pb);
        let ba = gjk_distance(&b, &pb, &a, &pa);
        prop_assert!((ab.distance - ba.distance).abs() < 1e-9);
        prop_assert_eq!(ab.intersecting, ba.intersecting);
        let g = random_pose(&mut rng, 0.0) * Pose::translation(shift[0], shift[1], shift[2]);
        let moved = gjk_distance(&a, &(g * pa), &b, &(g * pb));
        prop_assert!((ab.distance - moved.distance).abs() < 1e-9);
    }
}

#[test]
fn open_hand_is_collision_free() {
    let model = HandArmModel::default_model();
    let q = JointConfig::zeros(&model);
    assert_eq!(self_coll(&model, &q).unwrap(), 0);
}

#[test]
fn pair_set_excludes_adjacent_and_arm_links() {
    let model = HandArmModel::default_model();
    let links = model.links();
    let pairs = CollisionPairSet::for_model(&model);
    assert!(!pairs.pairs().is_empty());
    for &(a, b) in pairs.pairs() {
        assert!(links[a].kind.is_hand() && links[b].kind.is_hand());
        assert_ne!(links[a].parent, Some(b));
        assert_ne!(links[b].parent, Some(a));
    }
}

#[test]
fn thumb_driven_into_index_collides() {
    let model = HandArmModel::default_model();
    let thumb = model.fingers().iter().position(|f| f.thumb).unwrap();
    let index = 0;
    let links = model.links();
    let index_distal = links
        .iter()
        .position(|l| l.kind == crate::kinematics::LinkKind::Finger { finger: index, joint: 3 })
        .unwrap();
    let hull_center = {
        let v = links[index_distal].hull.as_ref().unwrap().vertices();
        v.iter().sum::<Vec3>() / v.len() as f64
    };
    // Coordinate search over thumb and index joints: bring the thumb tip onto the
    // center of the index distal link.
    let target = |q: &JointConfig| {
        let poses = model.link_poses(q).unwrap();
        let c = (poses[index_distal] * nalgebra::Point3::from(hull_center)).coords;
        (model.fingertip_position(q, thumb).unwrap() - c).norm()
    };
    let mut q = JointConfig::zeros(&model);
    let mut step = 0.2;
    let joints: Vec<usize> = (0..FINGER_DOF)
        .flat_map(|k| [model.finger_offset(thumb) + k, model.finger_offset(index) + k])
        .collect();
    let mut best = target(&q);
    while step > 1e-4 {
        let mut improved = false;
        for &j in &joints {
            for s in [step, -step] {
                let mut trial = q.clone();
                trial.values_mut()[j] += s;
                trial.clamp_to_bounds(&model);
                let v = target(&trial);
                if v < best {
                    best = v;
                    q = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    assert!(best < 5e-3, "search got within {best}");
    assert!(self_coll(&model, &q).unwrap() >= 1);
}

fn toy_two_link_model() -> HandArmModel {
    let finger = |name: &str, y: f64| FingerChain {
        name: name.into(),
        thumb: false,
        joints: (0..FINGER_DOF)
            .map(|k| {
                let j = Joint::revolute(
                    format!("{name}{k}"),
                    Vec3::z(),
                    if k == 0 { Pose::translation(0.0, y, 0.0) } else { Pose::identity() },
                    -PI,
                    PI,
                );
                if k == FINGER_DOF - 1 {
                    j.with_hull(ConvexHull::cuboid(Vec3::repeat(-0.1), Vec3::repeat(0.1)))
                } else {
                    j
                }
            })
            .collect(),
        tip_offset: Pose::identity(),
        tip_normal: Vec3::z(),
    };
    HandArmModel::new(vec![], Pose::identity(), None, vec![finger("a", 0.0), finger("b", 5.0)]).unwrap()
}

#[test]
fn toy_model_never_collides() {
    let model = toy_two_link_model();
    assert_eq!(CollisionPairSet::for_model(&model).pairs().len(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = (0..model.dof()).map(|_| rng.gen_range(-PI..PI)).collect();
        let q = JointConfig::new(v, 0);
        assert_eq!(self_coll(&model, &q).unwrap(), 0);
    }
}
