//! GJK distance between convex hulls, and the hand's self-collision count.

use vtgrasp::collision::{gjk_distance, self_coll, ConvexHull};
use vtgrasp::kinematics::{HandArmModel, JointConfig};
use vtgrasp::{Pose, Vec3};

fn main() -> vtgrasp::Result<()> {
    let cube = ConvexHull::cuboid(Vec3::repeat(-0.01), Vec3::repeat(0.01));
    for x in [0.05, 0.021, 0.015] {
        let r = gjk_distance(&cube, &Pose::identity(), &cube, &Pose::translation(x, 0.0, 0.0));
        println!("cubes {x:.3} m apart: distance {:.4}, intersecting {}, {} iterations", r.distance, r.intersecting, r.iterations);
    }

    let model = HandArmModel::default_model();
    let mut q = JointConfig::from_parts(&[0.0, 0.6, 0.0, -1.4, 0.0, 0.9, 0.0], &vec![0.0; model.hand_dof()]);
    println!("open hand: {} colliding link pairs", self_coll(&model, &q)?);
    let upper = model.hand_upper().to_vec();
    q.set_hand(&upper);
    println!("fully closed hand: {} colliding link pairs", self_coll(&model, &q)?);
    Ok(())
}
