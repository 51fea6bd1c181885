//! Sampling and refining an open-hand preshape around an object.

use vtgrasp::kinematics::HandArmModel;
use vtgrasp::preshape::{plan_preshape, sample_preshapes, PreshapeParams};
use vtgrasp::sdf::{EstimatedSdf, SdfScene};
use vtgrasp::Vec3;

fn main() {
    let model = HandArmModel::default_model();
    let est = EstimatedSdf::exact(SdfScene::sphere(0.05, Vec3::new(0.5, 0.0, 0.25)));
    let params = PreshapeParams::default();

    let samples = sample_preshapes(&model, &est, &params, 16, 1);
    let feasible = samples.iter().filter(|c| c.feasible).count();
    println!("{feasible}/{} samples feasible", samples.len());

    match plan_preshape(&model, &est, &params, 32, 1) {
        Some(best) => println!(
            "best preshape: score {:.5}, palm at {:.4?}, arm {:.3?}",
            best.score,
            best.palm_pose.translation.vector.as_slice(),
            best.q0.arm()
        ),
        None => println!("no feasible preshape"),
    }
}
