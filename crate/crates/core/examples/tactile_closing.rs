//! Closing the hand on a sphere the planner believes is 8 mm larger than it is.

use vtgrasp::contact::{solve_contact, ContactProblem, SolverOptions};
use vtgrasp::kinematics::HandArmModel;
use vtgrasp::preshape::{plan_preshape, PreshapeParams};
use vtgrasp::sdf::{EstimatedSdf, SdfScene};
use vtgrasp::tactile::{close_hand, ClosingParams, Variant};
use vtgrasp::Vec3;

fn main() -> vtgrasp::Result<()> {
    let model = HandArmModel::default_model();
    let truth = SdfScene::sphere(0.05, Vec3::new(0.5, 0.0, 0.25));
    let est = EstimatedSdf::new(truth.clone(), -0.008, 0.0, 0, 0.03)?;
    let pre = plan_preshape(&model, &est, &PreshapeParams::default(), 32, 1).expect("a feasible preshape");
    let sol = solve_contact(&ContactProblem::new(&model, &est, &pre.q0)?, &SolverOptions::default());
    let params = ClosingParams::default();

    for variant in Variant::ALL {
        let report = close_hand(&model, &truth, &est, &pre.q0, Some(&sol.q_hand), variant, &params)?;
        let phases: Vec<String> = report.fingers.iter().map(|f| f.phase.to_string()).collect();
        println!(
            "{:<13} {} fingertips in contact after {:>3} ticks, disturbance {:<7} [{}]",
            variant.name(),
            report.fingertips_in_contact,
            report.ticks,
            report.disturbance.name(),
            phases.join(", ")
        );
    }
    Ok(())
}
