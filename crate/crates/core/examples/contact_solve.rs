//! Solving for hand joints that put every fingertip on the estimated surface.

use vtgrasp::contact::{data_collection_variant, solve_contact, ContactProblem, SolverOptions};
use vtgrasp::kinematics::HandArmModel;
use vtgrasp::preshape::{plan_preshape, PreshapeParams};
use vtgrasp::sdf::{EstimatedSdf, SdfScene};
use vtgrasp::Vec3;

fn main() -> vtgrasp::Result<()> {
    let model = HandArmModel::default_model();
    let est = EstimatedSdf::exact(SdfScene::sphere(0.05, Vec3::new(0.5, 0.0, 0.25)));
    let pre = plan_preshape(&model, &est, &PreshapeParams::default(), 32, 4).expect("a feasible preshape");
    let problem = ContactProblem::new(&model, &est, &pre.q0)?;

    let sol = solve_contact(&problem, &SolverOptions::default());
    println!("iter  alpha     cost        max|sdf|");
    for row in &sol.trace {
        println!("{:>4}  {:<8.5}  {:<10.3e}  {:.2e}", row.iteration, row.alpha, row.cost, row.max_tip_sdf);
    }
    println!("converged {} in {} iterations", sol.converged, sol.iterations);
    for (f, r) in sol.residuals.iter().enumerate() {
        println!("finger {f}: |sdf(p)| {:.1e}, gap {:.1e}, misalignment {:.1e}", r.sdf, r.gap, r.misalignment);
    }

    let fast = data_collection_variant(&problem, &SolverOptions::default());
    println!("alpha = 0 variant: converged {} in {} iterations", fast.converged, fast.iterations);
    Ok(())
}
