//! Fingertip poses and Jacobians of the bundled hand-arm model.

use vtgrasp::kinematics::{HandArmModel, JointConfig};

fn main() -> vtgrasp::Result<()> {
    let model = HandArmModel::default_model();
    println!("{} arm joints, {} fingers, {} hand joints", model.arm_dof(), model.finger_count(), model.hand_dof());

    let q = JointConfig::from_parts(&[0.0, 0.6, 0.0, -1.4, 0.0, 0.9, 0.0], &vec![0.2; model.hand_dof()]);
    let palm = model.palm_pose(&q)?;
    println!("palm at {:.4?}", palm.translation.vector.as_slice());
    for f in 0..model.finger_count() {
        let s = model.fingertip_state(&q, f)?;
        println!(
            "{:<7} tip {:.4?} normal {:.3?} |dtip/dq| {:.3}",
            model.fingers()[f].name,
            s.position.as_slice(),
            s.normal.as_slice(),
            s.position_jacobian.norm()
        );
    }
    Ok(())
}
