use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random_config(model: &HandArmModel, rng: &mut impl Rng) -> JointConfig {
    let values = model
        .lower()
        .iter()
        .zip(model.upper())
        .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
        .collect();
    JointConfig::new(values, model.arm_dof())
}

// Independent oracle: 4x4 homogeneous matrices, Rodrigues rotation, RPY composed by hand.
fn homogeneous(pose: &Pose) -> Matrix4<f64> {
    pose.to_homogeneous()
}

fn rodrigues(axis: &Vec3, angle: f64) -> Matrix4<f64> {
    let k = Matrix3::new(0.0, -axis.z, axis.y, axis.z, 0.0, -axis.x, -axis.y, axis.x, 0.0);
    let r = Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m
}

fn translation(v: &Vec3) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(v);
    m
}

fn joint_matrix(j: &Joint, value: f64) -> Matrix4<f64> {
    let motion = match j.kind {
        JointKind::Revolute => rodrigues(&j.axis, value),
        JointKind::Prismatic => translation(&(j.axis * value)),
    };
    homogeneous(&j.offset) * motion
}

fn oracle_tip(model: &HandArmModel, q: &JointConfig, finger: usize) -> Matrix4<f64> {
    let mut m = Matrix4::<f64>::identity();
    for (k, j) in model.arm_joints().iter().enumerate() {
        m *= joint_matrix(j, q.as_slice()[k]);
    }
    m *= homogeneous(model.palm_offset());
    let chain = &model.fingers()[finger];
    for (k, j) in chain.joints.iter().enumerate() {
        m *= joint_matrix(j, q.finger(finger)[k]);
    }
    m * homogeneous(&chain.tip_offset)
}

fn translate_only(name: &str, v: Vec3) -> Joint {
    Joint::revolute(name, Vec3::z(), Pose::translation(v.x, v.y, v.z), -PI, PI)
}

fn toy_finger(joints: Vec<Joint>, tip: Pose, normal: Vec3) -> FingerChain {
    FingerChain {
        name: "toy".into(),
        thumb: false,
        joints,
        tip_offset: tip,
        tip_normal: normal,
    }
}

#[test]
fn zero_config_translations_compose() {
    let joints = vec![
        translate_only("j0", Vec3::new(0.1, 0.0, 0.0)),
        translate_only("j1", Vec3::new(0.1, 0.0, 0.2)),
        translate_only("j2", Vec3::new(0.0, 0.0, 0.2)),
        translate_only("j3", Vec3::new(0.1, 0.0, 0.0)),
    ];
    let finger = toy_finger(joints, Pose::translation(0.0, 0.0, 0.1), Vec3::z());
    let model = HandArmModel::new(vec![], Pose::identity(), None, vec![finger]).unwrap();
    let q = JointConfig::zeros(&model);
    let p = model.fingertip_position(&q, 0).unwrap();
    assert!((p - Vec3::new(0.3, 0.0, 0.5)).norm() < 1e-12);
    assert!((model.fingertip_normal(&q, 0).unwrap() - Vec3::z()).norm() < 1e-12);
}

#[test]
fn single_revolute_quarter_turn() {
    let mut joints = vec![Joint::revolute("j0", Vec3::z(), Pose::identity(), -PI, PI)];
    for k in 1..4 {
        joints.push(Joint::revolute(format!("j{k}"), Vec3::z(), Pose::identity(), -PI, PI));
    }
    let finger = toy_finger(joints, Pose::translation(1.0, 0.0, 0.0), Vec3::z());
    let model = HandArmModel::new(vec![], Pose::identity(), None, vec![finger]).unwrap();
    let q = JointConfig::new(vec![PI / 2.0, 0.0, 0.0, 0.0], 0);
    let p = model.fingertip_position(&q, 0).unwrap();
    assert!((p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);

    // Jacobian column is omega x r: magnitude r, tangent to the circle.
    let j = model.fingertip_jacobian(&JointConfig::zeros(&model), 0).unwrap();
    assert!((j.column(0) - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn net_rotation_flips_normal() {
    let mut joints = vec![Joint::revolute("j0", Vec3::x(), Pose::identity(), -PI, PI)];
    for k in 1..4 {
        joints.push(Joint::revolute(format!("j{k}"), Vec3::x(), Pose::identity(), -PI, PI));
    }
    let finger = toy_finger(joints, Pose::identity(), Vec3::z());
    let model = HandArmModel::new(vec![], Pose::identity(), None, vec![finger]).unwrap();
    let q = JointConfig::new(vec![PI, 0.0, 0.0, 0.0], 0);
    let n = model.fingertip_normal(&q, 0).unwrap();
    assert!((n - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
}

#[test]
fn forward_kinematics_matches_transform_chain_oracle() {
    let model = HandArmModel::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let q = random_config(&model, &mut rng);
        for f in 0..model.finger_count() {
            let m = oracle_tip(&model, &q, f);
            let p = model.fingertip_position(&q, f).unwrap();
            let expected_p = Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
            assert!((p - expected_p).norm() < 1e-12, "{p} vs {expected_p}");
            let n = model.fingertip_normal(&q, f).unwrap();
            let expected_n = m.fixed_view::<3, 3>(0, 0) * model.fingers()[f].tip_normal;
            assert!((n - expected_n).norm() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }
}

fn assert_close_relative(analytic: f64, numeric: f64, rel: f64, scale: f64) {
    let err = (analytic - numeric).abs();
    assert!(
        err <= rel * analytic.abs().max(numeric.abs()).max(scale),
        "analytic {analytic} numeric {numeric}"
    );
}

#[test]
fn jacobians_match_central_differences() {
    let model = HandArmModel::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..100 {
        let q = random_config(&model, &mut rng);
        for f in 0..model.finger_count() {
            let s = model.fingertip_state(&q, f).unwrap();
            for c in 0..model.dof() {
                let mut qp = q.clone();
                qp.values_mut()[c] += h;
                let mut qm = q.clone();
                qm.values_mut()[c] -= h;
                let dp = (model.fingertip_position(&qp, f).unwrap()
                    - model.fingertip_position(&qm, f).unwrap())
                    / (2.0 * h);
                let dn = (model.fingertip_normal(&qp, f).unwrap()
                    - model.fingertip_normal(&qm, f).unwrap())
                    / (2.0 * h);
                for r in 0..3 {
                    // Absolute floor keeps near-zero entries from dominating the ratio.
                    assert_close_relative(s.position_jacobian[(r, c)], dp[r], 1e-5, 1e-3);
                    assert_close_relative(s.normal_jacobian[(r, c)], dn[r], 1e-5, 1e-3);
                }
            }
        }
    }
}

#[test]
fn columns_off_the_chain_are_zero() {
    let model = HandArmModel::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_config(&model, &mut rng);
    for f in 0..model.finger_count() {
        let s = model.fingertip_state(&q, f).unwrap();
        let own = model.finger_offset(f)..model.finger_offset(f) + FINGER_DOF;
        for c in model.arm_dof()..model.dof() {
            if !own.contains(&c) {
                assert_eq!(s.position_jacobian.column(c).norm(), 0.0);
                assert_eq!(s.normal_jacobian.column(c).norm(), 0.0);
            }
        }
    }
}

#[test]
fn other_fingers_do_not_move_a_fingertip() {
    let model = HandArmModel::default_model();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = random_config(&model, &mut rng);
        for f in 0..model.finger_count() {
            let before = model.fingertip_position(&q, f).unwrap();
            for g in (0..model.finger_count()).filter(|&g| g != f) {
                let mut q2 = q.clone();
                for v in q2.finger_mut(g) {
                    *v += 0.3;
                }
                assert_eq!(model.fingertip_position(&q2, f).unwrap(), before);
            }
        }
    }
}

#[test]
fn default_model_shape() {
    let model = HandArmModel::default_model();
    assert_eq!(model.arm_dof(), 7);
    assert_eq!(model.hand_dof(), 16);
    assert_eq!(model.dof(), model.arm_dof() + model.hand_dof());
    assert_eq!(model.finger_count(), 4);
    assert_eq!(model.fingers().iter().filter(|f| f.thumb).count(), 1);
    assert!(model.lower().iter().zip(model.upper()).all(|(l, u)| l <= u));
}

#[test]
fn errors_on_bad_input() {
    let model = HandArmModel::default_model();
    let short = JointConfig::new(vec![0.0; 5], 1);
    assert!(matches!(
        model.fingertip_position(&short, 0),
        Err(Error::Dimension { expected: 23, got: 5 }) | Err(Error::Dimension { .. })
    ));
    let q = JointConfig::zeros(&model);
    assert!(matches!(model.fingertip_position(&q, 4), Err(Error::FingerIndex { .. })));

    let three = toy_finger(
        (0..3)
            .map(|k| Joint::revolute(format!("j{k}"), Vec3::z(), Pose::identity(), -1.0, 1.0))
            .collect(),
        Pose::identity(),
        Vec3::z(),
    );
    assert!(HandArmModel::new(vec![], Pose::identity(), None, vec![three]).is_err());
    let inverted = toy_finger(
        (0..4)
            .map(|k| Joint::revolute(format!("j{k}"), Vec3::z(), Pose::identity(), 1.0, -1.0))
            .collect(),
        Pose::identity(),
        Vec3::z(),
    );
    assert!(HandArmModel::new(vec![], Pose::identity(), None, vec![inverted]).is_err());
}

#[test]
fn model_description_round_trips() {
    let model = HandArmModel::default_model();
    let text = ModelDescription::from_model(&model).to_toml_string();
    let again = ModelDescription::from_toml_str(&text).unwrap().build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = random_config(&model, &mut rng);
    for f in 0..4 {
        let a = model.fingertip_position(&q, f).unwrap();
        let b = again.fingertip_position(&q, f).unwrap();
        assert!((a - b).norm() < 1e-12);
    }
    assert!(ModelDescription::from_toml_str(&text.replace(MODEL_FORMAT, "vtgrasp-model/0")).is_err());
}

#[test]
fn clamp_to_bounds_is_idempotent() {
    let model = HandArmModel::default_model();
    let mut q = JointConfig::new(vec![10.0; model.dof()], model.arm_dof());
    assert!(!q.within_bounds(&model));
    q.clamp_to_bounds(&model);
    assert!(q.within_bounds(&model));
    assert_eq!(q.as_slice(), model.upper());
}
