use std::path::Path;

use vtgrasp::harness::{run_episode_detailed, run_trial, Experiment, ExperimentConfig, SceneSource};
use vtgrasp::kinematics::{JointConfig, FINGER_DOF};
use vtgrasp::sdf::SignedDistance;
use vtgrasp::tactile::{FingerPhase, StopReason, Variant, PRESSURE_THRESHOLD, SENSOR_STIFFNESS};

fn sphere_experiment(bias: f64, noise: f64) -> Experiment {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenes/sphere.toml");
    let mut cfg = ExperimentConfig::new(SceneSource::File(scene));
    cfg.perturbation.offset_bias = bias;
    cfg.perturbation.noise_amplitude = noise;
    Experiment::new(cfg, None).unwrap()
}

#[test]
fn exact_estimate_contacts_arrive_when_the_sensor_model_predicts() {
    let exp = sphere_experiment(0.0, 0.0);
    let mut checked = 0;
    for trial in 0..6 {
        let d = run_episode_detailed(&exp, trial, Variant::Ours).unwrap();
        let (Some(sol), Some(report)) = (&d.solution, &d.report) else { continue };
        if !sol.converged {
            continue;
        }
        checked += 1;
        assert_eq!(report.fingertips_in_contact, 4, "trial {trial}");
        for f in 0..4 {
            // First tick after which the fingertip is pressed past the threshold depth;
            // the next sample sees it and the tenth such sample fires.
            let mut hand = report.q_hand_contact.clone();
            let crossing = report
                .trace
                .iter()
                .filter(|r| r.finger == f)
                .find(|r| {
                    hand[f * FINGER_DOF..(f + 1) * FINGER_DOF].copy_from_slice(&r.joints);
                    let q = JointConfig::from_parts(&report.q_arm, &hand);
                    let tip = exp.model.fingertip_position(&q, f).unwrap();
                    SENSOR_STIFFNESS * (-exp.scene.distance(&tip)).max(0.0) >= PRESSURE_THRESHOLD
                })
                .map(|r| r.tick)
                .expect("finger reaches threshold depth");
            let predicted = crossing + 10;
            let actual = report.fingers[f].contact_tick.unwrap();
            assert!(actual.abs_diff(predicted) <= 2, "trial {trial} finger {f}: fired {actual}, predicted {predicted}");
            assert_eq!(report.fingers[f].phase, FingerPhase::Stopped(StopReason::Contact));
        }
    }
    assert!(checked >= 3, "only {checked} converged solves");
}

#[test]
fn gradient_budget_recovers_contacts_under_outward_bias() {
    let mut exp = sphere_experiment(-0.008, 0.0);
    exp.config.variants = vec![Variant::Ours, Variant::NoGradient];
    let (mut with, mut without) = (0, 0);
    for trial in 0..20 {
        let records = run_trial(&exp, trial).unwrap();
        with += records[0].fingertips_in_contact;
        without += records[1].fingertips_in_contact;
        assert!(records[0].fingertips_in_contact >= records[1].fingertips_in_contact);
    }
    assert!(with > without, "with budget {with}, without {without}");
}

#[test]
fn tactile_closing_disturbs_less_than_the_heuristic_close() {
    let mut exp = sphere_experiment(-0.004, 0.004);
    exp.config.variants = vec![Variant::Ours, Variant::HeuristicB1];
    let (mut ours, mut b1) = (0u32, 0u32);
    for trial in 0..30 {
        let records = run_trial(&exp, trial).unwrap();
        ours += records[0].disturbance.score() as u32;
        b1 += records[1].disturbance.score() as u32;
    }
    assert!(ours <= b1, "ours {ours} heuristic {b1}");
}

#[test]
fn extracted_contacts_lie_on_the_true_surface() {
    let exp = sphere_experiment(-0.004, 0.003);
    let mut contacts = 0;
    for trial in 0..20 {
        let variant = if trial % 2 == 0 { Variant::Ours } else { Variant::HeuristicB1 };
        let d = run_episode_detailed(&exp, trial, variant).unwrap();
        let Some(state) = d.contacts else { continue };
        for c in &state.contacts {
            contacts += 1;
            assert!(exp.scene.distance(&c.point).abs() <= 1e-6);
            let outward = (c.point - exp.scene.center()).normalize();
            assert!((c.normal + outward).norm() < 1e-6);
        }
    }
    assert!(contacts > 0);
}
