use super::*;
use crate::grasp_eval::GraspQuality;
use crate::sdf::{ObjectDescription, SceneDescription, ShapeDescription, SCENE_FORMAT};
use crate::kinematics::PoseDescription;
use crate::tactile::{Disturbance, FingerPhase, StopReason, Variant};

fn sphere_scene() -> SceneSource {
    SceneSource::Inline(SceneDescription {
        format: SCENE_FORMAT.into(),
        object: ObjectDescription {
            shape: ShapeDescription::Sphere { radius: 0.05 },
            pose: PoseDescription {
                translation: [0.5, 0.0, 0.25],
                ..PoseDescription::default()
            },
            scale: 1.0,
        },
    })
}

fn record(trial: usize, variant: Variant, tips: usize, disturbance: Disturbance, closure: bool) -> EpisodeRecord {
    EpisodeRecord {
        trial,
        seed: trial as u64,
        variant,
        stage: Stage::Completed,
        preshape_feasible: true,
        preshape_score: Some(0.1),
        solve: Some(SolveSummary {
            converged: true,
            iterations: 7,
            max_tip_sdf: 1e-4,
        }),
        fingertips_in_contact: tips,
        phases: vec![FingerPhase::Stopped(StopReason::Contact); 4],
        contact_ticks: vec![Some(50); 4],
        disturbance,
        disturbance_depth: 0.0,
        plan_ticks: 60,
        close_ticks: 70,
        q_hand: vec![0.0; 16],
        quality: GraspQuality {
            is_closure: closure,
            epsilon: if closure { 0.2 } else { 0.0 },
        },
        contacts_dropped: 0,
        timing: StageTiming::default(),
    }
}

#[test]
fn single_record_summary_equals_the_record() {
    let r = record(0, Variant::Ours, 3, Disturbance::Tilted, true);
    let s = &aggregate(std::slice::from_ref(&r))[0];
    assert_eq!(s.episodes, 1);
    assert_eq!(s.mean_fingertips_in_contact, 3.0);
    assert_eq!(s.fingertip_histogram, vec![0, 0, 0, 1, 0]);
    assert_eq!(s.disturbance_counts, [0, 1, 0]);
    assert_eq!(s.mean_disturbance_score, 1.0);
    assert_eq!(s.force_closure_rate, 1.0);
    assert_eq!(s.mean_epsilon, 0.2);
    assert_eq!(s.solver_convergence_rate(), Some(1.0));
}

#[test]
fn records_are_partitioned_by_variant() {
    let mut records = vec![
        record(0, Variant::Ours, 4, Disturbance::None, true),
        record(0, Variant::HeuristicB1, 2, Disturbance::Knocked, false),
        record(1, Variant::Ours, 2, Disturbance::None, false),
        record(1, Variant::HeuristicB1, 4, Disturbance::Tilted, true),
    ];
    records[1].solve = None;
    records[3].solve = None;
    records.push(EpisodeRecord {
        stage: Stage::PreshapeFailed,
        fingertips_in_contact: 0,
        phases: vec![],
        solve: None,
        ..record(2, Variant::Ours, 0, Disturbance::None, false)
    });
    let summaries = aggregate(&records);
    assert_eq!(summaries.len(), 2);
    let ours = &summaries[0];
    assert_eq!(ours.variant, Variant::Ours);
    assert_eq!(ours.episodes, 3);
    assert_eq!(ours.preshape_failed, 1);
    assert_eq!(ours.mean_fingertips_in_contact, 2.0);
    assert_eq!(ours.solver_runs, 2);
    let b1 = &summaries[1];
    assert_eq!(b1.variant, Variant::HeuristicB1);
    assert_eq!(b1.disturbance_counts, [0, 1, 1]);
    assert_eq!(b1.mean_disturbance_score, 1.5);
    assert_eq!(b1.solver_convergence_rate(), None);
    for s in &summaries {
        assert_eq!(s.fingertip_histogram.iter().sum::<usize>(), s.episodes);
        assert_eq!(s.disturbance_counts.iter().sum::<usize>(), s.episodes);
    }
}

#[test]
fn csv_outputs_have_one_row_per_record_and_variant() {
    let records = vec![
        record(0, Variant::Ours, 4, Disturbance::None, true),
        record(0, Variant::OpenLoopB5, 1, Disturbance::None, false),
    ];
    let text = String::from_utf8(records_csv(&records).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("trial,seed,variant,stage"));
    assert!(lines[1].contains(",ours,completed,"));
    assert!(lines[1].contains("stopped_contact;stopped_contact"));
    let summary = String::from_utf8(summary_csv(&aggregate(&records)).unwrap()).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(2).unwrap().starts_with("open_loop_b5,1,0,1,"));
}

#[test]
fn config_parses_with_defaults_and_rejects_unknown_keys() {
    let text = r#"
        name = "t"
        variants = ["ours", "heuristic_b1"]
        trials = 3
        [scene]
        format = "vtgrasp-scene/1"
        [scene.object]
        shape = { kind = "sphere", radius = 0.05 }
        pose = { translation = [0.5, 0.0, 0.25] }
        [perturbation]
        offset_bias = -0.008
    "#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.variants, vec![Variant::Ours, Variant::HeuristicB1]);
    assert_eq!(cfg.perturbation.offset_bias, -0.008);
    assert_eq!(cfg.closing.gradient_budget, 1);
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(again, cfg);

    assert!(ExperimentConfig::from_toml_str(&text.replace("trials = 3", "trails = 3")).is_err());
    assert!(ExperimentConfig::from_toml_str(&text.replace("\"ours\"", "\"b9\"")).is_err());
    assert!(ExperimentConfig::from_toml_str("trials = 3").is_err());
}

#[test]
fn episodes_are_deterministic() {
    let mut cfg = ExperimentConfig::new(sphere_scene());
    cfg.preshape_samples = 8;
    cfg.variants = vec![Variant::Ours];
    let exp = Experiment::new(cfg, None).unwrap();
    let a = run_episode(&exp, 2, Variant::Ours).unwrap();
    let b = run_episode(&exp, 2, Variant::Ours).unwrap();
    assert_eq!(records_csv(&[a.clone()]).unwrap(), records_csv(&[b]).unwrap());
    assert_eq!(a.stage, Stage::Completed);
    assert_eq!(a.fingertips_in_contact, 4);
    // The trial's shared pipeline gives the same record as a lone episode.
    let shared = run_trial(&exp, 2).unwrap();
    assert_eq!(records_csv(&shared).unwrap(), records_csv(&[a]).unwrap());
}

#[test]
fn unreachable_object_is_recorded_as_preshape_failure() {
    let mut cfg = ExperimentConfig::new(sphere_scene());
    if let SceneSource::Inline(desc) = &mut cfg.scene {
        desc.object.pose.translation = [5.0, 0.0, 0.25];
    }
    cfg.preshape_samples = 4;
    cfg.trials = 2;
    cfg.variants = vec![Variant::Ours, Variant::HeuristicB1];
    let exp = Experiment::new(cfg, None).unwrap();
    let records = run_batch(&exp, Some(2)).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.stage == Stage::PreshapeFailed && r.fingertips_in_contact == 0));
    assert_eq!(
        records.iter().map(|r| (r.trial, r.variant)).collect::<Vec<_>>(),
        vec![(0, Variant::Ours), (0, Variant::HeuristicB1), (1, Variant::Ours), (1, Variant::HeuristicB1)]
    );
}
