//! One trial: preshape, contact solve, close, evaluate.

use std::time::Instant;

use serde::Serialize;

use super::config::Experiment;
use crate::contact::{solve_contact, ContactProblem, GraspSolution};
use crate::grasp_eval::{extract_contacts, force_closure, ContactState, GraspQuality};
use crate::kinematics::JointConfig;
use crate::preshape::{plan_preshape, PreshapeCandidate};
use crate::sdf::EstimatedSdf;
use crate::tactile::{close_hand, ClosingReport, Disturbance, FingerPhase, Variant};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Completed,
    PreshapeFailed,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Completed => "completed",
            Stage::PreshapeFailed => "preshape_failed",
        }
    }
}

/// Wall-clock milliseconds per pipeline stage. Not reproducible; kept out of the
/// deterministic outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTiming {
    pub preshape_ms: f64,
    pub solve_ms: f64,
    pub close_ms: f64,
    pub eval_ms: f64,
}

impl StageTiming {
    pub fn total_ms(&self) -> f64 {
        self.preshape_ms + self.solve_ms + self.close_ms + self.eval_ms
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    /// Largest `|sdf_est|` over the fingertips at the solution.
    pub max_tip_sdf: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub trial: usize,
    pub seed: u64,
    pub variant: Variant,
    pub stage: Stage,
    pub preshape_feasible: bool,
    pub preshape_score: Option<f64>,
    /// `None` when the variant skips the contact solve or the preshape failed.
    pub solve: Option<SolveSummary>,
    pub fingertips_in_contact: usize,
    pub phases: Vec<FingerPhase>,
    pub contact_ticks: Vec<Option<usize>>,
    pub disturbance: Disturbance,
    pub disturbance_depth: f64,
    pub plan_ticks: usize,
    pub close_ticks: usize,
    pub q_hand: Vec<f64>,
    pub quality: GraspQuality,
    pub contacts_dropped: usize,
    pub timing: StageTiming,
}

impl EpisodeRecord {
    fn preshape_failed(trial: usize, seed: u64, variant: Variant, timing: StageTiming) -> Self {
        EpisodeRecord {
            trial,
            seed,
            variant,
            stage: Stage::PreshapeFailed,
            preshape_feasible: false,
            preshape_score: None,
            solve: None,
            fingertips_in_contact: 0,
            phases: Vec::new(),
            contact_ticks: Vec::new(),
            disturbance: Disturbance::None,
            disturbance_depth: 0.0,
            plan_ticks: 0,
            close_ticks: 0,
            q_hand: Vec::new(),
            quality: GraspQuality {
                is_closure: false,
                epsilon: 0.0,
            },
            contacts_dropped: 0,
            timing,
        }
    }
}

/// Everything an episode produced, for the verbose commands.
#[derive(Clone, Debug)]
pub struct EpisodeDetail {
    pub record: EpisodeRecord,
    pub preshape: Option<PreshapeCandidate>,
    pub solution: Option<GraspSolution>,
    pub report: Option<ClosingReport>,
    pub contacts: Option<ContactState>,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

struct Planned {
    preshape: Option<PreshapeCandidate>,
    solution: Option<GraspSolution>,
    preshape_ms: f64,
    solve_ms: f64,
}

fn plan(exp: &Experiment, est: &EstimatedSdf, trial: usize, solve: bool) -> Result<Planned> {
    let cfg = &exp.config;
    let t = Instant::now();
    let preshape = plan_preshape(&exp.model, est, &cfg.preshape, cfg.preshape_samples, cfg.trial_seed(trial));
    let preshape_ms = ms_since(t);
    let t = Instant::now();
    let solution = match (&preshape, solve) {
        (Some(c), true) => Some(solve_contact(&ContactProblem::new(&exp.model, est, &c.q0)?, &cfg.solver)),
        _ => None,
    };
    Ok(Planned {
        preshape,
        solution,
        preshape_ms,
        solve_ms: if solve { ms_since(t) } else { 0.0 },
    })
}

fn finish(exp: &Experiment, est: &EstimatedSdf, trial: usize, variant: Variant, planned: &Planned) -> Result<EpisodeDetail> {
    let cfg = &exp.config;
    let seed = cfg.trial_seed(trial);
    let mut timing = StageTiming {
        preshape_ms: planned.preshape_ms,
        solve_ms: if variant.uses_contact_solve() { planned.solve_ms } else { 0.0 },
        ..StageTiming::default()
    };
    let Some(candidate) = &planned.preshape else {
        return Ok(EpisodeDetail {
            record: EpisodeRecord::preshape_failed(trial, seed, variant, timing),
            preshape: None,
            solution: None,
            report: None,
            contacts: None,
        });
    };
    let solution = if variant.uses_contact_solve() { planned.solution.clone() } else { None };
    let goal = solution.as_ref().map(|s| s.q_hand.as_slice());

    let t = Instant::now();
    let report = close_hand(&exp.model, &exp.scene, est, &candidate.q0, goal, variant, &cfg.closing)?;
    timing.close_ms = ms_since(t);

    let t = Instant::now();
    let q_contact = JointConfig::from_parts(&report.q_arm, &report.q_hand_contact);
    let mut contacts = extract_contacts(&exp.scene, &exp.model, &q_contact, &report, cfg.eval.friction)?;
    contacts.torsion_radius = cfg.eval.torsion_radius;
    let quality = force_closure(&contacts, cfg.eval.cone_edges);
    timing.eval_ms = ms_since(t);

    let record = EpisodeRecord {
        trial,
        seed,
        variant,
        stage: Stage::Completed,
        preshape_feasible: candidate.feasible,
        preshape_score: Some(candidate.score),
        solve: solution.as_ref().map(|s| SolveSummary {
            converged: s.converged,
            iterations: s.iterations,
            max_tip_sdf: s.max_tip_sdf(),
        }),
        fingertips_in_contact: report.fingertips_in_contact,
        phases: report.fingers.iter().map(|f| f.phase).collect(),
        contact_ticks: report.contact_ticks(),
        disturbance: report.disturbance,
        disturbance_depth: report.disturbance_depth,
        plan_ticks: report.plan_ticks,
        close_ticks: report.ticks,
        q_hand: report.q_hand.clone(),
        quality,
        contacts_dropped: contacts.dropped.len(),
        timing,
    };
    Ok(EpisodeDetail {
        record,
        preshape: Some(candidate.clone()),
        solution,
        report: Some(report),
        contacts: Some(contacts),
    })
}

/// Runs `variant` on `trial` with every intermediate result kept.
pub fn run_episode_detailed(exp: &Experiment, trial: usize, variant: Variant) -> Result<EpisodeDetail> {
    let est = exp.estimate(trial)?;
    let planned = plan(exp, &est, trial, variant.uses_contact_solve())?;
    finish(exp, &est, trial, variant, &planned)
}

/// Runs `variant` on `trial`. Deterministic in `(config, trial)` apart from timings.
pub fn run_episode(exp: &Experiment, trial: usize, variant: Variant) -> Result<EpisodeRecord> {
    Ok(run_episode_detailed(exp, trial, variant)?.record)
}

/// Runs every configured variant on `trial`, sharing the preshape and contact solve so the
/// variants are paired. Records come back in config variant order.
pub fn run_trial(exp: &Experiment, trial: usize) -> Result<Vec<EpisodeRecord>> {
    let est = exp.estimate(trial)?;
    let solve = exp.config.variants.iter().any(|v| v.uses_contact_solve());
    let planned = plan(exp, &est, trial, solve)?;
    exp.config
        .variants
        .iter()
        .map(|&v| finish(exp, &est, trial, v, &planned).map(|d| d.record))
        .collect()
}
