//! Seeded, reproducible experiments: configs, episodes, batches and their outputs.
//!
//! A batch runs every configured variant on trials `0..trials`. Trials may run on several
//! threads; records are folded in trial order, so the outputs do not depend on scheduling.

use rayon::prelude::*;

mod config;
mod episode;
mod report;

pub use config::{EvalConfig, Experiment, ExperimentConfig, PerturbationConfig, SceneSource};
pub use episode::{
    run_episode, run_episode_detailed, run_trial, EpisodeDetail, EpisodeRecord, SolveSummary, Stage, StageTiming,
};
pub use report::{
    aggregate, config_echo, records_csv, summary_csv, summary_table, timing_csv, write_batch_outputs, TimingSummary,
    VariantSummary, SUCCESS_PROXY_NOTE,
};

use crate::tactile::ClosingReport;
use crate::{Error, Result};

/// All records of the experiment, ordered by trial then config variant order.
/// `threads = None` uses rayon's default pool size.
pub fn run_batch(exp: &Experiment, threads: Option<usize>) -> Result<Vec<EpisodeRecord>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<EpisodeRecord>> = pool.install(|| {
        (0..exp.config.trials)
            .into_par_iter()
            .map(|t| run_trial(exp, t))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Per-tick closing trace as CSV: one row per finger per tick.
pub fn trace_csv(report: &ClosingReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "finger", "phase", "case", "pressure_pa", "j0", "j1", "j2", "j3"])
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for row in &report.trace {
        let mut fields = vec![
            row.tick.to_string(),
            row.finger.to_string(),
            row.phase.clone(),
            row.case.clone(),
            row.pressure.to_string(),
        ];
        fields.extend(row.joints.iter().map(|v| v.to_string()));
        w.write_record(&fields).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests;
