//! Per-variant aggregation and the CSV / text outputs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::Experiment;
use super::episode::{EpisodeRecord, Stage};
use crate::tactile::Variant;
use crate::{Error, Result};

pub const SUCCESS_PROXY_NOTE: &str =
    "grasp success is approximated by force closure of the final contacts (the object is immobile; nothing is lifted)";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TimingSummary {
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub max_ms: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

impl TimingSummary {
    pub fn of(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        TimingSummary {
            p50_ms: percentile(&values, 0.5),
            p90_ms: percentile(&values, 0.9),
            max_ms: values.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub variant: Variant,
    pub episodes: usize,
    pub preshape_failed: usize,
    pub mean_fingertips_in_contact: f64,
    /// `fingertip_histogram[n]` episodes ended with `n` fingertips in contact.
    pub fingertip_histogram: Vec<usize>,
    /// Counts of none, tilted, knocked.
    pub disturbance_counts: [usize; 3],
    pub mean_disturbance_score: f64,
    pub force_closure_rate: f64,
    pub mean_epsilon: f64,
    /// Episodes that ran the contact solve.
    pub solver_runs: usize,
    pub solver_converged: usize,
    pub timing: TimingSummary,
}

impl VariantSummary {
    pub fn solver_convergence_rate(&self) -> Option<f64> {
        (self.solver_runs > 0).then(|| self.solver_converged as f64 / self.solver_runs as f64)
    }
}

/// Per-variant statistics, in variant order. Every record counts in its variant's
/// denominators, failed preshapes included.
pub fn aggregate(records: &[EpisodeRecord]) -> Vec<VariantSummary> {
    let bins = records.iter().map(|r| r.phases.len().max(r.fingertips_in_contact)).max().unwrap_or(0).max(4) + 1;
    let mut variants: Vec<Variant> = records.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    variants
        .into_iter()
        .map(|variant| {
            let rs: Vec<&EpisodeRecord> = records.iter().filter(|r| r.variant == variant).collect();
            let n = rs.len() as f64;
            let mut fingertip_histogram = vec![0; bins];
            let mut disturbance_counts = [0; 3];
            for r in &rs {
                fingertip_histogram[r.fingertips_in_contact] += 1;
                disturbance_counts[r.disturbance.score() as usize] += 1;
            }
            let solved: Vec<_> = rs.iter().filter_map(|r| r.solve.as_ref()).collect();
            VariantSummary {
                variant,
                episodes: rs.len(),
                preshape_failed: rs.iter().filter(|r| r.stage == Stage::PreshapeFailed).count(),
                mean_fingertips_in_contact: rs.iter().map(|r| r.fingertips_in_contact as f64).sum::<f64>() / n,
                fingertip_histogram,
                disturbance_counts,
                mean_disturbance_score: rs.iter().map(|r| r.disturbance.score() as f64).sum::<f64>() / n,
                force_closure_rate: rs.iter().filter(|r| r.quality.is_closure).count() as f64 / n,
                mean_epsilon: rs.iter().map(|r| r.quality.epsilon).sum::<f64>() / n,
                solver_runs: solved.len(),
                solver_converged: solved.iter().filter(|s| s.converged).count(),
                timing: TimingSummary::of(rs.iter().map(|r| r.timing.total_ms()).collect()),
            }
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn joined<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

/// One `records.csv` row.
#[derive(Serialize)]
struct RecordRow {
    trial: usize,
    seed: u64,
    variant: &'static str,
    stage: &'static str,
    preshape_feasible: bool,
    preshape_score: String,
    solver_converged: String,
    solver_iterations: String,
    solver_max_tip_sdf: String,
    fingertips_in_contact: usize,
    phases: String,
    contact_ticks: String,
    disturbance: &'static str,
    disturbance_depth: f64,
    plan_ticks: usize,
    close_ticks: usize,
    force_closure: bool,
    epsilon: f64,
    contacts_dropped: usize,
}

impl From<&EpisodeRecord> for RecordRow {
    fn from(r: &EpisodeRecord) -> Self {
        RecordRow {
            trial: r.trial,
            seed: r.seed,
            variant: r.variant.name(),
            stage: r.stage.name(),
            preshape_feasible: r.preshape_feasible,
            preshape_score: opt(r.preshape_score),
            solver_converged: opt(r.solve.as_ref().map(|s| s.converged)),
            solver_iterations: opt(r.solve.as_ref().map(|s| s.iterations)),
            solver_max_tip_sdf: opt(r.solve.as_ref().map(|s| s.max_tip_sdf)),
            fingertips_in_contact: r.fingertips_in_contact,
            phases: joined(&r.phases, |p| p.to_string()),
            contact_ticks: joined(&r.contact_ticks, |t| t.map_or("-".into(), |k| k.to_string())),
            disturbance: r.disturbance.name(),
            disturbance_depth: r.disturbance_depth,
            plan_ticks: r.plan_ticks,
            close_ticks: r.close_ticks,
            force_closure: r.quality.is_closure,
            epsilon: r.quality.epsilon,
            contacts_dropped: r.contacts_dropped,
        }
    }
}

#[derive(Serialize)]
struct TimingRow {
    trial: usize,
    variant: &'static str,
    preshape_ms: f64,
    solve_ms: f64,
    close_ms: f64,
    eval_ms: f64,
    total_ms: f64,
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn records_csv(records: &[EpisodeRecord]) -> Result<Vec<u8>> {
    csv_bytes(records.iter().map(RecordRow::from))
}

pub fn timing_csv(records: &[EpisodeRecord]) -> Result<Vec<u8>> {
    csv_bytes(records.iter().map(|r| TimingRow {
        trial: r.trial,
        variant: r.variant.name(),
        preshape_ms: r.timing.preshape_ms,
        solve_ms: r.timing.solve_ms,
        close_ms: r.timing.close_ms,
        eval_ms: r.timing.eval_ms,
        total_ms: r.timing.total_ms(),
    }))
}

/// Machine-readable summary; excludes timings so it is reproducible.
pub fn summary_csv(summaries: &[VariantSummary]) -> Result<Vec<u8>> {
    let bins = summaries.iter().map(|s| s.fingertip_histogram.len()).max().unwrap_or(0);
    let mut out = String::from("variant,episodes,preshape_failed,mean_fingertips_in_contact");
    for b in 0..bins {
        write!(out, ",fingertips_{b}").unwrap();
    }
    out.push_str(
        ",disturbance_none,disturbance_tilted,disturbance_knocked,mean_disturbance_score,force_closure_rate,mean_epsilon,solver_runs,solver_convergence_rate\n",
    );
    for s in summaries {
        write!(out, "{},{},{},{}", s.variant, s.episodes, s.preshape_failed, s.mean_fingertips_in_contact).unwrap();
        for b in 0..bins {
            write!(out, ",{}", s.fingertip_histogram.get(b).copied().unwrap_or(0)).unwrap();
        }
        let [none, tilted, knocked] = s.disturbance_counts;
        writeln!(
            out,
            ",{none},{tilted},{knocked},{},{},{},{},{}",
            s.mean_disturbance_score,
            s.force_closure_rate,
            s.mean_epsilon,
            s.solver_runs,
            opt(s.solver_convergence_rate())
        )
        .unwrap();
    }
    Ok(out.into_bytes())
}

/// Aligned text table; `with_timing` adds the (non-reproducible) timing columns.
pub fn summary_table(summaries: &[VariantSummary], with_timing: bool) -> String {
    let mut out = String::new();
    let mut header = format!(
        "{:<14} {:>5} {:>5} {:>6} {:<16} {:>5} {:>5} {:>5} {:>6} {:>7} {:>9} {:>6}",
        "variant", "n", "fail", "tips", "hist 0..4", "none", "tilt", "knock", "dist", "closure", "epsilon", "solved"
    );
    if with_timing {
        header.push_str(&format!(" {:>9} {:>9}", "p50 ms", "p90 ms"));
    }
    writeln!(out, "{header}").unwrap();
    for s in summaries {
        let hist = s.fingertip_histogram.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("/");
        let solved = s.solver_convergence_rate().map_or("-".into(), |r| format!("{:.0}%", r * 100.0));
        write!(
            out,
            "{:<14} {:>5} {:>5} {:>6.2} {:<16} {:>5} {:>5} {:>5} {:>6.2} {:>6.0}% {:>9.5} {:>6}",
            s.variant.name(),
            s.episodes,
            s.preshape_failed,
            s.mean_fingertips_in_contact,
            hist,
            s.disturbance_counts[0],
            s.disturbance_counts[1],
            s.disturbance_counts[2],
            s.mean_disturbance_score,
            s.force_closure_rate * 100.0,
            s.mean_epsilon,
            solved
        )
        .unwrap();
        if with_timing {
            write!(out, " {:>9.1} {:>9.1}", s.timing.p50_ms, s.timing.p90_ms).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Config echo that opens every run's text output.
pub fn config_echo(exp: &Experiment) -> String {
    let mut out = String::from("# vtgrasp experiment\n");
    for line in exp.config.to_toml_string().lines() {
        writeln!(out, "#   {line}").unwrap();
    }
    writeln!(out, "# note: {SUCCESS_PROXY_NOTE}").unwrap();
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes `records.csv`, `summary.csv` and `summary.txt` (all reproducible) plus
/// `timing.csv` into `dir`.
pub fn write_batch_outputs(dir: &Path, exp: &Experiment, records: &[EpisodeRecord]) -> Result<Vec<VariantSummary>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summaries = aggregate(records);
    write_file(&dir.join("records.csv"), &records_csv(records)?)?;
    write_file(&dir.join("summary.csv"), &summary_csv(&summaries)?)?;
    write_file(&dir.join("timing.csv"), &timing_csv(records)?)?;
    let text = format!("{}\n{}", config_echo(exp), summary_table(&summaries, false));
    write_file(&dir.join("summary.txt"), text.as_bytes())?;
    Ok(summaries)
}
