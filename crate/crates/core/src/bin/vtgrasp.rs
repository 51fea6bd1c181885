use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vtgrasp::check::run_checks;
use vtgrasp::harness::{
    config_echo, run_batch, run_episode_detailed, summary_table, trace_csv, write_batch_outputs, Experiment,
    ExperimentConfig,
};
use vtgrasp::tactile::{ticks_to_seconds, Variant};
use vtgrasp::{Error, Result};

#[derive(Parser)]
#[command(name = "vtgrasp", version, about = "Visual-tactile precision grasp simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print every stage in detail.
    Plan(RunArgs),
    /// Run the full experiment and write records.csv, summary.csv, summary.txt and timing.csv.
    Batch(RunArgs),
    /// Run the oracle and gradient self-tests.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write per-tick closing traces and solver traces as CSV for plotting.
    PlotData(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run only this variant: ours, no_gradient, open_loop_b5 or heuristic_b1.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for batch (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn experiment(&self) -> Result<Experiment> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(v) = self.variant {
            cfg.variants = vec![v];
        }
        if let Some(n) = self.trials {
            cfg.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Experiment::new(cfg, self.config.parent())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn plan(args: &RunArgs) -> Result<()> {
    let exp = args.experiment()?;
    let variant = exp.config.variants[0];
    print!("{}", config_echo(&exp));
    println!("\nepisode: trial 0, seed {}, variant {variant}", exp.config.trial_seed(0));
    let detail = run_episode_detailed(&exp, 0, variant)?;
    let Some(pre) = &detail.preshape else {
        println!("preshape: no sample found; stage {}", detail.record.stage.name());
        return Ok(());
    };
    println!("preshape: feasible {}, score {:.5}", pre.feasible, pre.score);
    if let Some(sol) = &detail.solution {
        println!("contact solve: converged {}, {} iterations", sol.converged, sol.iterations);
        println!("  {:>4} {:>8} {:>12} {:>12} {:>10}", "iter", "alpha", "cost", "cost_after", "max|sdf|");
        for row in &sol.trace {
            println!(
                "  {:>4} {:>8.5} {:>12.4e} {:>12.4e} {:>10.2e}",
                row.iteration, row.alpha, row.cost, row.cost_after, row.max_tip_sdf
            );
        }
        println!("  fingertip sdf_est: {:?}", sol.tip_sdf.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>());
    }
    if let Some(report) = &detail.report {
        println!(
            "closing: {} planned ticks, {} ticks total ({:.2} s)",
            report.plan_ticks,
            report.ticks,
            ticks_to_seconds(report.ticks)
        );
        for (f, outcome) in report.fingers.iter().enumerate() {
            let tick = outcome.contact_tick.map_or("-".into(), |k| k.to_string());
            println!("  finger {f}: {:<20} contact tick {tick}", outcome.phase.to_string());
        }
        println!(
            "  fingertips in contact {}, disturbance {} (depth {:.4} m)",
            report.fingertips_in_contact, report.disturbance, report.disturbance_depth
        );
    }
    if let Some(contacts) = &detail.contacts {
        for c in &contacts.contacts {
            println!(
                "  contact finger {}: point [{:.4}, {:.4}, {:.4}] normal [{:.3}, {:.3}, {:.3}]",
                c.finger, c.point.x, c.point.y, c.point.z, c.normal.x, c.normal.y, c.normal.z
            );
        }
        if !contacts.dropped.is_empty() {
            println!("  contacts dropped (projection failed): {:?}", contacts.dropped);
        }
    }
    let q = detail.record.quality;
    println!("force closure {}, epsilon {:.5}", q.is_closure, q.epsilon);
    if let (Some(out), Some(report)) = (&args.out, &detail.report) {
        create_dir(out)?;
        let path = out.join("trace.csv");
        write_file(&path, &trace_csv(report)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn batch(args: &RunArgs) -> Result<()> {
    let exp = args.experiment()?;
    print!("{}", config_echo(&exp));
    let records = run_batch(&exp, args.threads)?;
    let summaries = write_batch_outputs(&exp.config.out, &exp, &records)?;
    println!();
    print!("{}", summary_table(&summaries, true));
    println!("\nwrote {} records to {}", records.len(), exp.config.out.display());
    Ok(())
}

fn plot_data(args: &RunArgs) -> Result<()> {
    let exp = args.experiment()?;
    let trials = args.trials.unwrap_or(1);
    let out = &exp.config.out;
    create_dir(out)?;
    print!("{}", config_echo(&exp));
    for trial in 0..trials {
        for &variant in &exp.config.variants {
            let detail = run_episode_detailed(&exp, trial, variant)?;
            if let Some(report) = &detail.report {
                let path = out.join(format!("trace_{variant}_{trial}.csv"));
                write_file(&path, &trace_csv(report)?)?;
                println!("wrote {}", path.display());
            }
            if let Some(sol) = &detail.solution {
                let mut text = String::from("iteration,alpha,cost,cost_after,step_norm,halvings,accepted,max_tip_sdf\n");
                for r in &sol.trace {
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        r.iteration, r.alpha, r.cost, r.cost_after, r.step_norm, r.halvings, r.accepted, r.max_tip_sdf
                    ));
                }
                let path = out.join(format!("solver_{variant}_{trial}.csv"));
                write_file(&path, text.as_bytes())?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn check(seed: u64) -> Result<()> {
    let results = run_checks(seed);
    let mut stdout = std::io::stdout().lock();
    for r in &results {
        writeln!(stdout, "{r}").ok();
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(stdout, "{passed}/{} checks passed", results.len()).ok();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(args) => plan(args),
        Command::Batch(args) => batch(args),
        Command::Check { seed } => check(*seed),
        Command::PlotData(args) => plot_data(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
