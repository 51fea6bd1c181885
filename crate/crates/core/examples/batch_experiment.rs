//! A small paired experiment over all four closing variants, summarized per variant.

use std::path::Path;

use vtgrasp::harness::{aggregate, config_echo, run_batch, summary_table, Experiment, ExperimentConfig};

fn main() -> vtgrasp::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/configs/sphere_biased.toml");
    let mut config = ExperimentConfig::load(&path)?;
    config.trials = 12;
    let exp = Experiment::new(config, path.parent())?;
    print!("{}", config_echo(&exp));
    let records = run_batch(&exp, None)?;
    println!();
    print!("{}", summary_table(&aggregate(&records), true));
    Ok(())
}
