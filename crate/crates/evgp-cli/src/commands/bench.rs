use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use evgp::bench::{run_benchmark, BenchConfig, ModelKind};

use crate::args::BenchArgs;
use crate::commands::{load_config, parse_system, pick};
use crate::CliError;

#[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BenchFileConfig {
    pub system: Option<String>,
    pub preset: Option<String>,
    pub models: Option<Vec<String>>,
    pub sizes: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub test_size: Option<usize>,
    pub noise_std: Option<f64>,
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub m: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    match s {
        "vgp" => Ok(ModelKind::Vgp),
        "evgp-if" => Ok(ModelKind::EvgpIf),
        "evgp-ifg" => Ok(ModelKind::EvgpIfg),
        other => Err(CliError::config(format!(
            "unknown model '{other}' (expected vgp | evgp-if | evgp-ifg)"
        ))),
    }
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let file: BenchFileConfig = load_config(&args.config)?;
    let system = parse_system(&pick(&args.system, &file.system, "pendulum".to_string()))?;
    let preset = pick(&args.preset, &file.preset, "desk".to_string());
    let mut config = match preset.as_str() {
        "desk" => BenchConfig::desk(system),
        "full" => BenchConfig::full(system),
        other => {
            return Err(CliError::config(format!(
                "unknown preset '{other}' (expected desk | full)"
            )))
        }
    };
    if let Some(models) = args.models.clone().or(file.models.clone()) {
        config.models = models
            .iter()
            .map(|m| parse_model(m))
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(sizes) = args.sizes.clone().or(file.sizes.clone()) {
        config.train_sizes = sizes;
    }
    if let Some(seeds) = args.seeds.clone().or(file.seeds.clone()) {
        config.seeds = seeds;
    }
    if let Some(v) = args.test_size.or(file.test_size) {
        config.test_size = v;
    }
    if let Some(v) = args.noise_std.or(file.noise_std) {
        config.obs_noise_std = v;
    }
    if let Some(v) = args.steps.or(file.steps) {
        config.trainer.steps = v;
    }
    if let Some(v) = args.batch_size.or(file.batch_size) {
        config.trainer.batch_size = v;
    }
    if let Some(v) = args.lr.or(file.lr) {
        config.trainer.learning_rate = v;
    }
    if let Some(v) = args.m.or(file.m) {
        config.inducing_override = Some(v);
    }

    let results = run_benchmark(&config)?;
    print!("{}", results.text_table());
    let failures = results
        .cells
        .iter()
        .filter(|c| c.error_message.is_some())
        .count();
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; matrix completed");
    }

    if let Some(dir) = args.out_dir.clone().or(file.out_dir.clone()) {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(
            dir.join("results.json"),
            serde_json::to_string_pretty(&results)?,
        )?;
        std::fs::write(dir.join("table.txt"), results.text_table())?;
        std::fs::write(dir.join("series.csv"), results.series_csv())?;
        println!("results written to {}", dir.display());
    }
    Ok(())
}
