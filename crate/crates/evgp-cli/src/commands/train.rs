use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use evgp::dataset::Dataset;
use evgp::features::{default_prior, BetaPrior, FeatureMap};
use evgp::sim::{DatasetMeta, SystemId};
use evgp::storage::ModelFile;
use evgp::trainer::{fit_with_observer, TrainConfig};

use crate::args::TrainArgs;
use crate::commands::{load_config, parse_system, pick, pick_required, sidecar_path};
use crate::CliError;

#[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFileConfig {
    pub data: Option<PathBuf>,
    pub prior: Option<String>,
    pub system: Option<String>,
    pub dt: Option<f64>,
    pub m: Option<usize>,
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub hyper_freeze: Option<usize>,
    pub freeze_inducing: Option<bool>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

/// Resolve the feature map and weight prior from the prior name, the
/// dataset, and (for physics priors) the system and dt.
fn resolve_prior(
    prior_name: &str,
    dataset: &Dataset,
    system: Option<SystemId>,
    dt: Option<f64>,
) -> Result<(FeatureMap, BetaPrior), CliError> {
    match prior_name {
        "none" => Ok((
            FeatureMap::ZeroFeatures {
                input_dim: dataset.input_dim(),
            },
            BetaPrior::empty(dataset.output_dim()),
        )),
        "if" | "ifg" => {
            let system = system.ok_or_else(|| {
                CliError::config(
                    "physics priors need a system: add --system or a dataset sidecar",
                )
            })?;
            let dt = dt.ok_or_else(|| {
                CliError::config("physics priors need --dt or a dataset sidecar")
            })?;
            let map = match (system, prior_name) {
                (SystemId::Pendulum, "if") => FeatureMap::PendulumIf,
                (SystemId::Pendulum, "ifg") => FeatureMap::PendulumIfg,
                (SystemId::Cartpole, "if") => FeatureMap::CartpoleIf,
                (SystemId::Cartpole, "ifg") => FeatureMap::CartpoleIfg,
                (SystemId::Acrobot, "if") => FeatureMap::AcrobotIf,
                (SystemId::Acrobot, "ifg") => FeatureMap::AcrobotIfg,
                _ => unreachable!(),
            };
            Ok((map, default_prior(map, dt)?))
        }
        other => Err(CliError::config(format!(
            "unknown prior '{other}' (expected none | if | ifg)"
        ))),
    }
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let file: TrainFileConfig = load_config(&args.config)?;
    let data_path = pick_required(&args.data, &file.data, "data")?;
    let out_path = pick_required(&args.out, &file.out, "out")?;
    let prior_name = pick(&args.prior, &file.prior, "none".to_string());

    let dataset = Dataset::read_csv(&data_path)?;
    let sidecar = DatasetMeta::load(sidecar_path(&data_path)).ok();
    let system = match args.system.clone().or(file.system.clone()) {
        Some(s) => Some(parse_system(&s)?),
        None => sidecar.as_ref().map(|m| m.system.id()),
    };
    let dt = args
        .dt
        .or(file.dt)
        .or_else(|| sidecar.as_ref().map(|m| m.sampling.dt));
    let (map, prior) = resolve_prior(&prior_name, &dataset, system, dt)?;

    let m = pick(&args.m, &file.m, 10);
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        steps: pick(&args.steps, &file.steps, defaults.steps),
        batch_size: pick(&args.batch_size, &file.batch_size, defaults.batch_size)
            .min(dataset.len()),
        learning_rate: pick(&args.lr, &file.lr, defaults.learning_rate),
        seed: pick(&args.seed, &file.seed, defaults.seed),
        hyper_freeze_steps: pick(&args.hyper_freeze, &file.hyper_freeze, 0),
        freeze_inducing: args.freeze_inducing || file.freeze_inducing.unwrap_or(false),
        ..defaults
    };

    let checkpoint_every = args.checkpoint_every.or(file.checkpoint_every);
    let checkpoint_dir = args
        .checkpoint_dir
        .clone()
        .or(file.checkpoint_dir.clone())
        .or_else(|| out_path.parent().map(|p| p.to_path_buf()))
        .unwrap_or_else(|| PathBuf::from("."));

    let mut checkpoint_err: Option<CliError> = None;
    let fit_out = {
        let dataset_ref = &dataset;
        let prior_ref = &prior;
        let dir = checkpoint_dir.clone();
        let err_slot = &mut checkpoint_err;
        fit_with_observer(
            dataset_ref,
            map,
            prior_ref,
            m,
            &config,
            &mut |output, step, state| {
                if let Some(every) = checkpoint_every {
                    if every > 0 && (step + 1) % every == 0 && err_slot.is_none() {
                        let snapshot = ModelFile::new(
                            std::slice::from_ref(state),
                            map,
                            prior_ref,
                            dataset_ref,
                            dt,
                        );
                        let path =
                            dir.join(format!("checkpoint-output{output}-step{}.json", step + 1));
                        if let Err(e) = snapshot.save(&path) {
                            *err_slot = Some(e.into());
                        }
                    }
                }
            },
        )?
    };
    if let Some(e) = checkpoint_err {
        return Err(e);
    }

    let model = ModelFile::new(&fit_out.states, map, &prior, &dataset, dt);
    model.save(&out_path)?;
    if let Some(report_path) = args.report.clone().or(file.report.clone()) {
        std::fs::write(&report_path, serde_json::to_string_pretty(&fit_out.report)?)?;
    }
    println!(
        "trained {} outputs on {} rows: final full-batch loss {:.6}, {:.2}s, {} jitter events",
        fit_out.states.len(),
        dataset.len(),
        fit_out.report.final_loss,
        fit_out.report.wall_time_s,
        fit_out.report.jitter_events
    );
    println!("model written to {}", out_path.display());
    Ok(())
}
