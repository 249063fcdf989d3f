use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use evgp::sim::{
    sample_dataset, to_regression, DatasetMeta, SamplingSpec, SystemSpec, DEFAULT_DT,
    DEFAULT_STEPS_PER_TRAJ,
};

use crate::args::SimulateArgs;
use crate::commands::{load_config, parse_system, pick, pick_required, sidecar_path};
use crate::CliError;

#[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub system: Option<String>,
    pub preset: Option<String>,
    pub trajectories: Option<usize>,
    pub steps_per_traj: Option<usize>,
    pub dt: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub noise_std: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let file: SimulateConfig = load_config(&args.config)?;
    let system = parse_system(&pick_required(&args.system, &file.system, "system")?)?;
    let out = pick_required(&args.out, &file.out, "out")?;
    let seed = pick(&args.seed, &file.seed, 0);
    let noise_std = pick(&args.noise_std, &file.noise_std, 0.01);
    let preset = args.preset.clone().or(file.preset.clone());

    let mut sampling = match preset.as_deref() {
        Some("table1") => SamplingSpec::table1(system),
        Some(other) => {
            return Err(CliError::config(format!(
                "unknown preset '{other}' (expected table1)"
            )))
        }
        None => SamplingSpec {
            trajectories: 10,
            ..SamplingSpec::table1(system)
        },
    };
    if let Some(t) = args.trajectories.or(file.trajectories) {
        sampling.trajectories = t;
    }
    sampling.steps_per_traj = pick(
        &args.steps_per_traj,
        &file.steps_per_traj,
        DEFAULT_STEPS_PER_TRAJ,
    );
    sampling.dt = pick(&args.dt, &file.dt, DEFAULT_DT);
    if let Some(eta) = args.eta.or(file.eta) {
        sampling.eta = eta;
    }
    if let Some(alpha) = args.alpha.clone().or(file.alpha.clone()) {
        sampling.alpha = alpha;
    }

    let spec = SystemSpec::default_for(system);
    let batch = sample_dataset(&spec, &sampling, seed)?;
    let noise = vec![noise_std; spec.state_dim()];
    let dataset = to_regression(&batch, &noise)?;
    dataset.write_csv(&out)?;
    let meta = DatasetMeta {
        system: spec,
        sampling,
        seed,
        obs_noise_std: noise,
    };
    meta.save(sidecar_path(&out))?;
    println!(
        "wrote {} rows ({} inputs, {} targets) to {}",
        dataset.len(),
        dataset.input_dim(),
        dataset.output_dim(),
        out.display()
    );
    Ok(())
}
