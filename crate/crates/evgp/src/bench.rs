//! Benchmark harness: an experiment matrix over (model, training size,
//! seed) for one dynamical system, mirroring the testing-error tables
//! and the error-vs-training-size curves.
//!
//! Per cell: sample a training pool and a fixed test set with distinct
//! seed streams, take the first `train_size` rows of the pool (test
//! sets stay fixed while training data is progressively aggregated),
//! fit, and evaluate on the test set. Cell failures are recorded and
//! the rest of the matrix continues.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{default_prior, BetaPrior, FeatureMap};
use crate::metrics::{evaluate, EvalReport};
use crate::model::multi_output_predict;
use crate::sim::{sample_dataset, to_regression, SamplingSpec, SystemId, SystemSpec};
use crate::trainer::{fit, TrainConfig};

/// Model variants compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Zero-mean sparse variational GP baseline.
    Vgp,
    /// EVGP with the inertia+force prior.
    EvgpIf,
    /// EVGP with the inertia+force+gravity prior.
    EvgpIfg,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Vgp => "vgp",
            ModelKind::EvgpIf => "evgp-if",
            ModelKind::EvgpIfg => "evgp-ifg",
        };
        f.write_str(s)
    }
}

impl ModelKind {
    pub fn feature_map(&self, system: SystemId) -> FeatureMap {
        let spec = SystemSpec::default_for(system);
        match (self, system) {
            (ModelKind::Vgp, _) => FeatureMap::ZeroFeatures {
                input_dim: spec.state_dim() + spec.control_dim(),
            },
            (ModelKind::EvgpIf, SystemId::Pendulum) => FeatureMap::PendulumIf,
            (ModelKind::EvgpIfg, SystemId::Pendulum) => FeatureMap::PendulumIfg,
            (ModelKind::EvgpIf, SystemId::Cartpole) => FeatureMap::CartpoleIf,
            (ModelKind::EvgpIfg, SystemId::Cartpole) => FeatureMap::CartpoleIfg,
            (ModelKind::EvgpIf, SystemId::Acrobot) => FeatureMap::AcrobotIf,
            (ModelKind::EvgpIfg, SystemId::Acrobot) => FeatureMap::AcrobotIfg,
        }
    }

    /// Inducing-point counts used in the full-scale experiments.
    pub fn full_inducing(&self, system: SystemId) -> usize {
        match (self, system) {
            (ModelKind::Vgp, SystemId::Pendulum) => 40,
            (ModelKind::Vgp, SystemId::Cartpole) => 100,
            (ModelKind::Vgp, SystemId::Acrobot) => 250,
            (_, SystemId::Pendulum) => 10,
            (_, SystemId::Cartpole) => 60,
            (_, SystemId::Acrobot) => 150,
        }
    }

    /// Desk-scale inducing counts: the pendulum keeps its full-scale
    /// sizes (already small); the larger systems are trimmed so a
    /// matrix finishes in minutes.
    pub fn desk_inducing(&self, system: SystemId) -> usize {
        match (self, system) {
            (ModelKind::Vgp, SystemId::Pendulum) => 40,
            (_, SystemId::Pendulum) => 10,
            (ModelKind::Vgp, SystemId::Cartpole) => 60,
            (_, SystemId::Cartpole) => 30,
            (ModelKind::Vgp, SystemId::Acrobot) => 80,
            (_, SystemId::Acrobot) => 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub system: SystemId,
    pub models: Vec<ModelKind>,
    pub train_sizes: Vec<usize>,
    /// Repeat seeds; each drives dataset sampling and training.
    pub seeds: Vec<u64>,
    pub test_size: usize,
    /// Observation-noise standard deviation applied to every state
    /// dimension of the regression targets.
    pub obs_noise_std: f64,
    pub trainer: TrainConfig,
    /// Explicit inducing-point count; defaults to the per-model sizes.
    pub inducing_override: Option<usize>,
    /// Pick desk-scale inducing counts instead of full-scale ones.
    pub desk_scale: bool,
}

impl BenchConfig {
    /// Desk preset: completes the pendulum matrix in minutes.
    pub fn desk(system: SystemId) -> Self {
        Self {
            system,
            models: vec![ModelKind::Vgp, ModelKind::EvgpIf, ModelKind::EvgpIfg],
            train_sizes: vec![500, 1000, 2000],
            seeds: vec![0, 1],
            test_size: 2000,
            obs_noise_std: 0.01,
            trainer: TrainConfig {
                steps: 3000,
                batch_size: 256,
                ..TrainConfig::default()
            },
            inducing_override: None,
            desk_scale: true,
        }
    }

    /// Full preset: training sizes and model sizes of the original
    /// data-collection protocol.
    pub fn full(system: SystemId) -> Self {
        let full_size = match system {
            SystemId::Pendulum | SystemId::Cartpole => 4800,
            SystemId::Acrobot => 9300,
        };
        Self {
            system,
            models: vec![ModelKind::Vgp, ModelKind::EvgpIf, ModelKind::EvgpIfg],
            train_sizes: vec![full_size / 4, full_size / 2, full_size],
            seeds: vec![0, 1, 2, 3],
            test_size: full_size,
            obs_noise_std: 0.01,
            trainer: TrainConfig {
                steps: 6000,
                batch_size: 256,
                ..TrainConfig::default()
            },
            inducing_override: None,
            desk_scale: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.train_sizes.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "bench needs at least one model, size and seed".into(),
            ));
        }
        if self.test_size == 0 {
            return Err(Error::InvalidConfig("test_size must be >= 1".into()));
        }
        Ok(())
    }

    fn inducing_for(&self, model: ModelKind) -> usize {
        self.inducing_override.unwrap_or(if self.desk_scale {
            model.desk_inducing(self.system)
        } else {
            model.full_inducing(self.system)
        })
    }
}

/// Outcome of one experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub model: ModelKind,
    pub train_size: usize,
    pub seed: u64,
    pub report: Option<EvalReport>,
    pub error_message: Option<String>,
    pub final_loss: Option<f64>,
    pub train_seconds: f64,
    pub num_params: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResults {
    pub system: SystemId,
    pub cells: Vec<BenchCell>,
}

/// One point of an error-vs-training-size series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub train_size: usize,
    pub mean_error: f64,
    pub min_error: f64,
    pub max_error: f64,
    pub runs: usize,
}

impl BenchResults {
    /// Mean/min/max test error per training size for one model,
    /// aggregated over seeds (failed cells skipped).
    pub fn error_series(&self, model: ModelKind) -> Vec<SeriesPoint> {
        let mut sizes: Vec<usize> = self
            .cells
            .iter()
            .filter(|c| c.model == model)
            .map(|c| c.train_size)
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
            .into_iter()
            .filter_map(|size| {
                let errors: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.model == model && c.train_size == size)
                    .filter_map(|c| c.report.as_ref().map(|r| r.error))
                    .collect();
                if errors.is_empty() {
                    return None;
                }
                let mean = errors.iter().sum::<f64>() / errors.len() as f64;
                let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Some(SeriesPoint {
                    train_size: size,
                    mean_error: mean,
                    min_error: min,
                    max_error: max,
                    runs: errors.len(),
                })
            })
            .collect()
    }

    /// Mean test error over seeds for one (model, train_size) cell
    /// group, if any run succeeded.
    pub fn mean_error(&self, model: ModelKind, train_size: usize) -> Option<f64> {
        self.error_series(model)
            .into_iter()
            .find(|p| p.train_size == train_size)
            .map(|p| p.mean_error)
    }

    /// Aligned-column text table over all cells.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>6} {:>5} {:>8} {:>8} {:>8} {:>10} {:>10} {:>8}\n",
            "model", "size", "seed", "CR-1", "CR-2", "CR-3", "Error", "||STD||", "params"
        ));
        for c in &self.cells {
            match (&c.report, &c.error_message) {
                (Some(r), _) => out.push_str(&format!(
                    "{:<10} {:>6} {:>5} {:>8.3} {:>8.3} {:>8.3} {:>10.4} {:>10.4} {:>8}\n",
                    c.model.to_string(),
                    c.train_size,
                    c.seed,
                    r.cr1,
                    r.cr2,
                    r.cr3,
                    r.error,
                    r.std_norm,
                    c.num_params
                )),
                (None, Some(msg)) => out.push_str(&format!(
                    "{:<10} {:>6} {:>5} FAILED: {msg}\n",
                    c.model.to_string(),
                    c.train_size,
                    c.seed
                )),
                (None, None) => {}
            }
        }
        out
    }

    /// Error-vs-size series as CSV (`model,train_size,mean,min,max,runs`).
    pub fn series_csv(&self) -> String {
        let mut out = String::from("model,train_size,mean_error,min_error,max_error,runs\n");
        let mut models: Vec<ModelKind> = self.cells.iter().map(|c| c.model).collect();
        models.dedup();
        let mut seen = Vec::new();
        for model in models {
            if seen.contains(&model) {
                continue;
            }
            seen.push(model);
            for p in self.error_series(model) {
                out.push_str(&format!(
                    "{model},{},{:.6e},{:.6e},{:.6e},{}\n",
                    p.train_size, p.mean_error, p.min_error, p.max_error, p.runs
                ));
            }
        }
        out
    }
}

fn trajectories_for(samples: usize, steps_per_traj: usize) -> usize {
    samples.div_ceil(steps_per_traj)
}

/// Training pool and fixed test set for one repeat seed.
pub fn sample_split(
    system: SystemId,
    max_train: usize,
    test_size: usize,
    obs_noise_std: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let spec = SystemSpec::default_for(system);
    let base = SamplingSpec::table1(system);
    let noise = vec![obs_noise_std; spec.state_dim()];
    let train_spec = SamplingSpec {
        trajectories: trajectories_for(max_train, base.steps_per_traj),
        ..base.clone()
    };
    let test_spec = SamplingSpec {
        trajectories: trajectories_for(test_size, base.steps_per_traj),
        ..base
    };
    let train_pool = to_regression(&sample_dataset(&spec, &train_spec, seed)?, &noise)?;
    let test = to_regression(
        &sample_dataset(&spec, &test_spec, seed.wrapping_add(0x7465_7374))?,
        &noise,
    )?
    .head(test_size)?;
    Ok((train_pool, test))
}

/// Prior for a model kind on a system (empty for the VGP baseline).
pub fn prior_for(model: ModelKind, system: SystemId, dt: f64) -> Result<BetaPrior> {
    let map = model.feature_map(system);
    if map.feature_dim() == 0 {
        let spec = SystemSpec::default_for(system);
        Ok(BetaPrior::empty(spec.state_dim()))
    } else {
        default_prior(map, dt)
    }
}

fn run_cell(
    config: &BenchConfig,
    model: ModelKind,
    train_size: usize,
    seed: u64,
    train_pool: &Dataset,
    test: &Dataset,
) -> BenchCell {
    let map = model.feature_map(config.system);
    let m = config.inducing_for(model);
    let mut cell = BenchCell {
        model,
        train_size,
        seed,
        report: None,
        error_message: None,
        final_loss: None,
        train_seconds: 0.0,
        num_params: 0,
    };
    let outcome = (|| -> Result<(EvalReport, f64, f64, usize)> {
        let train = train_pool.head(train_size)?;
        let prior = prior_for(model, config.system, crate::sim::DEFAULT_DT)?;
        let trainer = TrainConfig {
            seed,
            batch_size: config.trainer.batch_size.min(train.len()),
            ..config.trainer.clone()
        };
        let fit_out = fit(&train, map, &prior, m, &trainer)?;
        let preds = multi_output_predict(&fit_out.states, map, test.inputs(), true, true)?;
        let report = evaluate(&preds, test.targets())?;
        let params: usize = fit_out
            .states
            .iter()
            .map(|s| s.num_trainable_params())
            .sum();
        Ok((
            report,
            fit_out.report.final_loss,
            fit_out.report.wall_time_s,
            params,
        ))
    })();
    match outcome {
        Ok((report, final_loss, secs, params)) => {
            cell.report = Some(report);
            cell.final_loss = Some(final_loss);
            cell.train_seconds = secs;
            cell.num_params = params;
        }
        Err(e) => cell.error_message = Some(e.to_string()),
    }
    cell
}

/// Run the full experiment matrix. Configuration errors abort; cell
/// failures are recorded in the results and the matrix continues.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchResults> {
    config.validate()?;
    let max_train = *config.train_sizes.iter().max().expect("non-empty");
    let mut cells = Vec::new();
    for &seed in &config.seeds {
        let (train_pool, test) = sample_split(
            config.system,
            max_train,
            config.test_size,
            config.obs_noise_std,
            seed,
        )?;
        for &model in &config.models {
            for &train_size in &config.train_sizes {
                cells.push(run_cell(
                    config, model, train_size, seed, &train_pool, &test,
                ));
            }
        }
    }
    Ok(BenchResults {
        system: config.system,
        cells,
    })
}
