//! Versioned model files: everything needed to reload a trained
//! multi-output model, plus the schema hash of the dataset it was
//! trained against (guards against silently evaluating on a dataset
//! with mismatched columns).

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{BetaPrior, FeatureMap};
use crate::gaussian::CholParams;
use crate::kernel::SeKernelParams;
use crate::model::VariationalState;

pub const MODEL_FILE_VERSION: u32 = 1;

/// Row-major dense matrix payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidConfig(format!(
                "matrix payload {}x{} with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.data[i * self.cols + j]
        }))
    }
}

/// One output's trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateData {
    pub inducing_mean: Vec<f64>,
    pub inducing_cov_theta: MatrixData,
    pub beta_mean: Vec<f64>,
    pub beta_cov_theta: MatrixData,
    pub inducing_inputs: MatrixData,
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
    pub log_noise_variance: f64,
}

impl StateData {
    pub fn from_state(state: &VariationalState) -> Self {
        Self {
            inducing_mean: state.inducing_mean.iter().copied().collect(),
            inducing_cov_theta: MatrixData::from_matrix(state.inducing_cov.theta()),
            beta_mean: state.beta_mean.iter().copied().collect(),
            beta_cov_theta: MatrixData::from_matrix(state.beta_cov.theta()),
            inducing_inputs: MatrixData::from_matrix(&state.inducing_inputs),
            log_lengthscales: state.kernel.log_lengthscales.iter().copied().collect(),
            log_signal_variance: state.kernel.log_signal_variance,
            log_noise_variance: state.log_noise_variance,
        }
    }

    pub fn to_state(&self) -> Result<VariationalState> {
        let mut inducing_cov = CholParams::zeros(self.inducing_cov_theta.rows);
        inducing_cov
            .theta_mut()
            .copy_from(&self.inducing_cov_theta.to_matrix()?);
        let mut beta_cov = CholParams::zeros(self.beta_cov_theta.rows);
        beta_cov
            .theta_mut()
            .copy_from(&self.beta_cov_theta.to_matrix()?);
        Ok(VariationalState {
            inducing_mean: DVector::from_vec(self.inducing_mean.clone()),
            inducing_cov,
            beta_mean: DVector::from_vec(self.beta_mean.clone()),
            beta_cov,
            inducing_inputs: self.inducing_inputs.to_matrix()?,
            kernel: SeKernelParams {
                log_lengthscales: DVector::from_vec(self.log_lengthscales.clone()),
                log_signal_variance: self.log_signal_variance,
            },
            log_noise_variance: self.log_noise_variance,
        })
    }
}

/// On-disk model: version, feature map, weight prior, dataset schema,
/// and one state per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub feature_map: FeatureMap,
    pub prior: BetaPrior,
    pub schema_hash: String,
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
    /// Discretization step the prior was built for, when applicable.
    pub dt: Option<f64>,
    pub states: Vec<StateData>,
}

impl ModelFile {
    pub fn new(
        states: &[VariationalState],
        feature_map: FeatureMap,
        prior: &BetaPrior,
        dataset: &Dataset,
        dt: Option<f64>,
    ) -> Self {
        Self {
            version: MODEL_FILE_VERSION,
            feature_map,
            prior: prior.clone(),
            schema_hash: dataset.schema_hash(),
            input_names: dataset.input_names().to_vec(),
            target_names: dataset.target_names().to_vec(),
            dt,
            states: states.iter().map(StateData::from_state).collect(),
        }
    }

    pub fn to_states(&self) -> Result<Vec<VariationalState>> {
        self.states.iter().map(StateData::to_state).collect()
    }

    /// Reject evaluation datasets whose column schema differs from the
    /// one the model was trained on.
    pub fn check_schema(&self, dataset: &Dataset) -> Result<()> {
        if dataset.schema_hash() != self.schema_hash {
            return Err(Error::DimensionMismatch(format!(
                "dataset schema [{} | {}] does not match the model's training schema [{} | {}]",
                dataset.input_names().join(","),
                dataset.target_names().join(","),
                self.input_names.join(","),
                self.target_names.join(",")
            )));
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::InvalidConfig(format!(
                "model file version {} (supported: {MODEL_FILE_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::toy_dataset;
    use crate::features::default_prior;
    use crate::trainer::{fit, TrainConfig};

    #[test]
    fn model_file_round_trip() {
        let data = toy_dataset(60, 1);
        let map = FeatureMap::Linear1D;
        let prior = default_prior(map, 0.03).unwrap();
        let config = TrainConfig {
            steps: 30,
            batch_size: 20,
            seed: 4,
            ..TrainConfig::default()
        };
        let fit_out = fit(&data, map, &prior, 5, &config).unwrap();
        let file = ModelFile::new(&fit_out.states, map, &prior, &data, Some(0.03));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        file.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(file, back);
        let states = back.to_states().unwrap();
        assert_eq!(states.len(), 1);
        assert_eq!(states[0], fit_out.states[0]);
    }

    #[test]
    fn schema_mismatch_is_detected() {
        let data = toy_dataset(20, 2);
        let map = FeatureMap::Linear1D;
        let prior = default_prior(map, 0.03).unwrap();
        let fit_out = fit(
            &data,
            map,
            &prior,
            4,
            &TrainConfig {
                steps: 5,
                batch_size: 20,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let file = ModelFile::new(&fit_out.states, map, &prior, &data, None);
        assert!(file.check_schema(&data).is_ok());
        let other = Dataset::new(
            data.inputs().clone(),
            data.targets().clone(),
            vec!["renamed".into()],
            vec!["y_val".into()],
        )
        .unwrap();
        assert!(file.check_schema(&other).is_err());
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"version\": 99, \"bogus\": 1}").unwrap();
        assert!(ModelFile::load(&path).is_err());
    }
}
