//! Evaluation metrics: prediction error, predicted-standard-deviation
//! magnitude, and containing ratios (fraction of targets inside k
//! predicted standard deviations, compared against the 68-95-99.7
//! rule). Containing ratios are pooled over scalar (sample, output)
//! pairs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianPrediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerOutputReport {
    pub mean_abs_error: f64,
    pub mean_std: f64,
    pub cr1: f64,
    pub cr2: f64,
    pub cr3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean over samples of the Euclidean norm of the error across
    /// output dimensions.
    pub error: f64,
    /// Mean over samples of the Euclidean norm of the per-output
    /// predicted standard deviations.
    pub std_norm: f64,
    pub cr1: f64,
    pub cr2: f64,
    pub cr3: f64,
    pub n_eval: usize,
    pub per_output: Vec<PerOutputReport>,
}

/// Compare per-output predictive distributions against targets.
/// Predictions must be diagonal and include observation noise.
pub fn evaluate(predictions: &[GaussianPrediction], targets: &DMatrix<f64>) -> Result<EvalReport> {
    let n = targets.nrows();
    let outputs = targets.ncols();
    if predictions.len() != outputs {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} target columns",
            predictions.len(),
            outputs
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("no evaluation samples".into()));
    }
    for pred in predictions {
        if pred.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "prediction of length {} against {} targets",
                pred.len(),
                n
            )));
        }
        if !pred.includes_observation_noise {
            return Err(Error::InvalidConfig(
                "evaluation requires predictions with observation noise included".into(),
            ));
        }
    }

    let stds: Vec<_> = predictions.iter().map(|p| p.std_diag()).collect();
    let mut error = 0.0;
    let mut std_norm = 0.0;
    let mut pooled = [0usize; 3];
    let mut per_output = vec![
        PerOutputReport {
            mean_abs_error: 0.0,
            mean_std: 0.0,
            cr1: 0.0,
            cr2: 0.0,
            cr3: 0.0,
        };
        outputs
    ];
    let mut per_output_counts = vec![[0usize; 3]; outputs];

    for i in 0..n {
        let mut err_sq = 0.0;
        let mut var_sum = 0.0;
        for o in 0..outputs {
            let delta = (targets[(i, o)] - predictions[o].mean[i]).abs();
            let sd = stds[o][i];
            err_sq += delta * delta;
            var_sum += sd * sd;
            per_output[o].mean_abs_error += delta;
            per_output[o].mean_std += sd;
            for (k, count) in per_output_counts[o].iter_mut().enumerate() {
                if delta <= (k + 1) as f64 * sd {
                    *count += 1;
                    pooled[k] += 1;
                }
            }
        }
        error += err_sq.sqrt();
        std_norm += var_sum.sqrt();
    }

    let nf = n as f64;
    for (o, rep) in per_output.iter_mut().enumerate() {
        rep.mean_abs_error /= nf;
        rep.mean_std /= nf;
        rep.cr1 = per_output_counts[o][0] as f64 / nf;
        rep.cr2 = per_output_counts[o][1] as f64 / nf;
        rep.cr3 = per_output_counts[o][2] as f64 / nf;
    }
    let total = (n * outputs) as f64;
    let report = EvalReport {
        error: error / nf,
        std_norm: std_norm / nf,
        cr1: pooled[0] as f64 / total,
        cr2: pooled[1] as f64 / total,
        cr3: pooled[2] as f64 / total,
        n_eval: n,
        per_output,
    };
    debug_assert!(report.cr1 <= report.cr2 && report.cr2 <= report.cr3);
    Ok(report)
}
