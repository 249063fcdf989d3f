//! Exact (non-sparse, non-variational) GP and EGP posteriors for small
//! problems: the correctness oracle the sparse model is checked
//! against. Strict factorizations only; an oracle that silently
//! regularizes its inputs is not an oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::{feature_matrix, BetaPriorRow, FeatureMap};
use crate::gaussian::{cholesky_psd, PsdMatrix};
use crate::kernel::{kernel_matrix, SeKernelParams};
use crate::model::{GaussianPrediction, PredictiveCov};

/// Size guard: the oracle is for verification, not production.
pub const EXACT_MAX_N: usize = 2000;

/// Exact fit on a training set, caching the factor of
/// `K_y = K_xx + sn2 I`.
#[derive(Debug, Clone)]
pub struct ExactFit {
    x_train: DMatrix<f64>,
    y_train: DVector<f64>,
    kernel: SeKernelParams,
    noise_variance: f64,
    features: Option<(FeatureMap, BetaPriorRow)>,
    ky: PsdMatrix,
}

impl ExactFit {
    pub fn new(
        x_train: DMatrix<f64>,
        y_train: DVector<f64>,
        kernel: SeKernelParams,
        noise_variance: f64,
        features: Option<(FeatureMap, BetaPriorRow)>,
    ) -> Result<Self> {
        let n = x_train.nrows();
        if n == 0 || n != y_train.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} training rows, {} targets",
                n,
                y_train.len()
            )));
        }
        if n > EXACT_MAX_N {
            return Err(Error::TooLargeForExact { n, max: EXACT_MAX_N });
        }
        if noise_variance < 0.0 {
            return Err(Error::NonPositiveVariance {
                value: noise_variance,
            });
        }
        if let Some((map, row)) = &features {
            if map.input_dim() != x_train.ncols() {
                return Err(Error::DimensionMismatch(
                    "feature map input dim != training inputs".into(),
                ));
            }
            if row.mean.len() != map.feature_dim() {
                return Err(Error::DimensionMismatch(
                    "prior row length != feature dim".into(),
                ));
            }
        }
        let mut k = kernel_matrix(&x_train, &x_train, &kernel)?;
        for i in 0..n {
            k[(i, i)] += noise_variance;
        }
        let ky = cholesky_psd(&k, 0.0)?;
        Ok(Self {
            x_train,
            y_train,
            kernel,
            noise_variance,
            features,
            ky,
        })
    }

    pub fn len(&self) -> usize {
        self.x_train.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x_train.nrows() == 0
    }

    fn check_query(&self, x_star: &DMatrix<f64>) -> Result<()> {
        if x_star.nrows() == 0 || x_star.ncols() != self.x_train.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "query {}x{} against training inputs with {} columns",
                x_star.nrows(),
                x_star.ncols(),
                self.x_train.ncols()
            )));
        }
        Ok(())
    }

    /// Standard GP regression posterior (denoised):
    /// mean `K_*x K_y^-1 y`, covariance `K_** - K_*x K_y^-1 K_x*`.
    pub fn gp_posterior(&self, x_star: &DMatrix<f64>) -> Result<GaussianPrediction> {
        if self.features.is_some() {
            return Err(Error::InvalidConfig(
                "gp_posterior requires a fit without features".into(),
            ));
        }
        self.check_query(x_star)?;
        let (mean, cov) = self.gp_parts(x_star, &self.y_train)?;
        Ok(GaussianPrediction {
            mean,
            cov: PredictiveCov::Full(cov),
            includes_observation_noise: false,
        })
    }

    fn gp_parts(
        &self,
        x_star: &DMatrix<f64>,
        targets: &DVector<f64>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let k_sx = kernel_matrix(x_star, &self.x_train, &self.kernel)?;
        let k_ss = kernel_matrix(x_star, x_star, &self.kernel)?;
        let solved = self.ky.solve_mat(&k_sx.transpose()); // n x n*
        let mean = &k_sx * self.ky.solve_vec(targets);
        let cov = k_ss - &k_sx * solved;
        Ok((mean, cov))
    }

    /// Exact EGP posterior with a finite weight prior. With p = 0
    /// features this reduces exactly to [`Self::gp_posterior`].
    pub fn egp_posterior(&self, x_star: &DMatrix<f64>) -> Result<GaussianPrediction> {
        let (map, row) = self
            .features
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("egp_posterior requires features".into()))?;
        self.check_query(x_star)?;
        let p = map.feature_dim();
        if p == 0 {
            let (mean, cov) = self.gp_parts(x_star, &self.y_train)?;
            return Ok(GaussianPrediction {
                mean,
                cov: PredictiveCov::Full(cov),
                includes_observation_noise: false,
            });
        }
        let h = feature_matrix(*map, &self.x_train)?; // n x p
        let h_star = feature_matrix(*map, x_star)?; // n* x p
        let prior_prec = row.std.map(|s| 1.0 / (s * s));

        // P = S_b^-1 + H^T K_y^-1 H via the half-solve
        let g = self.ky.half_solve_mat(&h); // L^-1 H
        let mut p_mat = g.transpose() * &g;
        for j in 0..p {
            p_mat[(j, j)] += prior_prec[j];
        }
        let p_factored = cholesky_psd(&p_mat, 0.0)?;
        let ky_inv_y = self.ky.solve_vec(&self.y_train);
        let rhs = h.transpose() * &ky_inv_y + prior_prec.component_mul(&row.mean);
        let beta_bar = p_factored.solve_vec(&rhs);

        let k_sx = kernel_matrix(x_star, &self.x_train, &self.kernel)?;
        let k_ss = kernel_matrix(x_star, x_star, &self.kernel)?;
        let residual = &self.y_train - &h * &beta_bar;
        let mean = &h_star * &beta_bar + &k_sx * self.ky.solve_vec(&residual);

        let ky_inv_ks = self.ky.solve_mat(&k_sx.transpose()); // n x n*
        let r = h_star.transpose() - h.transpose() * &ky_inv_ks; // p x n*
        let half = p_factored.half_solve_mat(&r); // Lp^-1 R
        let cov = k_ss - &k_sx * ky_inv_ks + half.transpose() * half;
        Ok(GaussianPrediction {
            mean,
            cov: PredictiveCov::Full(cov),
            includes_observation_noise: false,
        })
    }

    /// Exact log marginal likelihood `ln p(y | X)`; for the EGP the
    /// weights are marginalized analytically:
    /// `y ~ N(H mu_b, K_y + H S_b H^T)`.
    pub fn log_marginal(&self) -> Result<f64> {
        let n = self.len() as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        match &self.features {
            Some((map, row)) if map.feature_dim() > 0 => {
                let h = feature_matrix(*map, &self.x_train)?;
                let mut c = kernel_matrix(&self.x_train, &self.x_train, &self.kernel)?;
                for i in 0..self.len() {
                    c[(i, i)] += self.noise_variance;
                }
                let scaled = {
                    let mut hh = h.clone();
                    for j in 0..row.std.len() {
                        let s2 = row.std[j] * row.std[j];
                        hh.column_mut(j).scale_mut(s2);
                    }
                    hh
                };
                c += scaled * h.transpose();
                let factored = cholesky_psd(&c, 0.0)?;
                let delta = &self.y_train - h * &row.mean;
                let quad = factored.half_solve_vec(&delta).norm_squared();
                Ok(-0.5 * (quad + factored.log_det() + n * two_pi.ln()))
            }
            _ => {
                let quad = self.ky.half_solve_vec(&self.y_train).norm_squared();
                Ok(-0.5 * (quad + self.ky.log_det() + n * two_pi.ln()))
            }
        }
    }
}
