//! The EVGP posterior machinery for one output dimension: negative
//! ELBO evaluation and the predictive distribution.
//!
//! The loss for a batch `(X, y)` from a dataset of `N` samples is
//!
//! ```text
//! (1/|X|) [ -ln N(y | H b + K_xm K_mm^-1 a, sn2 I)
//!           + 0.5 (tr(M1 A) + tr(M2 B) + tr(Sy^-1 Sigma_f|w)) ]
//! + (1/N)  [ KL(N(a,A) || N(0,K_mm)) + KL(N(b,B) || N(mu_b,S_b)) ]
//! ```
//!
//! with `M1 = (K_mm^-1 K_mx) Sy^-1 (K_xm K_mm^-1)`,
//! `M2 = H^T Sy^-1 H`, and only the diagonal of the conditional
//! covariance `Sigma_f|w` entering the trace. Every `K_mm` solve goes
//! through its Cholesky factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::{feature_matrix, BetaPriorRow, FeatureMap};
use crate::gaussian::{
    cholesky_psd, kl_mvn, CholParams, MvnParams, PsdMatrix, DEFAULT_JITTER_MAX,
};
use crate::kernel::{kernel_diag, kernel_matrix, SeKernelParams};

/// Trainable parameters of one output's variational posterior:
/// inducing-point posterior `N(a, A)`, feature-weight posterior
/// `N(b, B)`, the inducing inputs, and kernel/noise hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    /// Posterior mean of the inducing values (`a`, length `m`).
    pub inducing_mean: DVector<f64>,
    /// Posterior covariance of the inducing values (`A`), stored as
    /// unconstrained Cholesky parameters.
    pub inducing_cov: CholParams,
    /// Posterior mean of the feature weights (`b`, length `p`).
    pub beta_mean: DVector<f64>,
    /// Posterior covariance of the feature weights (`B`).
    pub beta_cov: CholParams,
    /// Inducing inputs `X_m` (`m x input_dim`).
    pub inducing_inputs: DMatrix<f64>,
    pub kernel: SeKernelParams,
    /// Per-output isotropic observation noise, `sn2 = exp(...)`.
    pub log_noise_variance: f64,
}

impl VariationalState {
    pub fn num_inducing(&self) -> usize {
        self.inducing_mean.len()
    }

    pub fn num_features(&self) -> usize {
        self.beta_mean.len()
    }

    pub fn input_dim(&self) -> usize {
        self.inducing_inputs.ncols()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    /// Number of trainable scalars: `a`, the lower triangles of `A` and
    /// `B`, `b`, `X_m`, log-lengthscales, log signal and noise variances.
    pub fn num_trainable_params(&self) -> usize {
        let m = self.num_inducing();
        let p = self.num_features();
        let d = self.input_dim();
        m + m * (m + 1) / 2 + p + p * (p + 1) / 2 + m * d + self.kernel.input_dim() + 2
    }

    pub fn validate(&self, map: FeatureMap) -> Result<()> {
        let m = self.num_inducing();
        let p = self.num_features();
        if m == 0 && p == 0 {
            return Err(Error::InvalidConfig(
                "a state needs inducing points or features (m = 0 requires p > 0)".into(),
            ));
        }
        if self.inducing_cov.dim() != m || self.inducing_inputs.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "inducing blocks disagree: a has {m}, A is {}x{}, X_m has {} rows",
                self.inducing_cov.dim(),
                self.inducing_cov.dim(),
                self.inducing_inputs.nrows()
            )));
        }
        if self.beta_cov.dim() != p || map.feature_dim() != p {
            return Err(Error::DimensionMismatch(format!(
                "feature blocks disagree: b has {p}, B is {}x{}, map produces {}",
                self.beta_cov.dim(),
                self.beta_cov.dim(),
                map.feature_dim()
            )));
        }
        if self.kernel.input_dim() != map.input_dim()
            || (m > 0 && self.inducing_inputs.ncols() != map.input_dim())
        {
            return Err(Error::DimensionMismatch(format!(
                "input dims disagree: kernel {}, X_m {}, map {}",
                self.kernel.input_dim(),
                self.inducing_inputs.ncols(),
                map.input_dim()
            )));
        }
        if !self.log_noise_variance.is_finite() {
            return Err(Error::NonPositiveVariance {
                value: self.log_noise_variance,
            });
        }
        Ok(())
    }
}

/// The additive pieces of the negative ELBO for one batch, before and
/// after scaling. Useful for diagnostics and for tests that pin down
/// individual terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboBreakdown {
    pub batch_size: usize,
    pub full_size: usize,
    /// `(n/2) ln(2 pi sn2)`.
    pub nll_norm: f64,
    /// `||y - mean||^2 / (2 sn2)`.
    pub nll_quad: f64,
    /// `tr(M1 A)`.
    pub trace_inducing: f64,
    /// `tr(M2 B)`.
    pub trace_beta: f64,
    /// `tr(Sy^-1 Sigma_f|w)` (diagonal only).
    pub trace_conditional: f64,
    pub kl_inducing: f64,
    pub kl_beta: f64,
    /// Jitter used to factor `K_mm` in this evaluation.
    pub jitter_applied: f64,
}

impl ElboBreakdown {
    /// Batch-scaled expected-log-likelihood part: everything except the
    /// KL, divided by the batch size.
    pub fn data_term(&self) -> f64 {
        (self.nll_norm
            + self.nll_quad
            + 0.5 * (self.trace_inducing + self.trace_beta + self.trace_conditional))
            / self.batch_size as f64
    }

    /// KL part scaled by the full dataset size.
    pub fn kl_term(&self) -> f64 {
        (self.kl_inducing + self.kl_beta) / self.full_size as f64
    }

    pub fn total(&self) -> f64 {
        self.data_term() + self.kl_term()
    }
}

/// Intermediate quantities shared by the loss and its gradients.
pub(crate) struct Evaluation {
    pub sigma2: f64,
    /// Raw (un-jittered) `K_mm`; hyperparameter gradients chain through
    /// the kernel values, not the jitter.
    pub k_mm_raw: DMatrix<f64>,
    pub k_mm: Option<PsdMatrix>,
    pub k_xm: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// `K_mm^-1 a`.
    pub alpha: DVector<f64>,
    /// `K_mm^-1 K_mx` (`m x n`).
    pub w: DMatrix<f64>,
    pub residual: DVector<f64>,
    pub a_factor: DMatrix<f64>,
    pub b_factor: DMatrix<f64>,
    pub breakdown: ElboBreakdown,
}

fn check_batch(
    state: &VariationalState,
    prior_row: &BetaPriorRow,
    map: FeatureMap,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    full_dataset_size: usize,
) -> Result<()> {
    state.validate(map)?;
    if x.nrows() == 0 {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "batch has {} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != map.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "batch has {} columns, map expects {}",
            x.ncols(),
            map.input_dim()
        )));
    }
    if full_dataset_size < x.nrows() {
        return Err(Error::InvalidConfig(format!(
            "full dataset size {} smaller than batch {}",
            full_dataset_size,
            x.nrows()
        )));
    }
    if prior_row.mean.len() != state.num_features()
        || prior_row.std.len() != state.num_features()
    {
        return Err(Error::DimensionMismatch(format!(
            "prior row has {} entries, state has {} features",
            prior_row.mean.len(),
            state.num_features()
        )));
    }
    Ok(())
}

pub(crate) fn evaluate(
    state: &VariationalState,
    prior_row: &BetaPriorRow,
    map: FeatureMap,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    full_dataset_size: usize,
) -> Result<Evaluation> {
    check_batch(state, prior_row, map, x, y, full_dataset_size)?;
    let n = x.nrows();
    let m = state.num_inducing();
    let p = state.num_features();
    let sigma2 = state.noise_variance();

    let h = feature_matrix(map, x)?;
    let kdiag = kernel_diag(x, &state.kernel)?;
    let a_factor = state.inducing_cov.factor();
    let b_factor = state.beta_cov.factor();

    let (k_mm_raw, k_mm, k_xm, alpha, w) = if m > 0 {
        let k_mm_raw = kernel_matrix(&state.inducing_inputs, &state.inducing_inputs, &state.kernel)?;
        let k_mm = cholesky_psd(&k_mm_raw, DEFAULT_JITTER_MAX)?;
        let k_xm = kernel_matrix(x, &state.inducing_inputs, &state.kernel)?;
        let alpha = k_mm.solve_vec(&state.inducing_mean);
        let w = k_mm.solve_mat(&k_xm.transpose());
        (k_mm_raw, Some(k_mm), k_xm, alpha, w)
    } else {
        (
            DMatrix::zeros(0, 0),
            None,
            DMatrix::zeros(n, 0),
            DVector::zeros(0),
            DMatrix::zeros(0, n),
        )
    };

    let mut mean = &k_xm * &alpha;
    if p > 0 {
        mean += &h * &state.beta_mean;
    }
    let residual = y - &mean;

    let nll_norm = 0.5 * n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln();
    let nll_quad = residual.norm_squared() / (2.0 * sigma2);

    // tr(M1 A) = ||L_A^T W||_F^2 / sn2
    let trace_inducing = if m > 0 {
        (a_factor.transpose() * &w).iter().map(|v| v * v).sum::<f64>() / sigma2
    } else {
        0.0
    };
    // tr(M2 B) = ||L_B^T H^T||_F^2 / sn2
    let trace_beta = if p > 0 {
        (b_factor.transpose() * h.transpose())
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            / sigma2
    } else {
        0.0
    };
    // tr(Sy^-1 Sigma_f|w): sum of kdiag minus the Nystrom correction.
    let nystrom: f64 = (0..n)
        .map(|i| k_xm.row(i).iter().zip(w.column(i).iter()).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    let trace_conditional = (kdiag.sum() - nystrom) / sigma2;

    let kl_inducing = match &k_mm {
        Some(k_mm) => {
            let q = MvnParams::new(
                state.inducing_mean.clone(),
                PsdMatrix::from_lower_factor(a_factor.clone())?,
            )?;
            let pr = MvnParams::new(DVector::zeros(m), k_mm.clone())?;
            kl_mvn(&q, &pr)?
        }
        None => 0.0,
    };
    let kl_beta = if p > 0 {
        let q = MvnParams::new(
            state.beta_mean.clone(),
            PsdMatrix::from_lower_factor(b_factor.clone())?,
        )?;
        let pr = MvnParams::new(
            prior_row.mean.clone(),
            PsdMatrix::from_lower_factor(DMatrix::from_diagonal(&prior_row.std))?,
        )?;
        kl_mvn(&q, &pr)?
    } else {
        0.0
    };

    let breakdown = ElboBreakdown {
        batch_size: n,
        full_size: full_dataset_size,
        nll_norm,
        nll_quad,
        trace_inducing,
        trace_beta,
        trace_conditional,
        kl_inducing,
        kl_beta,
        jitter_applied: k_mm.as_ref().map_or(0.0, |k| k.jitter_applied()),
    };

    Ok(Evaluation {
        sigma2,
        k_mm_raw,
        k_mm,
        k_xm,
        h,
        alpha,
        w,
        residual,
        a_factor,
        b_factor,
        breakdown,
    })
}

/// Negative ELBO of one batch with minibatch scaling.
pub fn negative_elbo(
    state: &VariationalState,
    prior_row: &BetaPriorRow,
    map: FeatureMap,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    full_dataset_size: usize,
) -> Result<f64> {
    Ok(negative_elbo_breakdown(state, prior_row, map, x, y, full_dataset_size)?.total())
}

/// Negative ELBO with its additive pieces exposed.
pub fn negative_elbo_breakdown(
    state: &VariationalState,
    prior_row: &BetaPriorRow,
    map: FeatureMap,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    full_dataset_size: usize,
) -> Result<ElboBreakdown> {
    Ok(evaluate(state, prior_row, map, x, y, full_dataset_size)?.breakdown)
}

/// Predictive covariance, either dense or diagonal-only.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictiveCov {
    Full(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

/// Gaussian predictive distribution over a query batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrediction {
    pub mean: DVector<f64>,
    pub cov: PredictiveCov,
    pub includes_observation_noise: bool,
}

impl GaussianPrediction {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn variance_diag(&self) -> DVector<f64> {
        match &self.cov {
            PredictiveCov::Full(c) => c.diagonal(),
            PredictiveCov::Diagonal(d) => d.clone(),
        }
    }

    pub fn std_diag(&self) -> DVector<f64> {
        self.variance_diag().map(|v| v.max(0.0).sqrt())
    }
}

/// Predictive distribution of the denoised output `g` at `x_star`
/// (plus observation noise when `with_noise` is set):
///
/// mean `H* b + K*m K_mm^-1 a`, covariance
/// `Sigma_f|w + H* B H*^T + K*m K_mm^-1 A K_mm^-1 K_m*`.
pub fn predict(
    state: &VariationalState,
    map: FeatureMap,
    x_star: &DMatrix<f64>,
    with_noise: bool,
    diag_only: bool,
) -> Result<GaussianPrediction> {
    state.validate(map)?;
    if x_star.nrows() == 0 {
        return Err(Error::InvalidConfig("empty query".into()));
    }
    if x_star.ncols() != map.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "query has {} columns, map expects {}",
            x_star.ncols(),
            map.input_dim()
        )));
    }
    let n = x_star.nrows();
    let m = state.num_inducing();
    let p = state.num_features();
    let sigma2 = state.noise_variance();

    let h = feature_matrix(map, x_star)?;
    let a_factor = state.inducing_cov.factor();
    let b_factor = state.beta_cov.factor();

    let (k_sm, s) = if m > 0 {
        let k_mm_raw =
            kernel_matrix(&state.inducing_inputs, &state.inducing_inputs, &state.kernel)?;
        let k_mm = cholesky_psd(&k_mm_raw, DEFAULT_JITTER_MAX)?;
        let k_sm = kernel_matrix(x_star, &state.inducing_inputs, &state.kernel)?;
        // S = K_mm^-1 K_m*
        let s = k_mm.solve_mat(&k_sm.transpose());
        (k_sm, s)
    } else {
        (DMatrix::zeros(n, 0), DMatrix::zeros(0, n))
    };

    // K*m K_mm^-1 a = (K_mm^-1 K_m*)^T a = S^T a
    let mut mean = if m > 0 {
        s.transpose() * &state.inducing_mean
    } else {
        DVector::zeros(n)
    };
    if p > 0 {
        mean += &h * &state.beta_mean;
    }

    let cov = if diag_only {
        let kdiag = kernel_diag(x_star, &state.kernel)?;
        let mut var = DVector::zeros(n);
        let la_t_s = if m > 0 {
            a_factor.transpose() * &s
        } else {
            DMatrix::zeros(0, n)
        };
        let lb_t_h = if p > 0 {
            b_factor.transpose() * h.transpose()
        } else {
            DMatrix::zeros(0, n)
        };
        for i in 0..n {
            let nystrom: f64 = k_sm
                .row(i)
                .iter()
                .zip(s.column(i).iter())
                .map(|(a, b)| a * b)
                .sum();
            // conditional-GP variance; clamp tiny negative rounding
            let cond = (kdiag[i] - nystrom).max(0.0);
            let wa = la_t_s.column(i).norm_squared();
            let hb = lb_t_h.column(i).norm_squared();
            var[i] = cond + wa + hb + if with_noise { sigma2 } else { 0.0 };
        }
        PredictiveCov::Diagonal(var)
    } else {
        let k_ss = kernel_matrix(x_star, x_star, &state.kernel)?;
        let mut cov = k_ss;
        if m > 0 {
            cov -= &k_sm * &s;
            let la_t_s = a_factor.transpose() * &s;
            cov += la_t_s.transpose() * la_t_s;
        }
        if p > 0 {
            let lb_t_h = b_factor.transpose() * h.transpose();
            cov += lb_t_h.transpose() * lb_t_h;
        }
        if with_noise {
            for i in 0..n {
                cov[(i, i)] += sigma2;
            }
        }
        PredictiveCov::Full(cov)
    };

    Ok(GaussianPrediction {
        mean,
        cov,
        includes_observation_noise: with_noise,
    })
}

/// Independent per-output predictions; outputs share nothing but the
/// query matrix, so this is a checked loop over [`predict`].
pub fn multi_output_predict(
    states: &[VariationalState],
    map: FeatureMap,
    x_star: &DMatrix<f64>,
    with_noise: bool,
    diag_only: bool,
) -> Result<Vec<GaussianPrediction>> {
    if states.is_empty() {
        return Err(Error::InvalidConfig("no per-output states supplied".into()));
    }
    let d = states[0].input_dim();
    if states.iter().any(|s| s.input_dim() != d) {
        return Err(Error::DimensionMismatch(
            "per-output states disagree on input dimension".into(),
        ));
    }
    states
        .iter()
        .map(|s| predict(s, map, x_star, with_noise, diag_only))
        .collect()
}

/// Posterior-equals-prior initialization of a state: `a = 0`,
/// `A = K_mm`, `b = mu_beta`, `B = S_beta`. The initial KL is zero, so
/// the initial loss is exactly the scaled data term.
pub fn prior_initialized_state(
    inducing_inputs: DMatrix<f64>,
    kernel: SeKernelParams,
    prior_row: &BetaPriorRow,
    log_noise_variance: f64,
) -> Result<VariationalState> {
    let m = inducing_inputs.nrows();
    let p = prior_row.mean.len();
    let inducing_cov = if m > 0 {
        let k_mm = kernel_matrix(&inducing_inputs, &inducing_inputs, &kernel)?;
        let f = cholesky_psd(&k_mm, DEFAULT_JITTER_MAX)?;
        CholParams::from_factor(f.lower())?
    } else {
        CholParams::zeros(0)
    };
    let beta_cov = if p > 0 {
        CholParams::from_factor(&DMatrix::from_diagonal(&prior_row.std))?
    } else {
        CholParams::zeros(0)
    };
    Ok(VariationalState {
        inducing_mean: DVector::zeros(m),
        inducing_cov,
        beta_mean: prior_row.mean.clone(),
        beta_cov,
        inducing_inputs,
        kernel,
        log_noise_variance,
    })
}
