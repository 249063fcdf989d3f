//! Squared-exponential (ARD) covariance function and kernel-matrix
//! assembly. Hyperparameters live in log space so the trainer can
//! optimize them unconstrained alongside the variational parameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// ARD squared-exponential kernel hyperparameters:
/// `k(x, x') = sf2 * exp(-0.5 * sum_d (x_d - x'_d)^2 / ell_d^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeKernelParams {
    /// One log-lengthscale per input dimension.
    pub log_lengthscales: DVector<f64>,
    /// Log of the signal variance `sf2`.
    pub log_signal_variance: f64,
}

impl SeKernelParams {
    pub fn new(lengthscales: &[f64], signal_variance: f64) -> Result<Self> {
        if lengthscales.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidConfig(
                "lengthscales must be strictly positive and finite".into(),
            ));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::NonPositiveVariance {
                value: signal_variance,
            });
        }
        Ok(Self {
            log_lengthscales: DVector::from_iterator(
                lengthscales.len(),
                lengthscales.iter().map(|l| l.ln()),
            ),
            log_signal_variance: signal_variance.ln(),
        })
    }

    /// Standard initialization: lengthscale = per-dimension standard
    /// deviation of the inputs, signal variance = target variance.
    /// Degenerate (constant) input columns fall back to lengthscale 1.
    pub fn heuristic(inputs: &DMatrix<f64>, target_variance: f64) -> Self {
        let n = inputs.nrows().max(1) as f64;
        let d = inputs.ncols();
        let mut log_ls = DVector::zeros(d);
        for j in 0..d {
            let col = inputs.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            log_ls[j] = if sd > 1e-12 { sd.ln() } else { 0.0 };
        }
        Self {
            log_lengthscales: log_ls,
            log_signal_variance: target_variance.max(1e-12).ln(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn lengthscales(&self) -> DVector<f64> {
        self.log_lengthscales.map(|v| v.exp())
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }
}

fn check_dims(x: &DVector<f64>, x2: &DVector<f64>, params: &SeKernelParams) -> Result<()> {
    if x.len() != x2.len() || x.len() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "kernel inputs of length {} and {} with {} lengthscales",
            x.len(),
            x2.len(),
            params.input_dim()
        )));
    }
    Ok(())
}

/// Evaluate the SE kernel on a pair of points.
pub fn se_kernel(x: &DVector<f64>, x2: &DVector<f64>, params: &SeKernelParams) -> Result<f64> {
    check_dims(x, x2, params)?;
    let mut q = 0.0;
    for d in 0..x.len() {
        let inv_l = (-params.log_lengthscales[d]).exp();
        let delta = (x[d] - x2[d]) * inv_l;
        q += delta * delta;
    }
    Ok(params.signal_variance() * (-0.5 * q).exp())
}

/// Kernel value together with its partial derivatives w.r.t.
/// `log_lengthscales` and `log_signal_variance`.
pub fn se_kernel_grad(
    x: &DVector<f64>,
    x2: &DVector<f64>,
    params: &SeKernelParams,
) -> Result<(f64, DVector<f64>, f64)> {
    let value = se_kernel(x, x2, params)?;
    let mut d_log_ls = DVector::zeros(x.len());
    for d in 0..x.len() {
        let inv_l = (-params.log_lengthscales[d]).exp();
        let delta = (x[d] - x2[d]) * inv_l;
        // d/d log(ell_d) of -0.5 delta^2 = delta^2
        d_log_ls[d] = value * delta * delta;
    }
    Ok((value, d_log_ls, value))
}

/// Entry `(i, j)` is the kernel of row `i` of `xa` and row `j` of `xb`.
pub fn kernel_matrix(
    xa: &DMatrix<f64>,
    xb: &DMatrix<f64>,
    params: &SeKernelParams,
) -> Result<DMatrix<f64>> {
    let d = params.input_dim();
    if xa.ncols() != d || xb.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "kernel matrix inputs with {} and {} columns, {} lengthscales",
            xa.ncols(),
            xb.ncols(),
            d
        )));
    }
    let sf2 = params.signal_variance();
    let inv_l: Vec<f64> = params
        .log_lengthscales
        .iter()
        .map(|v| (-v).exp())
        .collect();
    let mut out = DMatrix::zeros(xa.nrows(), xb.nrows());
    for i in 0..xa.nrows() {
        for j in 0..xb.nrows() {
            let mut q = 0.0;
            for (k, il) in inv_l.iter().enumerate() {
                let delta = (xa[(i, k)] - xb[(j, k)]) * il;
                q += delta * delta;
            }
            out[(i, j)] = sf2 * (-0.5 * q).exp();
        }
    }
    Ok(out)
}

/// Diagonal of `kernel_matrix(x, x, params)`. The SE kernel is
/// stationary, so this is the signal variance repeated.
pub fn kernel_diag(x: &DMatrix<f64>, params: &SeKernelParams) -> Result<DVector<f64>> {
    if x.ncols() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "kernel diag input with {} columns, {} lengthscales",
            x.ncols(),
            params.input_dim()
        )));
    }
    Ok(DVector::from_element(x.nrows(), params.signal_variance()))
}
