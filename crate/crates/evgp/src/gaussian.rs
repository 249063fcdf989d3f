//! Multivariate-Gaussian primitives shared by every other module.
//!
//! All Gaussian algebra in this crate goes through Cholesky factors;
//! nothing here (or anywhere else in the repository) inverts a dense
//! matrix directly. Where an inverse is genuinely required as a value
//! (gradients of log-determinants), it is assembled from triangular
//! solves against the identity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Jitter ladder tried in order by [`cholesky_psd`]. Kernel matrices at
/// clustered inducing points are frequently near-singular, so a single
/// fixed jitter either biases well-conditioned problems or fails hard
/// ones; the ladder picks the smallest value that factorizes.
pub const JITTER_LADDER: [f64; 5] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4];

/// Default upper bound on the jitter ladder.
pub const DEFAULT_JITTER_MAX: f64 = 1e-4;

/// A positive semi-definite matrix held by its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    lower: DMatrix<f64>,
    jitter_applied: f64,
}

impl PsdMatrix {
    /// Wrap an existing lower-triangular factor with strictly positive
    /// diagonal. The represented matrix is `L * L^T`.
    pub fn from_lower_factor(lower: DMatrix<f64>) -> Result<Self> {
        if lower.nrows() != lower.ncols() || lower.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "lower factor must be square and non-empty, got {}x{}",
                lower.nrows(),
                lower.ncols()
            )));
        }
        for i in 0..lower.nrows() {
            let d = lower[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NonPositiveVariance { value: d });
            }
        }
        Ok(Self {
            lower,
            jitter_applied: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// Rebuild the dense matrix `L * L^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    /// `ln |L L^T|`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solve `(L L^T) x = b`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self
            .lower
            .solve_lower_triangular(b)
            .expect("factor diagonal is strictly positive");
        self.lower
            .tr_solve_lower_triangular(&y)
            .expect("factor diagonal is strictly positive")
    }

    /// Solve `(L L^T) X = B` column-wise.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self
            .lower
            .solve_lower_triangular(b)
            .expect("factor diagonal is strictly positive");
        self.lower
            .tr_solve_lower_triangular(&y)
            .expect("factor diagonal is strictly positive")
    }

    /// Solve `L x = b` (half solve; `||half_solve(b)||^2 = b^T (LL^T)^-1 b`).
    pub fn half_solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("factor diagonal is strictly positive")
    }

    /// Solve `L X = B`.
    pub fn half_solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("factor diagonal is strictly positive")
    }

    /// Materialize `(L L^T)^-1` from the factor. Used only where the
    /// inverse itself is the required value (gradient of a log-det);
    /// never as an intermediate for solving systems.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve_mat(&DMatrix::identity(self.dim(), self.dim()))
    }
}

/// Factor a symmetric PSD matrix, escalating through the jitter ladder.
///
/// Returns `L` with `L L^T = M + eps I` where `eps` is the smallest
/// ladder value (capped at `jitter_max`) for which the factorization
/// succeeds; `eps` is recorded on the result for diagnostics.
pub fn cholesky_psd(m: &DMatrix<f64>, jitter_max: f64) -> Result<PsdMatrix> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "matrix must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut max_delta = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            max_delta = max_delta.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_delta > 1e-10 * scale {
        return Err(Error::NotSymmetric { max_delta });
    }

    for &eps in JITTER_LADDER.iter().filter(|&&e| e <= jitter_max) {
        let mut candidate = m.clone();
        if eps > 0.0 {
            for i in 0..candidate.nrows() {
                candidate[(i, i)] += eps;
            }
        }
        if let Some(chol) = candidate.cholesky() {
            let lower = chol.unpack();
            // A zero pivot can slip through as +0.0; reject it.
            if lower.diagonal().iter().all(|&d| d > 0.0 && d.is_finite()) {
                return Ok(PsdMatrix {
                    lower,
                    jitter_applied: eps,
                });
            }
        }
    }
    Err(Error::NotPsdWithinJitter { jitter_max })
}

/// Mean and covariance of a multivariate normal.
#[derive(Debug, Clone)]
pub struct MvnParams {
    pub mean: DVector<f64>,
    pub cov: PsdMatrix,
}

impl MvnParams {
    pub fn new(mean: DVector<f64>, cov: PsdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean length {} != covariance dim {}",
                mean.len(),
                cov.dim()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `D_KL(q || p)` between two multivariate normals, computed from the
/// Cholesky factors:
///
/// `0.5 * [ tr(S_p^-1 S_q) + (m_p - m_q)^T S_p^-1 (m_p - m_q) - d
///          + ln|S_p| - ln|S_q| ]`
pub fn kl_mvn(q: &MvnParams, p: &MvnParams) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "KL between dim {} and dim {}",
            q.dim(),
            p.dim()
        )));
    }
    let d = q.dim() as f64;
    let m = p.cov.half_solve_mat(q.cov.lower());
    let trace = m.iter().map(|v| v * v).sum::<f64>();
    let delta = &p.mean - &q.mean;
    let w = p.cov.half_solve_vec(&delta);
    let quad = w.norm_squared();
    Ok(0.5 * (trace + quad - d + p.cov.log_det() - q.cov.log_det()))
}

/// Log-density of `y` under a Gaussian with diagonal covariance.
/// Factorizes across entries, which is what minibatching relies on.
pub fn mvn_log_density(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    cov_diag: &DVector<f64>,
) -> Result<f64> {
    if y.len() != mean.len() || y.len() != cov_diag.len() {
        return Err(Error::DimensionMismatch(format!(
            "log-density lengths y={}, mean={}, cov_diag={}",
            y.len(),
            mean.len(),
            cov_diag.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..y.len() {
        let var = cov_diag[i];
        if !(var > 0.0) {
            return Err(Error::NonPositiveVariance { value: var });
        }
        let r = y[i] - mean[i];
        total += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - r * r / (2.0 * var);
    }
    Ok(total)
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`]; requires `y > 0`.
pub fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Unconstrained parameterization of a PSD matrix.
///
/// The covariance is `L L^T` where `L` is lower triangular with its
/// diagonal passed through softplus, so any real-valued parameter
/// matrix yields a valid PSD covariance under unconstrained gradient
/// steps. The strict upper triangle of `theta` is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CholParams {
    theta: DMatrix<f64>,
}

impl CholParams {
    /// Parameterize a given lower factor exactly (diagonal through
    /// `inv_softplus`). Round-trips through [`Self::factor`] to within
    /// an ulp.
    pub fn from_factor(lower: &DMatrix<f64>) -> Result<Self> {
        if lower.nrows() != lower.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "factor must be square, got {}x{}",
                lower.nrows(),
                lower.ncols()
            )));
        }
        let n = lower.nrows();
        let mut theta = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = lower[(i, i)];
            if !(d > 0.0) {
                return Err(Error::NonPositiveVariance { value: d });
            }
            theta[(i, i)] = inv_softplus(d);
            for j in 0..i {
                theta[(i, j)] = lower[(i, j)];
            }
        }
        Ok(Self { theta })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            theta: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.theta
    }

    /// The lower factor `L` this parameter block represents.
    pub fn factor(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = softplus(self.theta[(i, i)]);
            for j in 0..i {
                l[(i, j)] = self.theta[(i, j)];
            }
        }
        l
    }

    pub fn to_psd(&self) -> Result<PsdMatrix> {
        PsdMatrix::from_lower_factor(self.factor())
    }

    /// Chain rule from a covariance gradient `G = dLoss/dCov` (free
    /// symmetric gradient) to the unconstrained parameters:
    /// `dLoss/dL = (G + G^T) L`, lower triangle kept, diagonal scaled
    /// by `sigmoid(theta_ii)`.
    pub fn chain_from_cov_grad(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let l = self.factor();
        let dl = (g + g.transpose()) * &l;
        let mut dtheta = DMatrix::zeros(n, n);
        for i in 0..n {
            dtheta[(i, i)] = dl[(i, i)] * sigmoid(self.theta[(i, i)]);
            for j in 0..i {
                dtheta[(i, j)] = dl[(i, j)];
            }
        }
        dtheta
    }
}
