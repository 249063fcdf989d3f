//! Explicit feature maps `h(x)` and Gaussian priors over their weights,
//! encoding simplified Newtonian mechanics: Euler-step structure for
//! inertia and applied force, optional sine terms for gravity.
//!
//! Model inputs are ordered `[positions..., velocities..., controls...]`
//! throughout the crate.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior standard deviation for structural entries (the 1, dt and
/// structural-zero positions of the Euler-step matrices). Nonzero so
/// the weight-prior covariance stays invertible for the KL while still
/// expressing confidence in the Euler structure.
pub const STRUCTURAL_STD: f64 = 0.1;

/// Prior standard deviation for unknown physical coefficients
/// (inertia-scaled actuation and gravity factors).
pub const UNKNOWN_STD: f64 = 10.0;

/// Identifier of an explicit feature map.
///
/// `IF` maps carry inertia+force structure: `[positions, velocities,
/// control]`. `IFG` maps append gravity terms: sines of the absolute
/// link angles. `ZeroFeatures` has an empty feature vector and degrades
/// the model to the plain zero-mean sparse variational GP baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    /// `[x, 1]` on scalar input: a global linear trend.
    Linear1D,
    PendulumIf,
    PendulumIfg,
    CartpoleIf,
    CartpoleIfg,
    AcrobotIf,
    AcrobotIfg,
    ZeroFeatures { input_dim: usize },
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Linear1D => 1,
            FeatureMap::PendulumIf | FeatureMap::PendulumIfg => 3,
            FeatureMap::CartpoleIf | FeatureMap::CartpoleIfg => 5,
            FeatureMap::AcrobotIf | FeatureMap::AcrobotIfg => 5,
            FeatureMap::ZeroFeatures { input_dim } => *input_dim,
        }
    }

    /// Number of features `p` produced by [`features`].
    pub fn feature_dim(&self) -> usize {
        match self {
            FeatureMap::Linear1D => 2,
            FeatureMap::PendulumIf => 3,
            FeatureMap::PendulumIfg => 4,
            FeatureMap::CartpoleIf | FeatureMap::AcrobotIf => 5,
            FeatureMap::CartpoleIfg => 6,
            FeatureMap::AcrobotIfg => 7,
            FeatureMap::ZeroFeatures { .. } => 0,
        }
    }

    /// Number of model outputs the default prior covers (the next-state
    /// dimension for the physics maps).
    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Linear1D => 1,
            FeatureMap::PendulumIf | FeatureMap::PendulumIfg => 2,
            FeatureMap::CartpoleIf
            | FeatureMap::CartpoleIfg
            | FeatureMap::AcrobotIf
            | FeatureMap::AcrobotIfg => 4,
            FeatureMap::ZeroFeatures { .. } => 0,
        }
    }

    /// Human-readable feature labels, in feature order.
    pub fn feature_names(&self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        match self {
            FeatureMap::Linear1D => s(&["x", "1"]),
            FeatureMap::PendulumIf => s(&["q1", "dq1", "u"]),
            FeatureMap::PendulumIfg => s(&["q1", "dq1", "u", "sin1"]),
            FeatureMap::CartpoleIf | FeatureMap::AcrobotIf => {
                s(&["q1", "q2", "dq1", "dq2", "u"])
            }
            FeatureMap::CartpoleIfg => s(&["q1", "q2", "dq1", "dq2", "u", "sin2"]),
            FeatureMap::AcrobotIfg => s(&["q1", "q2", "dq1", "dq2", "u", "sin1", "sin12"]),
            FeatureMap::ZeroFeatures { .. } => Vec::new(),
        }
    }
}

/// Evaluate the feature map on one model input `x = z (+) u`.
pub fn features(map: FeatureMap, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != map.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature map expects input of length {}, got {}",
            map.input_dim(),
            x.len()
        )));
    }
    let out = match map {
        FeatureMap::Linear1D => vec![x[0], 1.0],
        FeatureMap::PendulumIf => vec![x[0], x[1], x[2]],
        FeatureMap::PendulumIfg => vec![x[0], x[1], x[2], x[0].sin()],
        FeatureMap::CartpoleIf | FeatureMap::AcrobotIf => {
            vec![x[0], x[1], x[2], x[3], x[4]]
        }
        FeatureMap::CartpoleIfg => vec![x[0], x[1], x[2], x[3], x[4], x[1].sin()],
        FeatureMap::AcrobotIfg => vec![
            x[0],
            x[1],
            x[2],
            x[3],
            x[4],
            x[0].sin(),
            (x[0] + x[1]).sin(),
        ],
        FeatureMap::ZeroFeatures { .. } => Vec::new(),
    };
    Ok(DVector::from_vec(out))
}

/// Feature matrix: row `i` is `features(map, row i of x)`.
pub fn feature_matrix(map: FeatureMap, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = map.feature_dim();
    let mut out = DMatrix::zeros(x.nrows(), p);
    for i in 0..x.nrows() {
        let h = features(map, &x.row(i).transpose())?;
        out.row_mut(i).copy_from(&h.transpose());
    }
    Ok(out)
}

/// Gaussian prior over the feature weights of every output: entrywise
/// mean and standard deviation of an `output_dim x feature_dim` weight
/// matrix. Row covariances are diagonal by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

/// Prior slice for a single output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPriorRow {
    pub mean: DVector<f64>,
    pub std: DVector<f64>,
}

impl BetaPrior {
    pub fn new(mean: Vec<Vec<f64>>, std: Vec<Vec<f64>>) -> Result<Self> {
        if mean.len() != std.len()
            || mean
                .iter()
                .zip(&std)
                .any(|(m, s)| m.len() != s.len())
        {
            return Err(Error::DimensionMismatch(
                "prior mean and std must have identical shapes".into(),
            ));
        }
        if mean.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("prior mean must be finite".into()));
        }
        if std.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveVariance {
                value: std
                    .iter()
                    .flatten()
                    .copied()
                    .find(|&v| !(v > 0.0))
                    .unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mean, std })
    }

    /// Prior with no features (p = 0) for `outputs` outputs.
    pub fn empty(outputs: usize) -> Self {
        Self {
            mean: vec![Vec::new(); outputs],
            std: vec![Vec::new(); outputs],
        }
    }

    pub fn output_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.mean.first().map_or(0, |r| r.len())
    }

    /// Slice for output `index`. For a p = 0 prior any index yields the
    /// empty row, so the zero-feature path needs no special casing.
    pub fn row(&self, index: usize) -> BetaPriorRow {
        if self.feature_dim() == 0 {
            return BetaPriorRow {
                mean: DVector::zeros(0),
                std: DVector::zeros(0),
            };
        }
        BetaPriorRow {
            mean: DVector::from_vec(self.mean[index].clone()),
            std: DVector::from_vec(self.std[index].clone()),
        }
    }
}

/// Default weight prior for a feature map at discretization step `dt`.
///
/// Means follow the Euler-step matrices with unit inertia; unknown
/// gravity/actuation coefficients get mean 0 and a large standard
/// deviation so the model can learn them from data.
pub fn default_prior(map: FeatureMap, dt: f64) -> Result<BetaPrior> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt { value: dt });
    }
    let o = map.output_dim();
    let p = map.feature_dim();
    let mut mean = vec![vec![0.0; p]; o];
    let mut std = vec![vec![STRUCTURAL_STD; p]; o];
    match map {
        FeatureMap::Linear1D => {
            // unknown slope and intercept
            std = vec![vec![UNKNOWN_STD; p]; o];
        }
        FeatureMap::PendulumIf => {
            mean[0] = vec![1.0, dt, 0.0];
            mean[1] = vec![0.0, 1.0, dt];
        }
        FeatureMap::PendulumIfg => {
            mean[0] = vec![1.0, dt, 0.0, 0.0];
            mean[1] = vec![0.0, 1.0, dt, 0.0];
            std[1][3] = UNKNOWN_STD; // gravity factor
        }
        FeatureMap::CartpoleIf => {
            mean[0] = vec![1.0, 0.0, dt, 0.0, 0.0];
            mean[1] = vec![0.0, 1.0, 0.0, dt, 0.0];
            mean[2] = vec![0.0, 0.0, 1.0, 0.0, 0.0];
            mean[3] = vec![0.0, 0.0, 0.0, 1.0, 0.0];
            std[2][4] = UNKNOWN_STD; // force on the cart
        }
        FeatureMap::CartpoleIfg => {
            mean[0] = vec![1.0, 0.0, dt, 0.0, 0.0, 0.0];
            mean[1] = vec![0.0, 1.0, 0.0, dt, 0.0, 0.0];
            mean[2] = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
            mean[3] = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
            std[2][4] = UNKNOWN_STD; // force on the cart
            std[3][5] = UNKNOWN_STD; // gravity on the pole
        }
        FeatureMap::AcrobotIf => {
            mean[0] = vec![1.0, 0.0, dt, 0.0, 0.0];
            mean[1] = vec![0.0, 1.0, 0.0, dt, 0.0];
            mean[2] = vec![0.0, 0.0, 1.0, 0.0, 0.0];
            mean[3] = vec![0.0, 0.0, 0.0, 1.0, 0.0];
            std[3][4] = UNKNOWN_STD; // torque drives the second link
        }
        FeatureMap::AcrobotIfg => {
            mean[0] = vec![1.0, 0.0, dt, 0.0, 0.0, 0.0, 0.0];
            mean[1] = vec![0.0, 1.0, 0.0, dt, 0.0, 0.0, 0.0];
            mean[2] = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
            mean[3] = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
            std[3][4] = UNKNOWN_STD; // torque on link 2
            std[2][5] = UNKNOWN_STD; // gravity, first link angle
            std[2][6] = UNKNOWN_STD; // gravity, combined angle
            std[3][6] = UNKNOWN_STD;
        }
        FeatureMap::ZeroFeatures { .. } => {}
    }
    BetaPrior::new(mean, std)
}

/// Gravity-torque feature for a 3D link: the torque gravity applies
/// about the link frame's z-axis, `(u_x x (R^T g)) . u_z`, which
/// expands to the y-component of `R^T g`. `R` maps the link frame to
/// the world frame; `g` is the world-frame gravity vector. Signs follow
/// the literal cross-product expansion.
pub fn gravity_torque_feature(r: &Matrix3<f64>, g: &Vector3<f64>) -> Result<f64> {
    let gram = r.transpose() * r;
    let mut max_delta = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            max_delta = max_delta.max((gram[(i, j)] - target).abs());
        }
    }
    if max_delta > 1e-8 {
        return Err(Error::NotARotation { max_delta });
    }
    let w = r.transpose() * g;
    let u_x = Vector3::new(1.0, 0.0, 0.0);
    let u_z = Vector3::new(0.0, 0.0, 1.0);
    Ok(u_x.cross(&w).dot(&u_z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    const ALL_MAPS: [FeatureMap; 8] = [
        FeatureMap::Linear1D,
        FeatureMap::PendulumIf,
        FeatureMap::PendulumIfg,
        FeatureMap::CartpoleIf,
        FeatureMap::CartpoleIfg,
        FeatureMap::AcrobotIf,
        FeatureMap::AcrobotIfg,
        FeatureMap::ZeroFeatures { input_dim: 3 },
    ];

    #[test]
    fn pendulum_ifg_zero_state() {
        let h = features(FeatureMap::PendulumIfg, &DVector::zeros(3)).unwrap();
        assert_eq!(h, DVector::zeros(4));
    }

    #[test]
    fn pendulum_ifg_feature_column() {
        let x = DVector::from_vec(vec![FRAC_PI_2, 1.0, 2.0]);
        let h = features(FeatureMap::PendulumIfg, &x).unwrap();
        let expected = DVector::from_vec(vec![FRAC_PI_2, 1.0, 2.0, 1.0]);
        assert_relative_eq!(h, expected, epsilon = 1e-14);
    }

    #[test]
    fn acrobot_ifg_sine_terms() {
        let x = DVector::from_vec(vec![FRAC_PI_2, FRAC_PI_2, 0.0, 0.0, 0.0]);
        let h = features(FeatureMap::AcrobotIfg, &x).unwrap();
        assert_relative_eq!(h[5], 1.0, epsilon = 1e-14); // sin(pi/2)
        assert_relative_eq!(h[6], 0.0, epsilon = 1e-14); // sin(pi)
        assert_eq!(h.len(), 7);
    }

    #[test]
    fn cartpole_ifg_uses_pole_angle() {
        let x = DVector::from_vec(vec![0.3, FRAC_PI_2, 0.0, 0.0, 0.0]);
        let h = features(FeatureMap::CartpoleIfg, &x).unwrap();
        assert_relative_eq!(h[5], 1.0, epsilon = 1e-14);
    }

    /// Every map is linear or odd in the state at zero input: the
    /// feature vector at the zero vector is zero (except Linear1D's
    /// constant feature).
    #[test]
    fn zero_input_gives_zero_features() {
        for map in ALL_MAPS {
            let h = features(map, &DVector::zeros(map.input_dim())).unwrap();
            assert_eq!(h.len(), map.feature_dim());
            match map {
                FeatureMap::Linear1D => assert_eq!(h[1], 1.0),
                _ => assert!(h.iter().all(|&v| v == 0.0)),
            }
        }
    }

    #[test]
    fn pendulum_if_prior_mean() {
        let p = default_prior(FeatureMap::PendulumIf, 0.03).unwrap();
        assert_eq!(p.mean, vec![vec![1.0, 0.03, 0.0], vec![0.0, 1.0, 0.03]]);
        assert!(p
            .std
            .iter()
            .flatten()
            .all(|&s| (s - STRUCTURAL_STD).abs() < 1e-15));
    }

    #[test]
    fn pendulum_ifg_prior_marks_gravity_unknown() {
        let p = default_prior(FeatureMap::PendulumIfg, 0.03).unwrap();
        assert_eq!(p.mean[1], vec![0.0, 1.0, 0.03, 0.0]);
        assert_eq!(p.std[1][3], UNKNOWN_STD);
        assert_eq!(p.std[0][3], STRUCTURAL_STD);
    }

    #[test]
    fn cartpole_if_prior_matrix() {
        let p = default_prior(FeatureMap::CartpoleIf, 0.03).unwrap();
        assert_eq!(
            p.mean,
            vec![
                vec![1.0, 0.0, 0.03, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.03, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0],
            ]
        );
        assert_eq!(p.std[2][4], UNKNOWN_STD);
        assert_eq!(p.std[3][4], STRUCTURAL_STD);
    }

    #[test]
    fn prior_rejects_nonpositive_dt() {
        assert!(matches!(
            default_prior(FeatureMap::PendulumIf, 0.0),
            Err(Error::NonPositiveDt { .. })
        ));
    }

    /// Euler-step identity: the prior mean maps h([q, dq, u]) to
    /// [q + dt*dq, dq + dt*u] exactly (unit inertia).
    #[test]
    fn pendulum_if_prior_reproduces_euler_step() {
        let dt = 0.03;
        let prior = default_prior(FeatureMap::PendulumIf, dt).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
            let h = features(FeatureMap::PendulumIf, &x).unwrap();
            for out in 0..2 {
                let row = prior.row(out);
                let pred = row.mean.dot(&h);
                let expected = if out == 0 {
                    x[0] + dt * x[1]
                } else {
                    x[1] + dt * x[2]
                };
                assert_relative_eq!(pred, expected, epsilon = 1e-14);
            }
        }
    }

    fn rot_x(a: f64) -> Matrix3<f64> {
        Matrix3::new(
            1.0,
            0.0,
            0.0,
            0.0,
            a.cos(),
            -a.sin(),
            0.0,
            a.sin(),
            a.cos(),
        )
    }

    fn rot_z(a: f64) -> Matrix3<f64> {
        Matrix3::new(
            a.cos(),
            -a.sin(),
            0.0,
            a.sin(),
            a.cos(),
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Independent brute-force oracle: componentwise cross product.
    fn torque_oracle(r: &Matrix3<f64>, g: &Vector3<f64>) -> f64 {
        let w = r.transpose() * g;
        let (ax, ay, az) = (1.0, 0.0, 0.0);
        let cross = [
            ay * w[2] - az * w[1],
            az * w[0] - ax * w[2],
            ax * w[1] - ay * w[0],
        ];
        cross[2]
    }

    #[test]
    fn gravity_feature_zero_when_aligned_with_link_axis() {
        // gravity along the frame z-axis exerts no torque about it
        let v = gravity_torque_feature(&Matrix3::identity(), &Vector3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gravity_feature_matches_cross_product_oracle() {
        let r = Matrix3::identity();
        let g = Vector3::new(0.0, -1.0, 0.0);
        let v = gravity_torque_feature(&r, &g).unwrap();
        assert_relative_eq!(v, torque_oracle(&r, &g), epsilon = 1e-14);
        assert_relative_eq!(v, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn gravity_feature_flips_under_half_turn() {
        let g = Vector3::new(0.0, -1.0, 0.0);
        let base = gravity_torque_feature(&Matrix3::identity(), &g).unwrap();
        let flipped = gravity_torque_feature(&rot_x(PI), &g).unwrap();
        assert_relative_eq!(flipped, -base, epsilon = 1e-12);
    }

    #[test]
    fn gravity_feature_rejects_non_rotation() {
        let m = Matrix3::identity() * 2.0;
        assert!(matches!(
            gravity_torque_feature(&m, &Vector3::new(0.0, -1.0, 0.0)),
            Err(Error::NotARotation { .. })
        ));
    }

    /// World-frame consistency: rotating both the link frame and the
    /// gravity vector by the same world rotation leaves the torque
    /// unchanged.
    #[test]
    fn gravity_feature_world_frame_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let r = rot_z(rng.random_range(-PI..PI))
                * rot_x(rng.random_range(-PI..PI))
                * rot_z(rng.random_range(-PI..PI));
            let q = rot_x(rng.random_range(-PI..PI)) * rot_z(rng.random_range(-PI..PI));
            let g = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let base = gravity_torque_feature(&r, &g).unwrap();
            let moved = gravity_torque_feature(&(q * r), &(q * g)).unwrap();
            assert_relative_eq!(moved, base, epsilon = 1e-9);
            assert_relative_eq!(base, torque_oracle(&r, &g), epsilon = 1e-12);
        }
    }

    #[test]
    fn feature_matrix_rows_match_pointwise() {
        let x = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, -1.0, 0.5, 2.0]);
        let h = feature_matrix(FeatureMap::PendulumIfg, &x).unwrap();
        assert_eq!(h.shape(), (2, 4));
        assert_relative_eq!(h[(1, 3)], (-1.0f64).sin(), epsilon = 1e-14);
    }

    #[test]
    fn empty_prior_rows() {
        let p = BetaPrior::empty(3);
        assert_eq!(p.feature_dim(), 0);
        let r = p.row(2);
        assert_eq!(r.mean.len(), 0);
    }
}
