//! Rigid-body dynamics simulators (pendulum, cartpole, acrobot) and
//! the trajectory-sampling protocol that turns them into one-step
//! regression datasets: random initial states `z0 ~ alpha * U(-1,1)`,
//! random controls `u_t ~ eta * N(0,1)` resampled every step, RK4
//! integration at fixed dt.
//!
//! Angles are measured from the downward (hanging) position, so
//! gravity torques are proportional to the sine of the angle and
//! vanish straight down/up.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemId {
    Pendulum,
    Cartpole,
    Acrobot,
}

impl std::fmt::Display for SystemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SystemId::Pendulum => "pendulum",
            SystemId::Cartpole => "cartpole",
            SystemId::Acrobot => "acrobot",
        };
        f.write_str(s)
    }
}

/// Point-mass pendulum: `J qdd = u - m g l sin(q) - b qd`, `J = m l^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub damping: f64,
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 0.5,
            damping: 0.1,
            gravity: 9.81,
        }
    }
}

impl PendulumParams {
    pub fn inertia(&self) -> f64 {
        self.mass * self.length * self.length
    }

    /// Total mechanical energy `0.5 J qd^2 - m g l cos(q)`.
    pub fn energy(&self, z: &DVector<f64>) -> f64 {
        0.5 * self.inertia() * z[1] * z[1]
            - self.mass * self.gravity * self.length * z[0].cos()
    }
}

/// Cart with a hanging pole; the control is a horizontal force on the
/// cart. State `[x, theta, xd, thetad]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartpoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Distance from the pivot to the pole's center of mass.
    pub pole_com: f64,
    /// Pole inertia about its center of mass.
    pub pole_inertia: f64,
    pub cart_damping: f64,
    pub pole_damping: f64,
    pub gravity: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        // uniform rod of length 0.5
        Self {
            cart_mass: 1.0,
            pole_mass: 0.3,
            pole_com: 0.25,
            pole_inertia: 0.3 * 0.5 * 0.5 / 12.0,
            cart_damping: 0.1,
            pole_damping: 0.01,
            gravity: 9.81,
        }
    }
}

/// Two-link underactuated pendulum; the control torques the elbow.
/// State `[q1, q2, qd1, qd2]` with `q2` relative to the first link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcrobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    pub damping1: f64,
    pub damping2: f64,
    pub gravity: f64,
}

impl Default for AcrobotParams {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            lc1: 0.5,
            lc2: 0.5,
            i1: 1.0 / 12.0,
            i2: 1.0 / 12.0,
            damping1: 0.1,
            damping2: 0.1,
            gravity: 9.81,
        }
    }
}

/// A simulated system with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSpec {
    Pendulum(PendulumParams),
    Cartpole(CartpoleParams),
    Acrobot(AcrobotParams),
}

impl SystemSpec {
    pub fn default_for(id: SystemId) -> Self {
        match id {
            SystemId::Pendulum => SystemSpec::Pendulum(PendulumParams::default()),
            SystemId::Cartpole => SystemSpec::Cartpole(CartpoleParams::default()),
            SystemId::Acrobot => SystemSpec::Acrobot(AcrobotParams::default()),
        }
    }

    pub fn id(&self) -> SystemId {
        match self {
            SystemSpec::Pendulum(_) => SystemId::Pendulum,
            SystemSpec::Cartpole(_) => SystemId::Cartpole,
            SystemSpec::Acrobot(_) => SystemId::Acrobot,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            SystemSpec::Pendulum(_) => 2,
            SystemSpec::Cartpole(_) | SystemSpec::Acrobot(_) => 4,
        }
    }

    pub fn control_dim(&self) -> usize {
        1
    }

    /// Time derivative of the state under control `u`.
    pub fn derivative(&self, z: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match self {
            SystemSpec::Pendulum(p) => {
                let (q, qd) = (z[0], z[1]);
                let qdd = (u[0]
                    - p.mass * p.gravity * p.length * q.sin()
                    - p.damping * qd)
                    / p.inertia();
                DVector::from_vec(vec![qd, qdd])
            }
            SystemSpec::Cartpole(p) => {
                let (theta, xd, thetad) = (z[1], z[2], z[3]);
                let (st, ct) = theta.sin_cos();
                let m_total = p.cart_mass + p.pole_mass;
                let coupling = p.pole_mass * p.pole_com * ct;
                let pole_in = p.pole_mass * p.pole_com * p.pole_com + p.pole_inertia;
                let rhs_x = u[0] + p.pole_mass * p.pole_com * thetad * thetad * st
                    - p.cart_damping * xd;
                let rhs_t =
                    -p.pole_mass * p.gravity * p.pole_com * st - p.pole_damping * thetad;
                let det = m_total * pole_in - coupling * coupling;
                let xdd = (pole_in * rhs_x - coupling * rhs_t) / det;
                let thetadd = (m_total * rhs_t - coupling * rhs_x) / det;
                DVector::from_vec(vec![xd, thetad, xdd, thetadd])
            }
            SystemSpec::Acrobot(p) => {
                let (q1, q2, qd1, qd2) = (z[0], z[1], z[2], z[3]);
                let c2 = q2.cos();
                let m11 = p.m1 * p.lc1 * p.lc1
                    + p.i1
                    + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2)
                    + p.i2;
                let m12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
                let m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
                let h = p.m2 * p.l1 * p.lc2 * q2.sin();
                let c1 = -h * (2.0 * qd1 * qd2 + qd2 * qd2);
                let c2v = h * qd1 * qd1;
                let g1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * q1.sin()
                    + p.m2 * p.lc2 * p.gravity * (q1 + q2).sin();
                let g2 = p.m2 * p.lc2 * p.gravity * (q1 + q2).sin();
                let rhs1 = -p.damping1 * qd1 - c1 - g1;
                let rhs2 = u[0] - p.damping2 * qd2 - c2v - g2;
                let det = m11 * m22 - m12 * m12;
                let qdd1 = (m22 * rhs1 - m12 * rhs2) / det;
                let qdd2 = (m11 * rhs2 - m12 * rhs1) / det;
                DVector::from_vec(vec![qd1, qd2, qdd1, qdd2])
            }
        }
    }

    fn check_shapes(&self, z: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if z.len() != self.state_dim() || u.len() != self.control_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} expects state {} and control {}, got {} and {}",
                self.id(),
                self.state_dim(),
                self.control_dim(),
                z.len(),
                u.len()
            )));
        }
        Ok(())
    }
}

/// One RK4 step of length `dt` with the control held constant.
pub fn step_dynamics(
    spec: &SystemSpec,
    z: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>> {
    spec.check_shapes(z, u)?;
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt { value: dt });
    }
    if z.iter().chain(u.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let k1 = spec.derivative(z, u);
    let k2 = spec.derivative(&(z + &k1 * (dt / 2.0)), u);
    let k3 = spec.derivative(&(z + &k2 * (dt / 2.0)), u);
    let k4 = spec.derivative(&(z + &k3 * dt), u);
    let next = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(next)
}

/// Integrate over `steps` RK4 sub-steps (reference integrations).
pub fn integrate(
    spec: &SystemSpec,
    z: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
    steps: usize,
) -> Result<DVector<f64>> {
    let mut state = z.clone();
    for _ in 0..steps {
        state = step_dynamics(spec, &state, u, dt)?;
    }
    Ok(state)
}

/// Trajectory-sampling protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Per-component initial-state scale, `[positions..., velocities...]`.
    pub alpha: Vec<f64>,
    /// Control scale.
    pub eta: f64,
    /// Number of trajectories (`H`).
    pub trajectories: usize,
    /// Integration steps per trajectory; each contributes one
    /// regression pair, so samples = `trajectories * steps_per_traj`.
    pub steps_per_traj: usize,
    pub dt: f64,
}

pub const DEFAULT_DT: f64 = 0.03;
pub const DEFAULT_STEPS_PER_TRAJ: usize = 100;

impl SamplingSpec {
    /// The data-collection protocol rows for each system
    /// (pendulum 48x100 = 4800 samples, cartpole 4800, acrobot 9300).
    pub fn table1(id: SystemId) -> Self {
        let pi = std::f64::consts::PI;
        let (alpha, eta, trajectories) = match id {
            SystemId::Pendulum => (vec![pi, 0.5], 1.0, 48),
            SystemId::Cartpole => (vec![1.0, pi, 0.5, 0.5], 100.0, 48),
            SystemId::Acrobot => (vec![pi, 1.0, 0.5, 0.5], 0.5, 93),
        };
        Self {
            alpha,
            eta,
            trajectories,
            steps_per_traj: DEFAULT_STEPS_PER_TRAJ,
            dt: DEFAULT_DT,
        }
    }

    fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if self.alpha.len() != spec.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "alpha has {} entries, state dim is {}",
                self.alpha.len(),
                spec.state_dim()
            )));
        }
        if self.trajectories == 0 || self.steps_per_traj == 0 {
            return Err(Error::InvalidConfig(
                "trajectories and steps_per_traj must be >= 1".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::NonPositiveDt { value: self.dt });
        }
        Ok(())
    }
}

/// Simulated rollouts: per trajectory, `steps + 1` states and `steps`
/// controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub system: SystemId,
    pub states: Vec<DMatrix<f64>>,
    pub controls: Vec<DMatrix<f64>>,
    pub dt: f64,
    pub seed: u64,
}

impl TrajectoryBatch {
    /// Total number of one-step regression pairs.
    pub fn num_pairs(&self) -> usize {
        self.states.iter().map(|s| s.nrows() - 1).sum()
    }
}

fn trajectory_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    // independent per-trajectory streams derived from the master seed
    let mixed = master_seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Sample `H` trajectories under the protocol in `sampling`.
pub fn sample_dataset(
    spec: &SystemSpec,
    sampling: &SamplingSpec,
    seed: u64,
) -> Result<TrajectoryBatch> {
    sampling.validate(spec)?;
    let sd = spec.state_dim();
    let cd = spec.control_dim();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut states = Vec::with_capacity(sampling.trajectories);
    let mut controls = Vec::with_capacity(sampling.trajectories);
    for t in 0..sampling.trajectories {
        let mut rng = trajectory_rng(seed, t);
        let mut z = DVector::from_fn(sd, |i, _| sampling.alpha[i] * rng.random_range(-1.0..1.0));
        let mut traj_states = DMatrix::zeros(sampling.steps_per_traj + 1, sd);
        let mut traj_controls = DMatrix::zeros(sampling.steps_per_traj, cd);
        traj_states.row_mut(0).copy_from(&z.transpose());
        for step in 0..sampling.steps_per_traj {
            let u = DVector::from_fn(cd, |_, _| sampling.eta * normal.sample(&mut rng));
            z = step_dynamics(spec, &z, &u, sampling.dt)?;
            traj_controls.row_mut(step).copy_from(&u.transpose());
            traj_states.row_mut(step + 1).copy_from(&z.transpose());
        }
        states.push(traj_states);
        controls.push(traj_controls);
    }
    Ok(TrajectoryBatch {
        system: spec.id(),
        states,
        controls,
        dt: sampling.dt,
        seed,
    })
}

/// Column names for a system's regression dataset.
pub fn column_names(system: SystemId) -> (Vec<String>, Vec<String>) {
    let positions = match system {
        SystemId::Pendulum => 1,
        SystemId::Cartpole | SystemId::Acrobot => 2,
    };
    let mut state_names = Vec::new();
    for i in 0..positions {
        state_names.push(format!("q{}", i + 1));
    }
    for i in 0..positions {
        state_names.push(format!("dq{}", i + 1));
    }
    let mut inputs = state_names.clone();
    inputs.push("u1".into());
    let targets = state_names.iter().map(|n| format!("y_{n}")).collect();
    (inputs, targets)
}

/// Convert rollouts to one-step regression pairs: inputs
/// `z_t (+) u_t`, targets `z_{t+1}` plus seeded observation noise.
/// Pairs never cross trajectory boundaries.
pub fn to_regression(batch: &TrajectoryBatch, obs_noise_std: &[f64]) -> Result<Dataset> {
    let sd = batch.states.first().map_or(0, |s| s.ncols());
    let cd = batch.controls.first().map_or(0, |c| c.ncols());
    if obs_noise_std.len() != sd {
        return Err(Error::DimensionMismatch(format!(
            "noise std has {} entries, state dim is {sd}",
            obs_noise_std.len()
        )));
    }
    if obs_noise_std.iter().any(|&s| s < 0.0) {
        return Err(Error::NonPositiveVariance {
            value: *obs_noise_std
                .iter()
                .find(|&&s| s < 0.0)
                .expect("checked above"),
        });
    }
    let n = batch.num_pairs();
    let mut inputs = DMatrix::zeros(n, sd + cd);
    let mut targets = DMatrix::zeros(n, sd);
    let mut rng = ChaCha8Rng::seed_from_u64(batch.seed ^ 0x6f62_735f_6e6f_6973);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut row = 0;
    for (states, controls) in batch.states.iter().zip(&batch.controls) {
        for t in 0..states.nrows() - 1 {
            for j in 0..sd {
                inputs[(row, j)] = states[(t, j)];
            }
            for j in 0..cd {
                inputs[(row, sd + j)] = controls[(t, j)];
            }
            for j in 0..sd {
                let noise = if obs_noise_std[j] > 0.0 {
                    obs_noise_std[j] * normal.sample(&mut rng)
                } else {
                    0.0
                };
                targets[(row, j)] = states[(t + 1, j)] + noise;
            }
            row += 1;
        }
    }
    let (input_names, target_names) = column_names(batch.system);
    Dataset::new(inputs, targets, input_names, target_names)
}

/// Sidecar metadata stored next to each dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub system: SystemSpec,
    pub sampling: SamplingSpec,
    pub seed: u64,
    pub obs_noise_std: Vec<f64>,
}

impl DatasetMeta {
    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pendulum() -> SystemSpec {
        SystemSpec::default_for(SystemId::Pendulum)
    }

    #[test]
    fn pendulum_hangs_at_the_stable_equilibrium() {
        let z = DVector::zeros(2);
        let u = DVector::zeros(1);
        let next = step_dynamics(&pendulum(), &z, &u, 0.03).unwrap();
        assert_relative_eq!(next, z, epsilon = 1e-15);
    }

    #[test]
    fn free_rotation_without_gravity_is_uniform() {
        let spec = SystemSpec::Pendulum(PendulumParams {
            gravity: 0.0,
            damping: 0.0,
            ..PendulumParams::default()
        });
        let z = DVector::from_vec(vec![0.0, 1.0]);
        let u = DVector::zeros(1);
        let end = integrate(&spec, &z, &u, 1e-3, 1000).unwrap();
        assert_relative_eq!(end[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(end[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn undamped_pendulum_conserves_energy() {
        let params = PendulumParams {
            damping: 0.0,
            ..PendulumParams::default()
        };
        let spec = SystemSpec::Pendulum(params);
        let mut z = DVector::from_vec(vec![2.4, 0.3]);
        let u = DVector::zeros(1);
        let e0 = params.energy(&z);
        for _ in 0..1000 {
            z = step_dynamics(&spec, &z, &u, 1e-3).unwrap();
        }
        assert!((params.energy(&z) - e0).abs() < 1e-6);
    }

    #[test]
    fn rk4_halving_dt_cuts_error_by_a_fourth_order_factor() {
        let spec = pendulum();
        let z = DVector::from_vec(vec![2.0, 0.5]);
        let u = DVector::from_vec(vec![0.3]);
        let dt = 0.08;
        let reference = integrate(&spec, &z, &u, dt / 100.0, 200).unwrap();
        let coarse = integrate(&spec, &z, &u, dt, 2).unwrap();
        let fine = integrate(&spec, &z, &u, dt / 2.0, 4).unwrap();
        let e_coarse = (coarse - &reference).norm();
        let e_fine = (fine - &reference).norm();
        let factor = e_coarse / e_fine;
        assert!(
            (8.0..=32.0).contains(&factor),
            "error reduction factor {factor} (coarse {e_coarse:.3e}, fine {e_fine:.3e})"
        );
    }

    #[test]
    fn cartpole_and_acrobot_rest_at_the_hanging_equilibrium() {
        for id in [SystemId::Cartpole, SystemId::Acrobot] {
            let spec = SystemSpec::default_for(id);
            let z = DVector::zeros(4);
            let u = DVector::zeros(1);
            let next = step_dynamics(&spec, &z, &u, 0.03).unwrap();
            assert_relative_eq!(next, z, epsilon = 1e-14);
        }
    }

    #[test]
    fn acrobot_gravity_pulls_links_downward() {
        let spec = SystemSpec::default_for(SystemId::Acrobot);
        // displaced first link accelerates back toward hanging
        let z = DVector::from_vec(vec![0.4, 0.0, 0.0, 0.0]);
        let dz = spec.derivative(&z, &DVector::zeros(1));
        assert!(dz[2] < 0.0, "qdd1 = {}", dz[2]);
    }

    #[test]
    fn table1_pendulum_sample_counts() {
        let spec = pendulum();
        let sampling = SamplingSpec::table1(SystemId::Pendulum);
        let batch = sample_dataset(&spec, &sampling, 7).unwrap();
        assert_eq!(batch.num_pairs(), 4800);
        let data = to_regression(&batch, &[0.01, 0.01]).unwrap();
        assert_eq!(data.len(), 4800);
        assert_eq!(data.input_dim(), 3);
        assert_eq!(data.output_dim(), 2);
    }

    #[test]
    fn table1_acrobot_sample_counts() {
        let spec = SystemSpec::default_for(SystemId::Acrobot);
        let sampling = SamplingSpec::table1(SystemId::Acrobot);
        assert_eq!(sampling.alpha, vec![PI, 1.0, 0.5, 0.5]);
        let batch = sample_dataset(&spec, &sampling, 7).unwrap();
        assert_eq!(batch.num_pairs(), 9300);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = pendulum();
        let sampling = SamplingSpec {
            trajectories: 3,
            steps_per_traj: 10,
            ..SamplingSpec::table1(SystemId::Pendulum)
        };
        let a = sample_dataset(&spec, &sampling, 42).unwrap();
        let b = sample_dataset(&spec, &sampling, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&spec, &sampling, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn initial_states_respect_alpha_bounds() {
        let spec = pendulum();
        let sampling = SamplingSpec {
            trajectories: 50,
            steps_per_traj: 1,
            ..SamplingSpec::table1(SystemId::Pendulum)
        };
        let batch = sample_dataset(&spec, &sampling, 3).unwrap();
        for traj in &batch.states {
            assert!(traj[(0, 0)].abs() <= PI);
            assert!(traj[(0, 1)].abs() <= 0.5);
        }
    }

    #[test]
    fn pair_counting_and_noiseless_targets() {
        // hand-built batch: one trajectory of 3 states -> 2 rows
        let states = DMatrix::from_row_slice(3, 2, &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        let controls = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let batch = TrajectoryBatch {
            system: SystemId::Pendulum,
            states: vec![states],
            controls: vec![controls],
            dt: 0.03,
            seed: 0,
        };
        let data = to_regression(&batch, &[0.0, 0.0]).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.inputs().row(0).transpose().as_slice(), &[0.0, 0.1, 1.0]);
        assert_eq!(data.targets().row(0).transpose().as_slice(), &[0.2, 0.3]);
        assert_eq!(data.targets().row(1).transpose().as_slice(), &[0.4, 0.5]);
    }

    #[test]
    fn regression_rows_never_cross_trajectories() {
        let spec = pendulum();
        let sampling = SamplingSpec {
            trajectories: 4,
            steps_per_traj: 25,
            ..SamplingSpec::table1(SystemId::Pendulum)
        };
        let batch = sample_dataset(&spec, &sampling, 11).unwrap();
        let expected: usize = batch.states.iter().map(|s| s.nrows() - 1).sum();
        let data = to_regression(&batch, &[0.0, 0.0]).unwrap();
        assert_eq!(data.len(), expected);
        // with zero noise, each target equals the stored next state
        let mut row = 0;
        for states in &batch.states {
            for t in 0..states.nrows() - 1 {
                assert_eq!(data.targets()[(row, 0)], states[(t + 1, 0)]);
                row += 1;
            }
        }
    }

    #[test]
    fn meta_round_trips_through_json() {
        let meta = DatasetMeta {
            system: pendulum(),
            sampling: SamplingSpec::table1(SystemId::Pendulum),
            seed: 5,
            obs_noise_std: vec![0.01, 0.01],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.json");
        meta.save(&path).unwrap();
        assert_eq!(DatasetMeta::load(&path).unwrap(), meta);
    }
}
