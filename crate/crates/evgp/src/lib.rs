//! EVGP: sparse variational Gaussian process regression with explicit
//! physics-derived prior mean functions.
//!
//! The model is `y = h(x)^T beta + f(x) + eps` where `h` is a fixed
//! feature map with a Gaussian prior over `beta`, `f` is a zero-mean GP
//! summarized by `m` inducing points, and the posterior over both is a
//! factorized Gaussian fit by minimizing the negative evidence lower
//! bound with minibatch ADAM. The crate also ships rigid-body dynamics
//! simulators (pendulum, cartpole, acrobot) to generate one-step
//! regression data, an exact (non-sparse) GP/EGP oracle for
//! verification, evaluation metrics, and a benchmark harness.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod features;
pub mod gaussian;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod storage;
pub mod trainer;

pub use error::{Error, Result};
