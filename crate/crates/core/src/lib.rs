//! Lyapunov exponents of weakly damped, stochastically forced Euler-like systems.
//!
//! The crate covers the Euler-like class `dx = B(x,x) dt + εAx dt + √ε Σ X_k dW^k`
//! (bilinear, divergence-free, energy-conserving `B`; negative-definite `A`;
//! constant forcing), with stochastic Lorenz-96 as the flagship model:
//!
//! * [`algebra`]: exact polynomial vector fields, Jacobians and Lie brackets;
//! * [`models`]: system constructors and the lifted projective drift;
//! * [`sde`]: reproducible integration of the state, tangent and projective flows;
//! * [`estimators`]: Lyapunov exponents, the Fisher-information identity and diagnostics;
//! * [`hormander`]: spanning certificates by bracket generation and matrix Lie closure;
//! * [`verify`]: executable checks of the exact structural identities of the class.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`, which is what the command-line tool uses.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod hormander;
pub mod model_file;
pub mod models;
pub mod report;
pub mod scalar;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PolyField = algebra::PolyVectorField<f64>;
pub type Tensor = algebra::BilinearTensor<f64>;
pub type Matrix = algebra::DenseMatrix<f64>;
pub type System = models::EulerLikeSystem<f64>;
pub type State = models::ProjectiveState<f64>;
pub type Config = sde::IntegratorConfig<f64>;
pub type Estimate = estimators::ExponentEstimate;
pub type LieBasis = hormander::MatrixLieBasis<f64>;
