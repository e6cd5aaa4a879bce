//! Time integration of the state, the variational flow and the projective process.

pub mod integrator;
pub mod noise;
pub mod system;

pub use integrator::{
    integrate, step_projective, step_state, step_tangent, IntegrationOutcome, IntegratorConfig, LogNormAccumulator,
    Observer, Propagation, SampleRecorder, Scheme, StepView, TangentFrame, TimeAverage, Trajectory,
};
pub use noise::{gauss_increments, NoiseStream};
pub use system::SdeSystem;
