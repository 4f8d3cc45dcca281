//! The forward map `L ↦ Λ`, its derivative, the `q0` and Lipschitz probes
//! and Gauss-Newton reconstruction.

mod checks;
mod forward;
mod probe;
mod q0;
mod reconstruct;
mod report;

pub use checks::{fd_derivative_errors, remainder_profile, RemainderProfile};
pub use forward::{forward, frechet_derivative, ForwardContext, Jacobian};
pub use probe::{derivative_lipschitz_probe, lipschitz_probe, random_pairs, LipschitzReport, PairRatio};
pub use q0::{q0_estimate, Q0Report, Q0Sample};
pub use reconstruct::{operator_noise, reconstruct, GaussNewtonOptions, Iterate, Reconstruction, StopReason};
pub use report::{InverseReport, MeshSummary};
