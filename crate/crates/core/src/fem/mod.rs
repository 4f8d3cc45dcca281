//! P1 finite elements for `div(ℂ∇̂u) = 0`, the discrete local DN map and
//! its `‖·‖⋆` norm, Alessandrini's identity, Green functions and sensitivity
//! kernels.

mod dn;
pub mod element;
mod gram;
mod green;
pub mod io;
pub mod sparse;
mod system;

pub use dn::{alessandrini_residual, alessandrini_with, dn_bilinear, AlessandriniResidual, DnMatrix};
pub use gram::{dn_operator_norm, expand3, spectral_norm, SigmaGram, GRAM_KIND};
pub(crate) use gram::sym_power;
pub use green::{
    exterior_singular_solution, exterior_trace, green_function, sensitivity_kernel,
    sensitivity_kernel_with, GreenFunction, SourcePlacement, EXTENSION_LAME,
};
pub use system::{DofClass, FemSystem, Operators, SolverKind};
