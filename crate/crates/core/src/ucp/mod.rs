//! Numerical checks of the constant-coefficient unique continuation
//! estimates: three-sphere fitting, Caccioppoli ratios, smallness
//! propagation in a cone and along a chain of layers.

mod chain;
mod cone;
mod ensemble;
mod spheres;

pub use chain::{interface_chain_experiment, ChainProbeConfig, ChainReport, InterfaceCrossing};
pub use cone::{chain_ball_profile, cone_csv, cone_propagation_experiment, ConeMemberReport, ConeReport};
pub use ensemble::{navier_residual, Member, SolutionEnsemble};
pub use spheres::{
    ball_grad_l2, ball_l2, ball_l2_order, caccioppoli_check, caccioppoli_ratio, fit_three_sphere,
    three_sphere_csv, three_sphere_fit, three_sphere_integrals, CaccioppoliReport, ThreeSphereFit,
    BALL_ORDER,
};
