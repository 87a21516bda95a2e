//! Euler-Lagrange and Hamilton dynamics on the homogeneous model, and their
//! numerical integration.

mod hamilton;
mod integrate;
mod lagrange;

pub use hamilton::{hamilton_rhs, HamiltonMode, HamiltonianSpec};
pub use integrate::{
    conserved_quantity_drift, integrate, Diagnostics, Flow, HamiltonFlow, IntegratorConfig, LagrangeFlow, Method,
    Sample, Trajectory,
};
pub use lagrange::{
    el_residual, el_rhs, energy_differential, energy_function, kahler_form_lagrangian, kahler_identity_residual,
    lagrangian_standard, liouville_vector_field, vertical_differential, ElResidual, IdentityResidual,
    LagrangianSpec, SemisprayState, StandardForm, DEGENERACY_THRESHOLD,
};

pub(crate) use integrate::csv_error;
