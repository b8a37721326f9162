//! Taylor–Hood (quadratic velocity, linear pressure) discretization of the
//! Stokes operator on tagged triangle meshes.

mod assembly;
pub mod quadrature;
mod space;

pub use assembly::{
    assemble_body_force, assemble_operators, l2_norms, pressure_distance_sq, velocity_distance_sq,
    AssembledOperators,
};
pub use space::{build_space, StokesSpace};
