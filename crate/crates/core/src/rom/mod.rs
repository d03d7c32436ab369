//! Galerkin reduced-order model: operators, stabilization, time integration
//! and error measures.

mod errors;
mod integrate;
mod operators;
mod supremizer;

pub use errors::{
    field_error, project, projection_error, rom_errors, times_match, ErrorInput, ErrorSeries,
};
pub use integrate::{
    integrate_ppe, integrate_supremizer, ConvectionTreatment, Forcing, IntegratorSettings,
    Stabilization, Trajectory,
};
pub use operators::{assemble_operators, ExtendedBasis, ReducedOperators};
pub use supremizer::{compute_supremizers, enrich, supremizer, SupremizerVariant};
