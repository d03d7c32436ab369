//! Reduced-order modelling of incompressible channel flow with lumped
//! (Windkessel) outflow conditions.

pub mod error;
pub mod fom;
pub mod lifting;
pub mod linalg;
pub mod mesh_fields;
pub mod nn;
pub mod pipeline;
pub mod pod;
pub mod rom;
pub mod scalar;
pub mod spaces;
pub mod windkessel;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic types.
pub type Mesh = mesh_fields::StructuredMesh<f64>;
pub type ScalarField = mesh_fields::ScalarField<f64>;
pub type VectorField = mesh_fields::VectorField<f64>;
pub type FomConfig = fom::FomConfig<f64>;
pub type FomSolver = fom::FomSolver<f64>;
pub type SnapshotDatabase = fom::SnapshotDatabase<f64>;
pub type WindkesselParams = windkessel::WindkesselParams<f64>;
pub type LiftingSet = lifting::LiftingSet<f64>;
pub type ReducedOperators = rom::ReducedOperators<f64>;
pub type ErrorSeries = rom::ErrorSeries<f64>;
pub type Network = nn::Network<f64>;
pub type OutflowModel = nn::OutflowModel<f64>;
