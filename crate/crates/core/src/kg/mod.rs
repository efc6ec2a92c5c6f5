//! Damped cubic Klein–Gordon equation on flat tori: pseudospectral fields,
//! Nehari-manifold functionals, ground states and fate experiments.

mod experiment;
mod field;
mod grid;
mod ground;
mod integrate;
pub mod snapshot;

pub use experiment::{
    continuity_probe, kg_fate, kg_fate_experiment, random_perturbation, KgCertificate, KgExperiment, KgFate,
    KgFateOptions,
};
pub use field::{k_functional, kg_energy, kg_static_energy, nehari_project, nehari_quotient, Field, KgState};
pub use grid::TorusGrid;
pub use ground::{ground_state_search, symmetry_breaking_witness, GroundOptions, GroundState, SymmetryWitness};
pub use integrate::{kg_integrate, kg_integrate_with, KgOptions, KgSample, KgTermination, KgTrajectory};
