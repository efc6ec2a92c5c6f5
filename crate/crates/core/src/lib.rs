//! Simulation and certification toolkit for the damped focusing Duffing
//! oscillator `ü + γu̇ + u = u³` and the damped cubic Klein–Gordon equation
//! `∂ₜ²u − Δu + γ∂ₜu + u = u³` on flat tori.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the scalar.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basin;
pub mod critical;
pub mod error;
pub mod fate;
pub mod kg;
pub mod ode;
pub mod phase;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type State64 = phase::State<f64>;
pub type State32 = phase::State<f32>;
pub type Damping64 = phase::Damping<f64>;
pub type Trajectory64 = ode::Trajectory<f64>;
pub type IntegratorOptions64 = ode::IntegratorOptions<f64>;
pub type Fate64 = fate::Fate<f64>;
pub type Bracket64 = critical::Bracket<f64>;
pub type TorusGrid64 = kg::TorusGrid<f64>;
pub type Field64 = kg::Field<f64>;
pub type KgState64 = kg::KgState<f64>;
