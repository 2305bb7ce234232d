//! Simulation and analysis of the HANDY population model with an Elite class.

pub mod equilibrium;
pub mod harness;
pub mod hypotheses;
pub mod integrator;
pub mod model;

pub use model::{
    Model, ModelError, ParameterSchedule, ParameterSet, State4, TimeFunction, Variant,
};
