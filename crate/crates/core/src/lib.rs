//! Optimal refraction dividend strategies for spectrally negative Lévy
//! surplus processes with exponential Parisian ruin.

pub mod error;
pub mod expsum;
pub mod levy_model;
pub mod numerics;
pub mod parisian_control;
pub mod scale_functions;
pub mod simulator;
pub mod verification;

pub use error::{Error, Result};
