//! Arnol'd tongues of a kicked torus map: periodic orbits and their stability,
//! island areas from a pendulum approximation, Gauss-sum phases, exact Farey
//! approximants and the accelerator modes an experimental path should meet.

// NaN must fail the range checks, so negated comparisons are intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod farey;
pub mod gauss;
pub mod islands;
pub mod map;
pub mod orbit;
pub mod perturbation;
pub mod spectroscopy;

pub use error::{Error, Result};
