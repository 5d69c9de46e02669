//! Numerical verification harness: sphere scans of the information
//! determinant, weight-envelope checks, and existence experiments.

pub mod envelope;
pub mod existence;
pub mod rng;
pub mod sphere;
pub mod verify;
