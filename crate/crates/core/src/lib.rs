//! Cubic polynomials with wandering branching points.

pub mod chain;
pub mod config;
pub mod dendrite;
pub mod error;
pub mod numerics;
pub mod perturb;
pub mod poly;
pub mod puzzle;
pub mod rays;
pub mod render;
pub mod report;

pub use error::{Error, Result};
