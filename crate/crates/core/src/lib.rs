//! Reflection geometry of ellipsoids and convex bodies.

pub mod error;
pub mod linalg;
pub mod quadric;
pub mod rng;
pub mod section;
pub mod body;
pub mod bezdek;
pub mod cli;

pub use error::{Error, Result};
