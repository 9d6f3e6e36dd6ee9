//! Finite-volume moving-mesh simulation of capillarity-free two-phase flow
//! in porous media with a moving, lower-dimensional fracture.
//!
//! The numerical core is generic over [`Scalar`]; the aliases at the crate
//! root fix the working precision to `f64`.

pub mod error;
pub mod fluxes;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod physics;
pub mod scalar;
pub mod scenario;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Vec2<f64>;
pub type Phases = physics::PhaseParams<f64>;
pub type Medium = physics::MediumParams<f64>;
