//! Spatial-temporal differentiation of ergodic averages.
//!
//! The crate evaluates ball averages of Birkhoff averages and of averages
//! along the squares on a small catalog of measure-preserving systems, the
//! associated maximal operators, the Gauss-sum description of the limits of
//! square averages, and adaptive decay schedules for single observables.

pub mod adaptive;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod maximal;
pub mod numeric;
pub mod observables;
pub mod operators;
pub mod spectral;
pub mod systems;

pub use error::{Error, Result};
pub use geometry::{BallRegion, MetricSpec, PartitionSequence};
pub use observables::Observable;
pub use operators::Flavor;
pub use systems::{Angle, Point, SystemSpec};
