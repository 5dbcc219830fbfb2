//! Semicontinuous envelope operators on sampled functions over product grids.

pub mod baire;
pub mod catalog;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod function;
pub mod grid;
pub mod io;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use function::{Metric, MetricSpec, SampledFunction};
pub use grid::{AxisGrid, ProductGrid, Variable};
