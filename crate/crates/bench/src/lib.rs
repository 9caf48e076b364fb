//! Shared fixtures for the benchmarks.

use kreinlab::discretize::{assemble_on, DiscreteModel};
use kreinlab::geometry::unit_disk;
use kreinlab::suite::standard_operators;

/// Constant-drift operator on the unit disk at mesh size `h`.
pub fn drift_model(h: f64) -> DiscreteModel {
    assemble_on(&standard_operators().remove(2), &unit_disk(), h).expect("assembly")
}
