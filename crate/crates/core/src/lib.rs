//! Merit functions, slopes, metric-increase constants and error-bound
//! certificates for strong vector equilibrium problems.

pub mod certify;
pub mod cones;
pub mod config;
pub mod error;
pub mod increase;
pub mod linalg;
pub mod merit;
pub mod model;
pub mod point;
pub mod probes;
pub mod sampling;
pub mod search;
pub mod slope;
pub mod solver;
pub mod subdiff;

pub use cones::ConeSpec;
pub use config::Config;
pub use error::{Error, Result};
pub use model::{BifunctionSpec, ConstraintKind, ConstraintSet, NamedExample, ProblemInstance};
pub use point::Point;
