//! Achievable rates, information-theoretic lower bounds and optimality gaps
//! for multi-level coded caching, in the multi-user setup (every level
//! present at every cache) and the single-user setup (one user per cache).

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod model;
pub mod multi_user;
pub mod numeric;
pub mod report;
pub mod single_level;
pub mod single_user;

pub use error::{Error, Result};
pub use model::{LevelSpec, Memory, Setup, SystemConfig};
pub use numeric::{Rational, Real};
pub use report::{analyze, RateReport, Witness};
