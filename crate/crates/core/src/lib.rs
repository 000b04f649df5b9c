pub mod circuit;
pub mod dephasing;
pub mod error;
pub mod fitting;
pub mod lifetimes;
pub mod lindblad;
pub mod model;
pub mod qalgebra;
pub mod rates;
pub mod registry;

pub use error::{Error, Result};
