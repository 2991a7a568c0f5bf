pub mod arff;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lsq;
pub mod mlp;
pub mod rng;
pub mod targets;

pub use error::{Error, Result};
