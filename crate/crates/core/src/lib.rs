pub mod dist;
pub mod engine;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod ks;
pub mod linalg;
pub mod models;
pub mod quad;
pub mod rng;
pub mod stable;

pub use error::{Error, Result};
