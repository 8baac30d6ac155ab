//! The four worked inference problems, each implementing the engine's
//! [`crate::engine::BootstrapProblem`] contract.

pub mod heavy;
pub mod loader;
pub mod ma;
pub mod np;
pub mod ridge;
