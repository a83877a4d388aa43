//! Simulation and analysis of heralded entanglement distillation between two
//! network nodes, each holding one communication qubit and one memory qubit.

pub mod error;
pub mod channels;
pub mod qstate;
pub mod protocol;
pub mod analysis;
pub mod montecarlo;

pub use error::{Error, Result};
