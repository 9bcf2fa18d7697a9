//! Matrix gain-scheduling of QSR-dissipative systems.
//!
//! The crate covers QSR supply rates and their special cases, scheduling
//! matrix families, composition of subsystem supply rates into the supply
//! rate of the scheduled system, LMI certification with Lyapunov and Riccati
//! solvers, dissipative controller synthesis and a three-link manipulator
//! simulation used to compare scheduling strategies.

pub mod certification;
pub mod composition;
pub mod error;
pub mod io;
pub mod linalg;
pub mod qsr;
pub mod robot_sim;
pub mod scheduling;
pub mod synthesis;

pub use error::{Error, Result};
