//! Critical Bellman-Harris branching processes: exact population-size laws,
//! genealogy simulation, reduced-process observables and the limit laws
//! they converge to under small-population conditioning.

pub mod cli;
pub mod error;
pub mod event;
pub mod limit_laws;
pub mod models;
pub mod numeric;
pub mod renewal;
pub mod schedule;
pub mod series;
pub mod simulator;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use models::{Builtin, Model, ModelConstants, ModelSpec};
pub use schedule::Schedule;
