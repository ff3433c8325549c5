//! Team automata: component automata, systems and synchronisation types,
//! communication properties, realisation of global interaction models,
//! composition, featured families and a small dynamic logic.

pub mod comm;
pub mod compose;
pub mod dot;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod featured;
pub mod fixtures;
pub mod lts;
pub mod pdl;
pub mod realise;
pub mod report;
pub mod system;
pub mod teams;

pub use error::{ModelError, Result};
pub use exec::Execution;
