//! Hierarchical task network planning.

pub mod bench;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod plan_engine;
pub mod search;
pub mod state_engine;
pub mod symbol;
pub mod validate;
