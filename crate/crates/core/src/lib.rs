//! Static experiment planning for contextual bandits over finite function
//! classes.

pub mod domain;
pub mod eluder;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod harness;
pub mod modsel;
pub mod norms;
pub mod planning;
pub mod regression;
pub mod rng;
pub mod treebandit;

pub use error::{Error, Result};
