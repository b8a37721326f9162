pub mod analysis;
pub mod circuit;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod mesh;
pub mod oracles;
pub mod params;
pub mod problems;
pub mod sparse;
pub mod splitting;
pub mod verify;

pub use error::{Error, Result};
