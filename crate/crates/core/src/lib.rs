pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod network;
pub mod protocol;
pub mod scattering;
pub mod splitter;

pub use error::{Error, Result};
