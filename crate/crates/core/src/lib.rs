//! Joint regional quantum state and readout-confusion estimation over
//! overlapping regions, solved by a distributed proximal-alternating ADMM.

pub mod error;
pub mod instance;
pub mod metrics;
pub mod qmat;
pub mod regions;
pub mod solver;
pub mod theory;

pub use error::{QtdmError, Result};

/// Version string recorded in every manifest.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
