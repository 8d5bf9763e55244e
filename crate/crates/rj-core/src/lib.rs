pub mod analysis;
pub mod error;
pub mod model;
pub mod currents;
pub mod oracle;
pub mod quadrature;
pub mod spectral;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
