//! Asymptotic transformation rates between quantum dichotomies.

pub mod config;
pub mod divergence;
pub mod entangle;
pub mod error;
pub mod hypotest;
pub mod matrixcore;
pub mod optimize;
pub mod oracle;
pub mod rates;
pub mod statfun;
pub mod thermo;

pub use error::{DichotomyError, Result};
