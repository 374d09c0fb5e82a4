pub mod bounds;
pub mod cftp;
pub mod error;
pub mod estimation;
pub mod exact;
pub mod kernels;
pub mod rational;
pub mod validation;

pub use error::{Error, ErrorClass, Result};
pub use rational::Rational;
