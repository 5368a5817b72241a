pub mod entangled;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod quantum;
pub mod random;
pub mod zoo;

pub use error::{Error, Result};
