//! Glass-box, unsupervised quality estimation for encoder-decoder
//! translation models.

pub mod error;
pub mod harness;
pub mod indicators;
pub mod numeric;
pub mod sim;
pub mod stats;
pub mod trace;

pub use error::{Error, Result};
