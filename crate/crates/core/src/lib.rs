pub mod bits;
pub mod error;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use bits::BitString;
pub use error::{Error, Result};
pub mod hidden_bits;
pub mod hbg;
pub mod nizk;
pub mod epr_nizk;
pub mod crs_nizk;
pub mod attacks;
pub mod harness;
