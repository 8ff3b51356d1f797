//! Heavy-hitter sketches and sparse recovery schemes for turnstile streams,
//! with exact oracles and a Monte Carlo harness for scoring them.

pub mod error;
pub mod adaptive;
pub mod count_min;
pub mod field;
pub mod guv;
pub mod harness;
pub mod l2;
pub mod pipeline;
pub mod stream;
pub mod util;
pub mod weak;

pub use error::{Error, Result};
