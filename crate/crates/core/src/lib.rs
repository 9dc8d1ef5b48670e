pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod evalmetrics;
pub mod fsio;
pub mod latentdiff;
pub mod numerics;
pub mod pipeline;
pub mod seqdata;
pub mod seqgan;
pub mod synthetic;

pub use error::{Error, Result};
