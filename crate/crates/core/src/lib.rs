pub mod config;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod rng;
pub mod serve;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
