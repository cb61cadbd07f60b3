//! Look-and-Say rewriting, audioactive length analysis, dataset generation
//! and exact-match scoring of sequence-to-sequence predictions.

pub mod audioactive;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod evaluate;
pub mod sequence;

pub use error::{LnsError, Result};
pub use sequence::{Digit, RleRun, RleString, Term};
