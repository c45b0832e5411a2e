//! Party and ideology classification from legislative speech.
//!
//! The pipeline runs corpus ingestion ([`corpus`]), text cleaning and
//! bag-of-words construction ([`textprep`]), four model families
//! ([`classify`]), and the cross-session evaluation grid with its
//! diagnostics ([`eval`]). [`synth`] generates planted-signal corpora for
//! desk-scale checks and [`cli`] wires everything into batch commands.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
