//! Batch analysis of short-form news video.
//!
//! Transcripts are linked to a fixed aspect lexicon through dependency
//! parses and scored for aspect sentiment; sampled frames are labeled with a
//! closed scene taxonomy; both sides roll up into outlet-level tables and
//! monthly trends. All model inference sits behind [`backend`].

pub mod absa;
pub mod analytics;
pub mod backend;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod frames;
pub mod linking;
pub mod percent;
pub mod pipeline;
pub mod sampling;
pub mod scenes;
pub mod transcripts;

pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
