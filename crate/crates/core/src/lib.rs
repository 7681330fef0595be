//! Scene text detection built around a per-region "characterness" score.
//!
//! The pipeline extracts candidate regions with an edge-preserving MSER
//! variant, scores each with three cues fused by naive Bayes, labels the
//! candidates by exact min-cut over a binary MRF, and groups the surviving
//! characters into text lines. [`evalkit`] carries the saliency and box
//! metrics used to evaluate the output.

pub mod charmodel;
pub mod config;
pub mod cues;
pub mod error;
pub mod evalkit;
pub mod imgcore;
pub mod io;
pub mod labeling;
pub mod lines;
pub mod regions;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
