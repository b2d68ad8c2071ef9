//! Real-time voice hate-speech detection.
//!
//! Two classifiers run side by side on every speech segment:
//!
//! - a text path: speech-to-text ([`stt`]) followed by a prompted chat model ([`llm`]);
//! - an audio path: RMS + 40-dimensional MFCC features ([`features`]) scored by a small
//!   1-D CNN ([`cnn`]).
//!
//! A segment is flagged only when both paths say hate ([`fusion`]). The [`pipeline`] module
//! runs the two paths concurrently per segment and keeps outcomes in segment order, while
//! [`telemetry`] records per-stage latencies. [`eval`] holds manifests, splits, confusion
//! matrices and report generation; [`commands`] backs the `voxguard` binary.

pub mod audio;
pub mod clock;
pub mod cnn;
pub mod commands;
pub mod eval;
pub mod features;
pub mod fusion;
mod http;
pub mod label;
pub mod llm;
pub mod pipeline;
pub mod stt;
pub mod telemetry;

pub use label::Label;
