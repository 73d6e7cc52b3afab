//! Compromised-account detection pipeline: file formats, configuration,
//! synthetic corpora, and command orchestration around the algorithms in
//! `kldetect-core`.

pub mod config;
pub mod formats;
pub mod io;
pub mod pipeline;
pub mod synth;
