//! Core algorithms for detecting compromised social-media accounts through
//! statistical text analysis.
//!
//! The detection signal is the divergence between two unigram language models
//! estimated from a randomized split of an account's message stream: one model
//! for the putative user, one for the putative attacker. Repeated random splits
//! yield a sample of KL divergences whose aggregate statistics (max, min, mean,
//! variance) feed a linear SVM.
//!
//! This crate is `no_std` (with `alloc`) and performs no IO: corpora are built
//! in memory, all randomness flows from explicit seeds, and all transcendental
//! math goes through `libm` so results are bit-reproducible across platforms.
//! File formats, the CLI, and parallel orchestration live in the companion
//! `kldetect` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod kl_features;
pub mod langmodel;
pub mod rng;
pub mod simulator;

pub use error::Error;
