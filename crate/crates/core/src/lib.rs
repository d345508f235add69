//! Auditory-nerve neurogram simulation and neurogram similarity scoring.
//!
//! The crate turns speech recordings into auditory-nerve neurograms under
//! configurable audiometric loss and cochlear neural degeneration (fiber
//! loss), scores degraded neurograms against a normal-hearing reference with
//! the Neurogram Similarity Index Measure, and runs two batch studies on top:
//! a regression of phoneme-recognition scores on NSIM features, and a
//! fiber-loss sweep over presentation levels and listening conditions.
//!
//! Module map:
//!
//! - [`stimulus`]: WAV input, level calibration, noise, time compression,
//!   reverberation.
//! - [`periphery`]: gammatone cochlea, rate-level fibers, Poisson PSTHs.
//! - [`neurogram`]: MR/FT neurogram assembly and the neurogram file format.
//! - [`similarity`]: SSI, NSI maps, NSIM.
//! - [`regression`]: epsilon-SVR, k-fold cross-validation, grid search.
//! - [`studies`]: the two study pipelines and their reports.
//! - [`config`]: the run configuration shared by the command-line tool.

pub mod config;
pub mod crosscheck;
mod error;
pub mod matrix;
pub mod neurogram;
pub mod periphery;
pub mod regression;
pub mod seeding;
pub mod similarity;
pub mod stimulus;
pub mod studies;

pub use error::{Error, Result};
pub use matrix::Matrix;
