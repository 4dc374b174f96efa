//! A small, self-contained denoising-diffusion laboratory.
//!
//! Everything runs at desk scale against a two-component Gaussian mixture
//! whose density, score and diffused-marginal score are known in closed
//! form, so every learned component can be checked against an exact oracle.
//!
//! The pieces:
//! - [`schedule`]: linear and cosine variance schedules and their derived arrays.
//! - [`target`]: the analytic mixture target with exact density/score oracles.
//! - [`forward`]: Gaussian and deterministic (digit-extraction) forward diffusion.
//! - [`net`]: a hand-rolled 3-input MLP with exact reverse-mode gradients.
//! - [`train`]: Adam plus the three regression objectives (noise / clean / previous step).
//! - [`sample`]: the three matching reverse samplers with trajectory recording.
//! - [`discrete`]: categorical diffusion with enumeration-verifiable marginals and posteriors.
//! - [`eval`]: energy distance, mode statistics, positional bias, vector-field export.
//! - [`cli`] / [`manifest`]: reproducible run directories driven by the `difflab` binary.

pub mod cli;
pub mod discrete;
pub mod error;
pub mod eval;
pub mod forward;
pub mod manifest;
pub mod net;
pub mod sample;
pub mod schedule;
pub mod target;
pub mod train;

pub use error::Error;

/// A point in the plane. All continuous data in this crate is 2-D.
pub type Point = [f64; 2];

pub type Result<T> = std::result::Result<T, Error>;
