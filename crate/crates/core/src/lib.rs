//! Pure algorithmic core of the histoblend workbench.
//!
//! Everything in this crate is deterministic and free of IO: seeded latent
//! expansion, class-embedding blending and per-layer conditioning schedules,
//! the generator/classifier contract with a closed-form toy backend, tile
//! geometry and quality control, concordance screening, blend experiments,
//! evaluation statistics and education-test construction.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the HTTP
//! model client and the job service live in the `histoblend` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod backend;
pub mod blendlab;
pub mod concordance;
pub mod curriculum;
pub mod digest;
mod error;
pub mod features;
pub mod imaging;
pub mod latent;
pub mod metrics;
pub mod rng;
pub mod workbench;

pub use error::{Error, Result};
