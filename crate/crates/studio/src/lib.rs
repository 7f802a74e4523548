//! File formats, model-backend wire client, job service and CLI for the
//! histoblend workbench. The algorithms live in `histoblend_core`.

pub mod cli;
pub mod client;
pub mod config;
mod error;
pub mod formats;
pub mod fsutil;
pub mod jobs;
pub mod model_server;
pub mod runner;
pub mod server;
pub mod service;
pub mod slides;
pub mod wire;

pub use error::{Result, StudioError};
pub use histoblend_core as core;
