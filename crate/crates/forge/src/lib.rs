//! Dataset generation, training and analysis tooling built on
//! `illusion-forge-core`.

pub mod build;
pub mod manifest;
pub mod params;
pub mod plot;
pub mod png_io;
pub mod preprocess;
pub mod cli;
pub mod config;
pub mod pipeline;
