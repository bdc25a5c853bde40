//! Geometry, rendering, dataset planning and a reference classifier for
//! synthetic visual-illusion stimuli. Everything here is `no_std` with
//! `alloc`; file IO and the command line live in the `illusion-forge` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dataset;
pub mod fusion;
pub mod geometry;
pub mod illusions;
pub mod raster;
pub mod toy;
pub mod trainer;
