pub mod config;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod manifest;
pub mod operators;
pub mod run;
pub mod spectral;
pub mod theory;
