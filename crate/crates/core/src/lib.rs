//! Uniform hyperbolicity of unimodular 2×2 cocycles and spectra of extended CMV matrices.

pub mod cmv;
pub mod config;
pub mod dynamics;
pub mod hyperbolicity;
pub mod johnson;
pub mod linalg;
pub mod output;
pub mod par;
pub mod suites;
