//! Batch front-end for `frontkit`: dataset evaluation, annotator fusion,
//! statistical comparison of runs, synthetic data and report rendering.

pub mod args;
pub mod compare;
pub mod config;
pub mod evaluate;
pub mod fuse;
pub mod report;
pub mod synth;
