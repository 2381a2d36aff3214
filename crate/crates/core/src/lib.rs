//! Evaluation toolkit for calving-front delineation on SAR imagery.
//!
//! - [`geodata`]: zone/front masks, bounding boxes, catchments, manifests
//! - [`morph`]: binary morphology, skeletons, exact Euclidean distance transform
//! - [`frontops`]: front extraction and shared post-processing
//! - [`tiling`]: patch extraction, Gaussian-weighted merging, resizing
//! - [`metrics`]: Mean Distance Error and subset breakdowns
//! - [`fusion`]: multi-annotator vote fusion and leave-one-out scoring
//! - [`stats`]: Kruskal-Wallis, Mann-Whitney U, Bonferroni, Cohen's d, Kendall's tau

pub mod error;
pub mod frontops;
pub mod fusion;
pub mod geodata;
pub mod grid;
pub mod metrics;
pub mod morph;
pub mod stats;
pub mod tiling;

pub use error::{Error, Result};
pub use geodata::{BoundingBox, CatchmentMask, FrontMask, Manifest, SceneMeta, ZoneClass, ZoneMask};
pub use grid::{BinaryGrid, Connectivity, Grid};
pub use metrics::{EvalReport, ScenePairResult};
