//! Point-cloud toolkit for weakly supervised 3D recognition.
//!
//! The crate covers the parts of the pipeline that do not involve a neural
//! network: plane detection by region growing, geometric selective search
//! for 3D proposals, pseudo-label generation from score matrices, loss
//! evaluators, external priors, and evaluation metrics.

pub mod error;
pub mod geometry;
pub mod gss;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod prior;
pub mod pseudolabel;
pub mod rng;
pub mod shape_detect;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use rng::Rng;
pub use types::{Box3, LabeledBox, PointCloud, SceneTags, ScoreMatrix, Vec3};
