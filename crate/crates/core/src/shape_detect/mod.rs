//! Planar primitive detection by region growing.

mod knn;
mod normals;
mod region_grow;

pub use knn::KdTree;
pub use normals::estimate_normals;
pub use region_grow::{detect_planes, PlaneRegion, RegionGrowParams};
