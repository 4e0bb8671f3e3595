//! Geometric kernels: boxes, IoU, convex hulls, hull overlap and NMS.

mod aabb;
mod hull;
mod nms;
mod overlap;

pub use aabb::{aabb_of, intersection_volume, iou3d};
pub use hull::{convex_hull, ConvexHull};
pub use nms::{nms, nms_labeled};
pub use overlap::{convex_distance, hulls_overlap, point_sets_overlap};
