//! File formats: PLY clouds, JSON boxes, CSV score matrices.

mod boxes;
mod ply;
mod scores;

pub use boxes::{boxes_to_json, load_boxes, parse_boxes, save_boxes};
pub use ply::{load_ply, parse_ply, save_ply, write_ply, ColorEncoding, PlyEncoding};
pub use scores::{load_score_matrix, parse_score_matrix, save_score_matrix, score_matrix_to_csv};
