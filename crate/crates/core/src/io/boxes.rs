use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::LabeledBox;

/// Parses a JSON array of `{"class_id", "min", "max", "score"?}` records.
pub fn parse_boxes(text: &str) -> Result<Vec<LabeledBox>> {
    let boxes: Vec<LabeledBox> = serde_json::from_str(text)?;
    for (i, b) in boxes.iter().enumerate() {
        b.bbox.validate(i)?;
        if b.score.is_some_and(|s| !s.is_finite()) {
            return Err(Error::Validation {
                index: i,
                message: "non-finite score".into(),
            });
        }
    }
    Ok(boxes)
}

pub fn load_boxes(path: impl AsRef<Path>) -> Result<Vec<LabeledBox>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_boxes(&text)
}

/// Serializes boxes; floats use the shortest exact round-trip representation.
pub fn boxes_to_json(boxes: &[LabeledBox]) -> String {
    serde_json::to_string_pretty(boxes).expect("boxes always serialize")
}

pub fn save_boxes(boxes: &[LabeledBox], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, boxes_to_json(boxes)).map_err(|e| Error::io(path, e))
}
