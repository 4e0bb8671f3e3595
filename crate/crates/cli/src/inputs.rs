use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

use gss3d::gss::Strategy;
use gss3d::shape_detect::PlaneRegion;
use gss3d::{Box3, LabeledBox, PointCloud, SceneTags, ScoreMatrix};

use crate::failure::{require, CliResult, Failure};

pub fn cloud(path: &Path) -> CliResult<PointCloud> {
    Ok(gss3d::io::load_ply(require(path)?)?)
}

pub fn scores(path: &Path) -> CliResult<ScoreMatrix> {
    Ok(gss3d::io::load_score_matrix(require(path)?)?)
}

pub fn boxes(path: &Path) -> CliResult<Vec<LabeledBox>> {
    Ok(gss3d::io::load_boxes(require(path)?)?)
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(require(path)?)
        .map_err(|e| Failure::compute("io", format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::compute("json", format!("{}: {e}", path.display())))
}

/// Configuration files: anything unreadable or ill-formed is a usage error.
pub fn config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let value = read_json(path).map_err(|f| Failure { code: 2, ..f })?;
    serde_json::from_value(value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn regions(path: &Path) -> CliResult<Vec<PlaneRegion>> {
    serde_json::from_value(read_json(path)?).map_err(|e| Failure::compute("json", format!("{}: {e}", path.display())))
}

pub fn strategies(path: &Path) -> CliResult<Vec<Strategy>> {
    let list: Vec<Strategy> = config(path)?;
    if list.is_empty() {
        return Err(Failure::usage(format!("{} lists no strategies", path.display())));
    }
    for s in &list {
        s.validate()
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    Ok(list)
}

pub fn tags(path: &Path) -> CliResult<SceneTags> {
    let raw: Vec<u8> = serde_json::from_value(read_json(path)?)
        .map_err(|e| Failure::compute("json", format!("{}: tags must be an array of 0/1: {e}", path.display())))?;
    Ok(SceneTags::new(raw)?)
}

/// Proposal boxes from either an enveloped `{"proposals": [...]}` document
/// or a bare array of `{min, max, ...}` objects.
pub fn proposals(path: &Path) -> CliResult<Vec<Box3>> {
    let value = read_json(path)?;
    let list = match value {
        Value::Object(mut map) => map
            .remove("proposals")
            .ok_or_else(|| Failure::compute("json", format!("{}: no 'proposals' field", path.display())))?,
        other => other,
    };
    #[derive(serde::Deserialize)]
    struct Raw {
        min: [f64; 3],
        max: [f64; 3],
    }
    let raw: Vec<Raw> =
        serde_json::from_value(list).map_err(|e| Failure::compute("json", format!("{}: {e}", path.display())))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| Box3::new(r.min, r.max).map_err(|e| Failure::compute("validation", format!("proposal {i}: {e}"))))
        .collect()
}

/// Integer point labels from CSV: the `class` column when present, the only
/// column of a single-column file, or else the row argmax of a score matrix.
pub fn labels(path: &Path) -> CliResult<Vec<i64>> {
    let text = std::fs::read_to_string(require(path)?)
        .map_err(|e| Failure::compute("io", format!("reading {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Failure::compute("csv", format!("{}: {e}", path.display())))?
        .clone();
    let column = headers
        .iter()
        .position(|h| h == "class")
        .or((headers.len() == 1).then_some(0));
    let Some(column) = column else {
        let m = gss3d::io::parse_score_matrix(&text)?;
        return Ok((0..m.rows()).map(|r| m.row_argmax(r) as i64).collect());
    };
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Failure::compute("csv", format!("{} row {}: {e}", path.display(), i + 2)))?;
            rec.get(column).and_then(|v| v.parse::<i64>().ok()).ok_or_else(|| {
                Failure::compute("csv", format!("{} row {}: not an integer label", path.display(), i + 2))
            })
        })
        .collect()
}
