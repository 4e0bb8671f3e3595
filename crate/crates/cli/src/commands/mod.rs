pub mod eval;
pub mod losses;
pub mod pipeline;
pub mod propose;
pub mod pseudo;
pub mod shapes;
pub mod synth;

use std::path::Path;

use gss3d::prior::ShapePriorTable;

use crate::failure::{require, CliResult, Failure};

/// `builtin` or a path to a JSON prior table.
pub fn prior_table(arg: &str) -> CliResult<ShapePriorTable> {
    if arg == "builtin" {
        return Ok(ShapePriorTable::builtin());
    }
    let path = require(Path::new(arg))?;
    ShapePriorTable::load(path).map_err(|e| Failure::usage(format!("{arg}: {e}")))
}
