//! JSON function files and atomic output.
//!
//! ```json
//! { "x_axes": [[...]], "y_axes": [[...]], "metric": {"x": "linf", "y": "l2"},
//!   "values": [...], "name": "optional" }
//! ```
//!
//! Values are row-major, x-axes outermost. Unknown top-level keys are
//! ignored, so envelope outputs (which add a `params` header) load as
//! ordinary functions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIndex, Result};
use crate::function::{MetricSpec, SampledFunction};
use crate::grid::ProductGrid;

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Number(f64),
    Other(serde_json::Value),
}

#[derive(Deserialize)]
struct FunctionFileIn {
    x_axes: Vec<Vec<f64>>,
    y_axes: Vec<Vec<f64>>,
    metric: MetricSpec,
    values: Vec<RawValue>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
struct GridFileIn {
    x_axes: Vec<Vec<f64>>,
    y_axes: Vec<Vec<f64>>,
    #[serde(default)]
    metric: Option<MetricSpec>,
}

#[derive(Serialize)]
struct FunctionFileOut<'a, P: Serialize> {
    x_axes: Vec<&'a [f64]>,
    y_axes: Vec<&'a [f64]>,
    metric: MetricSpec,
    values: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<P>,
}

fn parse_value(raw: RawValue, node: impl FnOnce() -> NodeIndex) -> Result<f64> {
    match raw {
        RawValue::Number(v) => Ok(v),
        RawValue::Other(serde_json::Value::String(s))
            if matches!(
                s.to_ascii_lowercase().as_str(),
                "nan" | "inf" | "-inf" | "+inf" | "infinity" | "-infinity" | "+infinity"
            ) =>
        {
            Err(Error::NonFinite(node()))
        }
        RawValue::Other(serde_json::Value::Null) => Err(Error::NonFinite(node())),
        RawValue::Other(other) => Err(Error::Schema(format!(
            "value at node {} is not a number: {other}",
            node()
        ))),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a function file.
pub fn load(path: impl AsRef<Path>) -> Result<SampledFunction> {
    let raw: FunctionFileIn = read_json(path.as_ref())?;
    let grid = ProductGrid::from_coords(raw.x_axes, raw.y_axes)?;
    if raw.values.len() != grid.node_count() {
        return Err(Error::LengthMismatch {
            expected: grid.node_count(),
            got: raw.values.len(),
        });
    }
    let values = raw
        .values
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_value(v, || NodeIndex(grid.multi_index(i))))
        .collect::<Result<Vec<_>>>()?;
    let mut f = SampledFunction::new(grid, raw.metric, values)?;
    f.set_name(raw.name);
    Ok(f)
}

/// Reads only the grid (and metric, when present) from a grid or function file.
pub fn load_grid(path: impl AsRef<Path>) -> Result<(ProductGrid, Option<MetricSpec>)> {
    let raw: GridFileIn = read_json(path.as_ref())?;
    Ok((ProductGrid::from_coords(raw.x_axes, raw.y_axes)?, raw.metric))
}

fn write_function<P: Serialize>(f: &SampledFunction, params: Option<P>, w: &mut dyn Write) -> Result<()> {
    let grid = f.grid();
    let out = FunctionFileOut {
        x_axes: grid.x_axes().iter().map(|a| a.coords()).collect(),
        y_axes: grid.y_axes().iter().map(|a| a.coords()).collect(),
        metric: f.metric(),
        values: f.values(),
        name: f.name(),
        params,
    };
    serde_json::to_writer(&mut *w, &out).map_err(|e| Error::Schema(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io("<output>", e))
}

/// Writes `f` as a function file (atomically).
pub fn save(f: &SampledFunction, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_function::<()>(f, None, w))
}

/// Writes `f` with an extra `params` header object.
pub fn save_with_params<P: Serialize>(f: &SampledFunction, params: &P, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_function(f, Some(params), w))
}

/// Serializes `value` as a single JSON document followed by a newline.
pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Schema(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io("<output>", e))
    })
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    read_json(path.as_ref())
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
