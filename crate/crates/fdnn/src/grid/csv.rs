//! Plain-text CSV exchange format for functional data on equispaced grids.
//!
//! ```text
//! # grid d=2 axes=7,7
//! 0.12,0.53,...,1.7,1
//! 0.08,0.61,...,1.2,-1
//! ```
//!
//! Every row holds the `N` grid values in row-major order, optionally
//! followed by a label column (`1` or `-1`). Rows of one file either all
//! carry labels or none do.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{FdnnError, Result};
use crate::grid::{FunctionalObservation, SamplingGrid};
use crate::Label;

/// A set of observations sharing one grid.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub grid: Arc<SamplingGrid>,
    pub observations: Vec<FunctionalObservation>,
}

impl Dataset {
    pub fn labels(&self) -> Option<Vec<Label>> {
        self.observations.iter().map(|o| o.label()).collect()
    }
}

pub fn header_line(grid: &SamplingGrid) -> String {
    let axes: Vec<String> = grid.points_per_axis().iter().map(|m| m.to_string()).collect();
    format!("# grid d={} axes={}", grid.dim(), axes.join(","))
}

/// Serializes observations; values use shortest round-trip formatting.
pub fn write_csv<W: Write>(mut out: W, grid: &SamplingGrid, obs: &[FunctionalObservation]) -> std::io::Result<()> {
    writeln!(out, "{}", header_line(grid))?;
    let mut line = String::new();
    for o in obs {
        line.clear();
        for (k, v) in o.values().iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{v:?}");
        }
        if let Some(label) = o.label() {
            let _ = write!(line, ",{}", label.as_i8());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_csv(path: &Path, grid: &SamplingGrid, obs: &[FunctionalObservation]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| FdnnError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(&mut w, grid, obs).map_err(|e| FdnnError::io(path, e))?;
    w.flush().map_err(|e| FdnnError::io(path, e))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| FdnnError::io(path, e))?;
    read_csv(file, &path.display().to_string())
}

/// Parses the format above. `source` names the input in error messages.
pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Dataset> {
    let err = |line: usize, msg: String| FdnnError::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty input, expected a `# grid` header".into()))?;
    let header = header.map_err(|e| err(1, e.to_string()))?;
    let axes = parse_header(&header).map_err(|m| err(1, m))?;
    let grid = Arc::new(SamplingGrid::equispaced(axes.len(), &axes).map_err(|e| err(1, e.to_string()))?);
    let n = grid.len();

    let mut observations = Vec::new();
    let mut labelled: Option<bool> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| err(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let has_label = match fields.len() {
            k if k == n => false,
            k if k == n + 1 => true,
            k => {
                return Err(err(
                    lineno,
                    format!("expected {n} values (plus optional label), found {k} fields"),
                ))
            }
        };
        if *labelled.get_or_insert(has_label) != has_label {
            return Err(err(lineno, "label column present on some rows but not others".into()));
        }
        let mut values = Vec::with_capacity(n);
        for (col, f) in fields[..n].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| err(lineno, format!("column {}: cannot parse `{f}` as a number", col + 1)))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("column {}: non-finite value", col + 1)));
            }
            values.push(v);
        }
        let label = if has_label {
            let raw = fields[n];
            let parsed = raw
                .parse::<f64>()
                .ok()
                .and_then(Label::from_f64)
                .ok_or_else(|| err(lineno, format!("label must be 1 or -1, found `{raw}`")))?;
            Some(parsed)
        } else {
            None
        };
        observations.push(FunctionalObservation::new(grid.clone(), values, label).map_err(|e| err(lineno, e.to_string()))?);
    }
    Ok(Dataset { grid, observations })
}

fn parse_header(line: &str) -> std::result::Result<Vec<usize>, String> {
    let rest = line
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|r| r.strip_prefix("grid"))
        .ok_or_else(|| format!("expected `# grid d=<d> axes=<m1,...>`, found `{line}`"))?;
    let mut dim = None;
    let mut axes = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            dim = Some(v.parse::<usize>().map_err(|_| format!("bad dimension `{v}`"))?);
        } else if let Some(v) = tok.strip_prefix("axes=") {
            axes = Some(
                v.split(',')
                    .map(|m| m.parse::<usize>().map_err(|_| format!("bad axis count `{m}`")))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
            );
        } else {
            return Err(format!("unexpected header token `{tok}`"));
        }
    }
    let dim = dim.ok_or("header is missing d=<d>")?;
    let axes: Vec<usize> = axes.ok_or("header is missing axes=<m1,...>")?;
    if axes.len() != dim {
        return Err(format!("d={dim} but {} axis counts given", axes.len()));
    }
    Ok(axes)
}
