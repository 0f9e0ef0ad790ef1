//! Text format for fitted FDNN models.
//!
//! ```text
//! # fdnn model
//! [grid]
//! equispaced = true
//! axis = 0.01 0.03 ...
//! weights = 0.02 0.02 ...
//! [eigensystem]
//! eigenvalues = 0.72 0.031 ...
//! mean = ...
//! eigenfunction = ...        (one line per eigenfunction)
//! [network]
//! hyper = 2 4 16 10          (L J width B)
//! center = ...
//! scale = ...
//! weight = 16 4 ...          (rows cols, then row-major entries)
//! shift = ...
//! [selection]
//! candidate = 2 4 16 10 0.125
//! ```
//!
//! Floats are written in shortest round-trip form, so loading a saved
//! model reproduces its predictions bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::classifier::{FdnnModel, Hyperparams, InputScaling, SelectionRow};
use crate::dnn::NetworkParams;
use crate::error::{FdnnError, Result};
use crate::fpca::EigenSystem;
use crate::grid::SamplingGrid;

const MAGIC: &str = "# fdnn model";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

pub fn model_to_string(model: &FdnnModel) -> String {
    let mut out = String::new();
    let grid = model.grid();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "[grid]");
    let _ = writeln!(out, "equispaced = {}", grid.is_equispaced());
    for axis in grid.coordinates() {
        let _ = writeln!(out, "axis = {}", join(axis));
    }
    let _ = writeln!(out, "weights = {}", join(grid.weights()));

    let eig = &model.eigensystem;
    let _ = writeln!(out, "[eigensystem]");
    let _ = writeln!(out, "eigenvalues = {}", join(eig.eigenvalues()));
    let _ = writeln!(out, "mean = {}", join(eig.mean_function()));
    for f in eig.eigenfunctions() {
        let _ = writeln!(out, "eigenfunction = {}", join(f));
    }

    let h = model.hyper;
    let _ = writeln!(out, "[network]");
    let _ = writeln!(out, "hyper = {} {} {} {:?}", h.depth, h.j, h.width, h.bound);
    let _ = writeln!(out, "center = {}", join(&model.scaling.center));
    let _ = writeln!(out, "scale = {}", join(&model.scaling.scale));
    for (l, w) in model.params.weights.iter().enumerate() {
        let row_major: Vec<f64> = w.transpose().iter().copied().collect();
        let _ = writeln!(out, "weight = {} {} {}", w.nrows(), w.ncols(), join(&row_major));
        if let Some(v) = model.params.shifts.get(l) {
            let _ = writeln!(out, "shift = {}", join(v.as_slice()));
        }
    }

    let _ = writeln!(out, "[selection]");
    for row in &model.selection_report {
        let c = row.hyper;
        let _ = writeln!(
            out,
            "candidate = {} {} {} {:?} {:?}",
            c.depth, c.j, c.width, c.bound, row.validation_error
        );
    }
    out
}

pub fn save_model(path: &Path, model: &FdnnModel) -> Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(|e| FdnnError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<FdnnModel> {
    let text = std::fs::read_to_string(path).map_err(|e| FdnnError::io(path, e))?;
    parse_model(&text, &path.display().to_string())
}

#[derive(Default)]
struct Parts {
    equispaced: Option<bool>,
    axes: Vec<Vec<f64>>,
    grid_weights: Option<Vec<f64>>,
    eigenvalues: Option<Vec<f64>>,
    mean: Option<Vec<f64>>,
    eigenfunctions: Vec<Vec<f64>>,
    hyper: Option<Hyperparams>,
    center: Option<Vec<f64>>,
    scale: Option<Vec<f64>>,
    weights: Vec<DMatrix<f64>>,
    shifts: Vec<DVector<f64>>,
    selection: Vec<SelectionRow>,
}

/// Parses a model written by [`model_to_string`]; `source` names the input
/// in error messages.
pub fn parse_model(text: &str, source: &str) -> Result<FdnnModel> {
    let err = |line: usize, msg: String| FdnnError::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(err(1, format!("expected '{MAGIC}' header"))),
    }
    let mut parts = Parts::default();
    let mut section = String::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if !["grid", "eigensystem", "network", "selection"].contains(&name) {
                return Err(err(no, format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(no, "expected 'key = value'".into()))?;
        let floats = || -> Result<Vec<f64>> {
            value
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| err(no, format!("bad number '{t}'"))))
                .collect()
        };
        match (section.as_str(), key) {
            ("grid", "equispaced") => {
                parts.equispaced = Some(value.parse().map_err(|_| err(no, format!("bad boolean '{value}'")))?)
            }
            ("grid", "axis") => parts.axes.push(floats()?),
            ("grid", "weights") => parts.grid_weights = Some(floats()?),
            ("eigensystem", "eigenvalues") => parts.eigenvalues = Some(floats()?),
            ("eigensystem", "mean") => parts.mean = Some(floats()?),
            ("eigensystem", "eigenfunction") => parts.eigenfunctions.push(floats()?),
            ("network", "hyper") => parts.hyper = Some(parse_hyper(value).ok_or_else(|| err(no, "expected 'L J width B'".into()))?),
            ("network", "center") => parts.center = Some(floats()?),
            ("network", "scale") => parts.scale = Some(floats()?),
            ("network", "weight") => {
                let v = floats()?;
                let shape_ok = v.len() >= 2 && v[0] >= 1.0 && v[1] >= 1.0 && v[0].fract() == 0.0 && v[1].fract() == 0.0;
                if !shape_ok || v.len() != 2 + (v[0] * v[1]) as usize {
                    return Err(err(no, "weight line must be 'rows cols' followed by rows*cols entries".into()));
                }
                let (rows, cols) = (v[0] as usize, v[1] as usize);
                parts.weights.push(DMatrix::from_row_slice(rows, cols, &v[2..]));
            }
            ("network", "shift") => parts.shifts.push(DVector::from_vec(floats()?)),
            ("selection", "candidate") => {
                let mut tokens: Vec<&str> = value.split_whitespace().collect();
                let error = tokens
                    .pop()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| err(no, "expected 'L J width B error'".into()))?;
                let hyper = parse_hyper(&tokens.join(" ")).ok_or_else(|| err(no, "expected 'L J width B error'".into()))?;
                parts.selection.push(SelectionRow {
                    hyper,
                    validation_error: error,
                });
            }
            ("", _) => return Err(err(no, "key outside of a section".into())),
            (s, k) => return Err(err(no, format!("unknown key '{k}' in [{s}]"))),
        }
    }
    assemble(parts).map_err(|e| match e {
        FdnnError::InvalidArgument(msg) => FdnnError::Parse {
            path: source.to_string(),
            line: 0,
            msg,
        },
        other => other,
    })
}

fn parse_hyper(value: &str) -> Option<Hyperparams> {
    let t: Vec<&str> = value.split_whitespace().collect();
    if t.len() != 4 {
        return None;
    }
    Some(Hyperparams {
        depth: t[0].parse().ok()?,
        j: t[1].parse().ok()?,
        width: t[2].parse().ok()?,
        bound: t[3].parse().ok()?,
    })
}

fn assemble(p: Parts) -> Result<FdnnModel> {
    let missing = |what: &str| FdnnError::invalid(format!("model file lacks {what}"));
    let weights = p.grid_weights.ok_or_else(|| missing("grid weights"))?;
    let grid = if p.equispaced.ok_or_else(|| missing("grid.equispaced"))? {
        let counts: Vec<usize> = p.axes.iter().map(Vec::len).collect();
        let g = SamplingGrid::equispaced(counts.len(), &counts)?;
        if g.coordinates() != p.axes.as_slice() || g.weights() != weights.as_slice() {
            return Err(FdnnError::invalid("grid marked equispaced but its points differ"));
        }
        g
    } else {
        SamplingGrid::with_weights(p.axes, weights)?
    };
    let eig = EigenSystem::from_parts(
        Arc::new(grid),
        p.eigenvalues.ok_or_else(|| missing("eigenvalues"))?,
        p.eigenfunctions,
        p.mean.ok_or_else(|| missing("mean function"))?,
    )?;
    let hyper = p.hyper.ok_or_else(|| missing("network.hyper"))?;
    let scaling = InputScaling {
        center: p.center.ok_or_else(|| missing("network.center"))?,
        scale: p.scale.ok_or_else(|| missing("network.scale"))?,
    };
    let params = NetworkParams::new(p.weights, p.shifts)?;
    if params.depth() != hyper.depth || params.max_abs() > hyper.bound {
        return Err(FdnnError::invalid("network does not match its recorded hyperparameters"));
    }
    FdnnModel::new(eig, hyper, scaling, params, p.selection)
}
