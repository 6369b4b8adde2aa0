//! Aggregated convex-combination encoding of a bounding set's polyhedral
//! enclosure: one weight per grid point, one binary per simplex.

use super::model::{MilpModel, ModelError, RowSense, VarId};
use crate::bounding::BoundingSet;
use crate::triangulation::Triangulation;

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("empty triangulation")]
    EmptyTriangulation,
    #[error("expected {want} input variables, got {got}")]
    Inputs { got: usize, want: usize },
    #[error("triangulation has {got} points but the bounding set has {want}")]
    PointCount { got: usize, want: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Handles to the variables of one encoded enclosure.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosureVars {
    pub x: Vec<VarId>,
    pub lambda: Vec<VarId>,
    pub b: Vec<VarId>,
    pub y_lo: VarId,
    pub y_hi: VarId,
    pub y: VarId,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        })
}

/// Adds the enclosure of `set` over `tri` to `model`. `inputs[a]` is the
/// model variable standing for the set's axis `a`; `(t, i)` only labels
/// the new variables (`lambda[t][i][j]`, `b[t][i][k]`, ...).
pub fn encode_enclosure(
    model: &mut MilpModel,
    set: &BoundingSet,
    tri: &Triangulation,
    inputs: &[VarId],
    t: usize,
    i: usize,
) -> Result<EnclosureVars, EncodeError> {
    if tri.is_empty() {
        return Err(EncodeError::EmptyTriangulation);
    }
    if inputs.len() != set.dim() {
        return Err(EncodeError::Inputs {
            got: inputs.len(),
            want: set.dim(),
        });
    }
    let pts = tri.points();
    if pts.len() != set.grid().len() {
        return Err(EncodeError::PointCount {
            got: pts.len(),
            want: set.grid().len(),
        });
    }
    let (l, u) = (set.lower(), set.upper());
    let lambda: Vec<VarId> = (0..pts.len())
        .map(|j| model.continuous(format!("lambda[{t}][{i}][{j}]"), 0.0, 1.0))
        .collect::<Result<_, _>>()?;
    let b: Vec<VarId> = (0..tri.len())
        .map(|k| model.binary(format!("b[{t}][{i}][{k}]")))
        .collect::<Result<_, _>>()?;
    let (lmin, lmax) = min_max(l);
    let (umin, umax) = min_max(u);
    let y_lo = model.continuous(format!("ylo[{t}][{i}]"), lmin, lmax)?;
    let y_hi = model.continuous(format!("yhi[{t}][{i}]"), umin, umax)?;
    let y = model.continuous(format!("y[{t}][{i}]"), lmin, umax)?;

    // convexity of the weights, exactly one active simplex
    model.add_row(
        lambda.iter().map(|&v| (v, 1.0)).collect(),
        RowSense::Eq,
        1.0,
    )?;
    model.add_row(b.iter().map(|&v| (v, 1.0)).collect(), RowSense::Eq, 1.0)?;
    // a weight may be positive only on a vertex of the active simplex
    for (j, members) in tri.vertex_simplices().iter().enumerate() {
        let mut row = vec![(lambda[j], 1.0)];
        row.extend(members.iter().map(|&k| (b[k], -1.0)));
        model.add_row(row, RowSense::Le, 0.0)?;
    }
    // the input point is the weighted grid point
    for (a, &xa) in inputs.iter().enumerate() {
        let mut row = vec![(xa, 1.0)];
        row.extend((0..pts.len()).map(|j| (lambda[j], -pts.point(j)[a])));
        model.add_row(row, RowSense::Eq, 0.0)?;
    }
    // lifted bound surfaces
    let mut row = vec![(y_lo, 1.0)];
    row.extend((0..pts.len()).map(|j| (lambda[j], -l[j])));
    model.add_row(row, RowSense::Eq, 0.0)?;
    let mut row = vec![(y_hi, 1.0)];
    row.extend((0..pts.len()).map(|j| (lambda[j], -u[j])));
    model.add_row(row, RowSense::Eq, 0.0)?;
    model.add_row(vec![(y, 1.0), (y_lo, -1.0)], RowSense::Ge, 0.0)?;
    model.add_row(vec![(y, 1.0), (y_hi, -1.0)], RowSense::Le, 0.0)?;
    Ok(EnclosureVars {
        x: inputs.to_vec(),
        lambda,
        b,
        y_lo,
        y_hi,
        y,
    })
}

/// A model holding only the enclosure, with inputs `x[a]` ranging over the grid box.
pub fn enclosure_model(
    set: &BoundingSet,
    tri: &Triangulation,
) -> Result<(MilpModel, EnclosureVars), EncodeError> {
    let mut m = MilpModel::new();
    let (lo, hi) = (set.grid().lower(), set.grid().upper());
    let x: Vec<VarId> = (0..set.dim())
        .map(|a| m.continuous(format!("x[{}]", set.vars()[a]), lo[a], hi[a]))
        .collect::<Result<_, _>>()?;
    let vars = encode_enclosure(&mut m, set, tri, &x, 0, 0)?;
    Ok((m, vars))
}
