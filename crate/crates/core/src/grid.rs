//! Rectilinear grids stored as per-axis sorted coordinate lists.
//!
//! Points are numbered in row-major order: the last axis varies fastest.

use serde::{Deserialize, Serialize};

/// Axis values closer than this (relative to `max(1, |v|)`) are identified.
pub const AXIS_DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("axis {axis} needs at least two distinct values, got {count}")]
    TooFewValues { axis: usize, count: usize },
    #[error("axis {axis} contains a non-finite value")]
    NonFinite { axis: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

pub(crate) fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= AXIS_DEDUP_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sorts and deduplicates axis values.
pub fn normalize_axis(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite axis values"));
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if same_value(last, x) => {}
            _ => out.push(x),
        }
    }
    out
}

impl Grid {
    /// Builds a grid from (possibly unsorted) axis values.
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Grid, GridError> {
        let mut out = Vec::with_capacity(axes.len());
        for (axis, v) in axes.into_iter().enumerate() {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GridError::NonFinite { axis });
            }
            let v = normalize_axis(v);
            if v.len() < 2 {
                return Err(GridError::TooFewValues {
                    axis,
                    count: v.len(),
                });
            }
            out.push(v);
        }
        Ok(Grid { axes: out })
    }

    /// The zero-dimensional grid with a single (empty) point.
    pub fn point() -> Grid {
        Grid { axes: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    /// Resolution vector: number of values per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for i in (0..self.dim().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].len();
        }
        s
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(m, s)| m * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].len();
            m[i] = idx % n;
            idx /= n;
        }
        m
    }

    pub fn point_at(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.axes[i][k])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point_at(i)).collect()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[0]).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| *a.last().expect("nonempty axis"))
            .collect()
    }

    /// Position of `v` on axis `i`, if present (within the dedup tolerance).
    pub fn axis_position(&self, i: usize, v: f64) -> Option<usize> {
        let a = &self.axes[i];
        let k = a.partition_point(|&x| x < v);
        [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .find(|&j| j < a.len() && same_value(a[j], v))
    }

    /// Grid index of a point whose coordinates are all axis values.
    pub fn find_point(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.dim() {
            return None;
        }
        let mut m = Vec::with_capacity(self.dim());
        for (i, &x) in p.iter().enumerate() {
            m.push(self.axis_position(i, x)?);
        }
        Some(self.index_of(&m))
    }

    /// Whether `p` lies in the grid's bounding box up to `slack`.
    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        p.len() == self.dim()
            && self.axes.iter().zip(p).all(|(a, &x)| {
                let s = slack * (a[a.len() - 1] - a[0]).max(1.0);
                x >= a[0] - s && x <= a[a.len() - 1] + s
            })
    }

    /// Grid obtained by inserting `v` into axis `i`.
    pub fn with_value(&self, i: usize, v: f64) -> Grid {
        let mut axes = self.axes.clone();
        axes[i].push(v);
        axes[i] = normalize_axis(std::mem::take(&mut axes[i]));
        Grid { axes }
    }

    /// Grid `G + q`: every coordinate of `q` inserted into its axis.
    pub fn expanded_by(&self, q: &[f64]) -> Grid {
        let mut axes = self.axes.clone();
        for (i, &x) in q.iter().enumerate() {
            axes[i].push(x);
            axes[i] = normalize_axis(std::mem::take(&mut axes[i]));
        }
        Grid { axes }
    }

    /// Number of box cells.
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    /// Lower-corner multi-index of the cell with linear index `c`.
    pub fn cell_multi(&self, mut c: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].len() - 1;
            m[i] = c % n;
            c /= n;
        }
        m
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        let mut c = 0;
        for (i, &m) in multi.iter().enumerate() {
            c = c * (self.axes[i].len() - 1) + m;
        }
        c
    }

    /// Grid indices of the 2^n corners of a cell, corner `b` having offset
    /// bit `n-1-i` for axis `i`.
    pub fn cell_corners(&self, cell: &[usize]) -> Vec<usize> {
        let n = self.dim();
        let strides = self.strides();
        let base: usize = cell.iter().zip(&strides).map(|(m, s)| m * s).sum();
        (0..1usize << n)
            .map(|b| {
                (0..n)
                    .filter(|&i| b >> (n - 1 - i) & 1 == 1)
                    .map(|i| strides[i])
                    .sum::<usize>()
                    + base
            })
            .collect()
    }

    /// Cells (lower-corner multi-indices) whose closure contains `x`,
    /// with coordinates clamped into the grid box.
    pub fn cells_containing(&self, x: &[f64], tol: f64) -> Vec<Vec<usize>> {
        let mut per_axis: Vec<Vec<usize>> = Vec::with_capacity(self.dim());
        for (i, a) in self.axes.iter().enumerate() {
            let n = a.len();
            let t = tol * (a[n - 1] - a[0]).max(f64::MIN_POSITIVE);
            let v = x[i].clamp(a[0], a[n - 1]);
            let k = a.partition_point(|&y| y <= v).clamp(1, n - 1) - 1;
            let mut opts = vec![k];
            if k > 0 && (v - a[k]).abs() <= t {
                opts.insert(0, k - 1);
            }
            if k + 2 < n && (a[k + 1] - v).abs() <= t {
                opts.push(k + 1);
            }
            per_axis.push(opts);
        }
        let mut out = vec![Vec::new()];
        for opts in per_axis {
            let mut next = Vec::with_capacity(out.len() * opts.len());
            for prefix in &out {
                for &o in &opts {
                    let mut p = prefix.clone();
                    p.push(o);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// Points sharing at least one coordinate with `q`.
    pub fn star(&self, q: &[f64]) -> Option<Vec<usize>> {
        let qi: Vec<usize> = (0..self.dim())
            .map(|i| self.axis_position(i, q[i]))
            .collect::<Option<_>>()?;
        Some(
            (0..self.len())
                .filter(|&idx| self.multi_index(idx).iter().zip(&qi).any(|(m, k)| m == k))
                .collect(),
        )
    }
}
