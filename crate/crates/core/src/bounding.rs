//! Bounding sets: lower and upper values on a rectilinear grid whose
//! piecewise-linear interpolants enclose a function.
//!
//! Every bounding set built here keeps a per-cell envelope property: on each
//! box cell of the grid, every convex combination of corner lower values lies
//! below the function and every convex combination of corner upper values
//! lies above it. This holds for any triangulation of the grid, and all
//! operations below preserve it.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::expr::{decompose_to_syntax_tree, Expr, ExprError, Interval, SyntaxTree, TreeOp};
use crate::grid::{Grid, GridError};
use crate::triangulation::{delaunay_triangulate, PointSet, Triangulation, TriangulationError};
use crate::univariate::{bound_univariate, UnivariateError, UnivariateOptions};

/// Slack for domain membership of inserted points.
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundingError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Univariate(#[from] UnivariateError),
    #[error("Unsupported operator in {0}")]
    UnsupportedOperator(String),
    #[error("division range contains zero at grid point {0:?}")]
    DivisionByZero(Vec<f64>),
    #[error("invalid lift: {0}")]
    InvalidLift(String),
    #[error("bounding sets are defined over different grids")]
    GridMismatch,
    #[error("lower bound exceeds upper bound at grid index {0}")]
    BoundOrder(usize),
    #[error("value count {got} does not match grid size {want}")]
    Length { got: usize, want: usize },
    #[error("point {0:?} is outside the bounding set domain")]
    Outside(Vec<f64>),
}

/// Grid values `L <= U` over axes labelled by system variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingSet {
    vars: Vec<usize>,
    grid: Grid,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Lifting target: the enlarged variable list and, for each new axis, the
/// two padding values.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    pub target_vars: Vec<usize>,
    pub pad_lo: Vec<f64>,
    pub pad_hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundOptions {
    pub univariate: UnivariateOptions,
}

/// Outcome of a sampled enclosure check.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosureReport {
    pub samples: usize,
    pub failures: usize,
    /// Largest amount by which `f` escaped the interpolated bounds.
    pub max_violation: f64,
    pub worst_point: Option<Vec<f64>>,
}

impl EnclosureReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn inflate_down(v: f64) -> f64 {
    v - 1e-12 * (1.0 + v.abs())
}

fn inflate_up(v: f64) -> f64 {
    v + 1e-12 * (1.0 + v.abs())
}

impl BoundingSet {
    pub fn new(
        vars: Vec<usize>,
        grid: Grid,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<BoundingSet, BoundingError> {
        assert_eq!(vars.len(), grid.dim(), "one variable per axis");
        assert!(
            vars.windows(2).all(|w| w[0] < w[1]),
            "variables must be strictly increasing"
        );
        for v in [&lower, &upper] {
            if v.len() != grid.len() {
                return Err(BoundingError::Length {
                    got: v.len(),
                    want: grid.len(),
                });
            }
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(BoundingError::BoundOrder(i));
        }
        Ok(BoundingSet {
            vars,
            grid,
            lower,
            upper,
        })
    }

    /// Zero-dimensional set holding a constant.
    pub fn constant(c: f64) -> BoundingSet {
        BoundingSet {
            vars: Vec::new(),
            grid: Grid::point(),
            lower: vec![c],
            upper: vec![c],
        }
    }

    /// Constant bounds over a box.
    pub fn constant_over(
        vars: Vec<usize>,
        bx: &[Interval],
        lo: f64,
        hi: f64,
    ) -> Result<BoundingSet, BoundingError> {
        let grid = Grid::new(bx.iter().map(|i| vec![i.lo, i.hi]).collect())?;
        let n = grid.len();
        BoundingSet::new(vars, grid, vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn triangulate(&self) -> Result<Triangulation, BoundingError> {
        Ok(delaunay_triangulate(&PointSet::from_grid(&self.grid))?)
    }

    /// Interpolated `(L, U)` at `x` using the given triangulation of the grid.
    pub fn bounds_with(&self, tri: &Triangulation, x: &[f64]) -> Result<(f64, f64), BoundingError> {
        let b = tri
            .locate(x)
            .map_err(|_| BoundingError::Outside(x.to_vec()))?;
        let s = &tri.simplices()[b.simplex];
        let l = s
            .iter()
            .zip(&b.theta)
            .map(|(&v, t)| t * self.lower[v])
            .sum();
        let u = s
            .iter()
            .zip(&b.theta)
            .map(|(&v, t)| t * self.upper[v])
            .sum();
        Ok((l, u))
    }

    pub fn bounds_at(&self, x: &[f64]) -> Result<(f64, f64), BoundingError> {
        self.bounds_with(&self.triangulate()?, x)
    }

    /// Largest and smallest bound values.
    pub fn range(&self) -> Interval {
        let lo = self.lower.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    /// The points `(p, L(p))` and `(p, U(p))`, merged where equal.
    pub fn polyhedron_vertices(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * self.grid.len());
        for (i, p) in self.grid.points().into_iter().enumerate() {
            let mut lo = p.clone();
            lo.push(self.lower[i]);
            out.push(lo);
            if self.upper[i] != self.lower[i] {
                let mut hi = p;
                hi.push(self.upper[i]);
                out.push(hi);
            }
        }
        out
    }

    /// Debug dump `{n, axes, L, U}` in row-major grid order.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "n": self.dim(), "axes": self.grid.axes(), "L": self.lower, "U": self.upper })
    }

    /// Extends the set to more variables, constant along the new axes.
    pub fn lift(&self, spec: &LiftSpec) -> Result<BoundingSet, BoundingError> {
        let n = spec.target_vars.len();
        if spec.pad_lo.len() != n || spec.pad_hi.len() != n {
            return Err(BoundingError::InvalidLift(
                "padding length differs from target dimension".into(),
            ));
        }
        let mut src_axis = vec![None; n];
        for (a, v) in self.vars.iter().enumerate() {
            let j = spec
                .target_vars
                .iter()
                .position(|t| t == v)
                .ok_or_else(|| BoundingError::InvalidLift(format!("x{v} missing from target")))?;
            src_axis[j] = Some(a);
        }
        let mut axes = Vec::with_capacity(n);
        for j in 0..n {
            match src_axis[j] {
                Some(a) => axes.push(self.grid.axis(a).to_vec()),
                None => {
                    if !(spec.pad_lo[j] < spec.pad_hi[j]) {
                        return Err(BoundingError::InvalidLift(format!(
                            "padding for x{} is not increasing",
                            spec.target_vars[j]
                        )));
                    }
                    axes.push(vec![spec.pad_lo[j], spec.pad_hi[j]]);
                }
            }
        }
        let grid = Grid::new(axes)?;
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let m = grid.multi_index(idx);
            let src: Vec<usize> = (0..n).filter_map(|j| src_axis[j].map(|_| m[j])).collect();
            let s = self.grid.index_of(&src);
            lower.push(self.lower[s]);
            upper.push(self.upper[s]);
        }
        BoundingSet::new(spec.target_vars.clone(), grid, lower, upper)
    }

    /// Inserts every coordinate of `q` into its axis; new grid points get
    /// values interpolated on `tri`.
    pub fn expand_and_interpolate(
        &self,
        tri: &Triangulation,
        q: &[f64],
    ) -> Result<BoundingSet, BoundingError> {
        if !self.grid.contains(q, DOMAIN_TOL) {
            return Err(BoundingError::Outside(q.to_vec()));
        }
        let grid = self.grid.expanded_by(q);
        if grid == self.grid {
            return Ok(self.clone());
        }
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for p in grid.points() {
            match self.grid.find_point(&p) {
                Some(i) => {
                    lower.push(self.lower[i]);
                    upper.push(self.upper[i]);
                }
                None => {
                    let (l, u) = self.bounds_with(tri, &p)?;
                    lower.push(l);
                    upper.push(u.max(l));
                }
            }
        }
        BoundingSet::new(self.vars.clone(), grid, lower, upper)
    }

    /// Inserts a single value into axis `axis`.
    fn insert_axis_value(&self, axis: usize, v: f64) -> Result<BoundingSet, BoundingError> {
        let mut q = self.grid.lower();
        q[axis] = v;
        self.expand_and_interpolate(&self.triangulate()?, &q)
    }

    fn same_domain(&self, other: &BoundingSet) -> bool {
        self.vars == other.vars && self.grid == other.grid
    }

    /// Pointwise composition of two sets over the same grid.
    pub fn compose(&self, other: &BoundingSet, op: TreeOp) -> Result<BoundingSet, BoundingError> {
        if !self.same_domain(other) {
            return Err(BoundingError::GridMismatch);
        }
        let (lower, upper) = match op {
            TreeOp::Add => (
                self.lower
                    .iter()
                    .zip(&other.lower)
                    .map(|(a, b)| inflate_down(a + b))
                    .collect(),
                self.upper
                    .iter()
                    .zip(&other.upper)
                    .map(|(a, b)| inflate_up(a + b))
                    .collect(),
            ),
            TreeOp::Sub => (
                self.lower
                    .iter()
                    .zip(&other.upper)
                    .map(|(a, b)| inflate_down(a - b))
                    .collect(),
                self.upper
                    .iter()
                    .zip(&other.lower)
                    .map(|(a, b)| inflate_up(a - b))
                    .collect(),
            ),
            TreeOp::Mul => return self.multiply(other),
            TreeOp::Div => return self.multiply(&other.reciprocal()?),
        };
        BoundingSet::new(self.vars.clone(), self.grid.clone(), lower, upper)
    }

    /// For each point, the maximum of `per_cell` over the cells having it as a corner.
    fn max_over_adjacent_cells(&self, per_cell: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.grid.len()];
        for (c, &e) in per_cell.iter().enumerate() {
            for p in self.grid.cell_corners(&self.grid.cell_multi(c)) {
                out[p] = out[p].max(e);
            }
        }
        out
    }

    /// Spreads `(max L - min L, max U - min U)` over a cell, plus `min U`, `max U`.
    fn cell_spreads(&self, c: usize) -> ([f64; 2], f64, f64) {
        let corners = self.grid.cell_corners(&self.grid.cell_multi(c));
        let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in corners {
            lmin = lmin.min(self.lower[p]);
            lmax = lmax.max(self.lower[p]);
            umin = umin.min(self.upper[p]);
            umax = umax.max(self.upper[p]);
        }
        ([lmax - lmin, umax - umin], umin, umax)
    }

    fn multiply(&self, other: &BoundingSet) -> Result<BoundingSet, BoundingError> {
        let n = self.dim();
        let mut lower = Vec::with_capacity(self.grid.len());
        let mut upper = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.len() {
            let products = [
                self.lower[i] * other.lower[i],
                self.lower[i] * other.upper[i],
                self.upper[i] * other.lower[i],
                self.upper[i] * other.upper[i],
            ];
            lower.push(products.iter().copied().fold(f64::INFINITY, f64::min));
            upper.push(products.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        // For h1 in {L^f, U^f} and h2 in {L^g, U^g}, interpolating h1*h2 over
        // a simplex differs from the product of the interpolants by at most
        // n/(2(n+1)) * spread(h1) * spread(h2).
        if n > 0 {
            let factor = n as f64 / (2.0 * (n as f64 + 1.0));
            let per_cell: Vec<f64> = (0..self.grid.cell_count())
                .map(|c| {
                    let (sf, _, _) = self.cell_spreads(c);
                    let (sg, _, _) = other.cell_spreads(c);
                    factor
                        * sf.iter()
                            .flat_map(|a| sg.iter().map(move |b| a * b))
                            .fold(0.0, f64::max)
                })
                .collect();
            let e = self.max_over_adjacent_cells(&per_cell);
            for i in 0..lower.len() {
                lower[i] -= e[i];
                upper[i] += e[i];
            }
        }
        let lower = lower.into_iter().map(inflate_down).collect();
        let upper = upper.into_iter().map(inflate_up).collect();
        BoundingSet::new(self.vars.clone(), self.grid.clone(), lower, upper)
    }

    /// Bounds for `1/g`; the bounds of `g` must not straddle zero.
    pub fn reciprocal(&self) -> Result<BoundingSet, BoundingError> {
        let positive = self.lower.iter().all(|&l| l > 0.0);
        let negative = self.upper.iter().all(|&u| u < 0.0);
        if !positive && !negative {
            let i = (0..self.grid.len())
                .find(|&i| self.lower[i] <= 0.0 && self.upper[i] >= 0.0)
                .or_else(|| (0..self.grid.len()).find(|&i| self.lower[i] <= 0.0))
                .unwrap_or(0);
            return Err(BoundingError::DivisionByZero(self.grid.point_at(i)));
        }
        if negative {
            // 1/g = -(1/(-g))
            let neg = BoundingSet {
                vars: self.vars.clone(),
                grid: self.grid.clone(),
                lower: self.upper.iter().map(|u| -u).collect(),
                upper: self.lower.iter().map(|l| -l).collect(),
            };
            let r = neg.reciprocal()?;
            return BoundingSet::new(
                r.vars,
                r.grid,
                r.upper.iter().map(|u| -u).collect(),
                r.lower.iter().map(|l| -l).collect(),
            );
        }
        // 1/t is convex and decreasing: 1/L is an upper envelope, and the
        // lower values are pulled down by the spread of 1/U on each cell.
        let upper: Vec<f64> = self.lower.iter().map(|l| inflate_up(1.0 / l)).collect();
        let per_cell: Vec<f64> = (0..self.grid.cell_count())
            .map(|c| {
                let (_, umin, umax) = self.cell_spreads(c);
                1.0 / umin - 1.0 / umax
            })
            .collect();
        let e = if self.dim() > 0 {
            self.max_over_adjacent_cells(&per_cell)
        } else {
            vec![0.0]
        };
        let lower: Vec<f64> = self
            .upper
            .iter()
            .zip(&e)
            .map(|(u, e)| inflate_down(1.0 / u - e))
            .collect();
        BoundingSet::new(self.vars.clone(), self.grid.clone(), lower, upper)
    }
}

/// Brings two sets onto the union of their variables and the union of their
/// axis values. Missing axes are padded with the other set's axis extremes;
/// values are inserted one at a time with re-triangulation in between.
pub fn align_domains(
    bf: &BoundingSet,
    bg: &BoundingSet,
) -> Result<(BoundingSet, BoundingSet), BoundingError> {
    if bf.same_domain(bg) {
        return Ok((bf.clone(), bg.clone()));
    }
    let mut target: Vec<usize> = bf.vars.iter().chain(&bg.vars).copied().collect();
    target.sort_unstable();
    target.dedup();
    let extremes = |v: usize| -> (f64, f64) {
        for b in [bf, bg] {
            if let Some(a) = b.vars.iter().position(|&x| x == v) {
                let axis = b.grid.axis(a);
                return (axis[0], axis[axis.len() - 1]);
            }
        }
        unreachable!("variable comes from one of the sets")
    };
    let (pad_lo, pad_hi): (Vec<f64>, Vec<f64>) = target.iter().map(|&v| extremes(v)).unzip();
    let spec = LiftSpec {
        target_vars: target,
        pad_lo,
        pad_hi,
    };
    let mut f = bf.lift(&spec)?;
    let mut g = bg.lift(&spec)?;
    for axis in 0..spec.target_vars.len() {
        let gv = g.grid.axis(axis).to_vec();
        for v in gv {
            if f.grid.axis_position(axis, v).is_none() {
                f = f.insert_axis_value(axis, v)?;
            }
        }
        let fv = f.grid.axis(axis).to_vec();
        for v in fv {
            if g.grid.axis_position(axis, v).is_none() {
                g = g.insert_axis_value(axis, v)?;
            }
        }
    }
    // identical axes up to the dedup tolerance: share one representation
    if f.grid != g.grid {
        if f.grid.shape() != g.grid.shape() {
            return Err(BoundingError::GridMismatch);
        }
        g.grid = f.grid.clone();
    }
    Ok((f, g))
}

fn leaf_bound(
    e: &Expr,
    bx: &[Interval],
    opts: &BoundOptions,
) -> Result<BoundingSet, BoundingError> {
    if let Some(c) = e.as_const() {
        return Ok(BoundingSet::constant(c));
    }
    match e.univariate_var() {
        Some(v) => {
            let iv = *bx
                .get(v - 1)
                .ok_or_else(|| BoundingError::Outside(vec![]))?;
            if iv.width() > 0.0 {
                bound_univariate(e, iv.lo, iv.hi, &opts.univariate)
            } else {
                // degenerate axis: the value is a constant up to rounding
                let r = e.interval_scalar(iv)?;
                let c = BoundingSet {
                    vars: Vec::new(),
                    grid: Grid::point(),
                    lower: vec![r.lo],
                    upper: vec![r.hi],
                };
                Ok(c)
            }
        }
        None => {
            // constant expression without a literal value, e.g. sin(0.5)
            let r = e.interval_evaluate(&[])?;
            Ok(BoundingSet {
                vars: Vec::new(),
                grid: Grid::point(),
                lower: vec![r.lo],
                upper: vec![r.hi],
            })
        }
    }
}

/// Bottom-up bounding of a syntax tree over a box (`bx[i-1]` bounds `xi`).
pub fn bound_expression(
    tree: &SyntaxTree,
    bx: &[Interval],
    opts: &BoundOptions,
) -> Result<BoundingSet, BoundingError> {
    match tree {
        SyntaxTree::Leaf(e) => leaf_bound(e, bx, opts),
        SyntaxTree::Opaque(e) => Err(BoundingError::UnsupportedOperator(e.to_string())),
        SyntaxTree::Node { op, children, .. } => {
            let mut acc = bound_expression(&children[0], bx, opts)?;
            for child in &children[1..] {
                let next = bound_expression(child, bx, opts)?;
                let (a, b) = align_domains(&acc, &next)?;
                acc = a.compose(&b, *op)?;
            }
            Ok(acc)
        }
    }
}

/// Convenience wrapper: decompose and bound an expression.
pub fn bound_expr(
    e: &Expr,
    bx: &[Interval],
    opts: &BoundOptions,
) -> Result<BoundingSet, BoundingError> {
    bound_expression(&decompose_to_syntax_tree(e), bx, opts)
}

/// Samples `dom(B)` uniformly and checks the interpolated bounds against `f`.
pub fn check_enclosure_sampled(
    b: &BoundingSet,
    f: &Expr,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<EnclosureReport, BoundingError> {
    if let Some(v) = f.vars().iter().find(|v| !b.vars.contains(v)) {
        return Err(BoundingError::InvalidLift(format!(
            "x{v} is not an axis of the bounding set"
        )));
    }
    let tri = b.triangulate()?;
    let width = b
        .vars
        .iter()
        .copied()
        .chain(f.vars().iter())
        .max()
        .unwrap_or(0);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut report = EnclosureReport {
        samples,
        failures: 0,
        max_violation: 0.0,
        worst_point: None,
    };
    let (lo, hi) = (b.grid.lower(), b.grid.upper());
    let mut full = vec![0.0; width];
    for _ in 0..samples {
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if l < h { rng.gen_range(*l..=*h) } else { *l })
            .collect();
        for (a, &v) in b.vars.iter().enumerate() {
            full[v - 1] = x[a];
        }
        let fx = f.evaluate(&full)?;
        let (l, u) = b.bounds_with(&tri, &x)?;
        let violation = (l - fx).max(fx - u);
        if violation > tol {
            report.failures += 1;
        }
        if violation > report.max_violation {
            report.max_violation = violation;
            report.worst_point = Some(x);
        }
    }
    Ok(report)
}
