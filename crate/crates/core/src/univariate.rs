//! Piecewise-linear bounds for univariate functions.
//!
//! The interval is split where the second derivative changes sign. On a
//! convex piece the upper bound is a chain of chords and the lower bound a
//! chain of tangent segments; concave pieces swap the roles. Breakpoints are
//! placed by coordinate descent on the area between the bound and the function.

use crate::bounding::{BoundingError, BoundingSet};
use crate::expr::{find_sign_changes, Expr, ExprError, Interval, DEFAULT_ROOT_TOL};
use crate::grid::{normalize_axis, Grid};

pub const DEFAULT_DIVISIONS: usize = 2;
/// Convexity pieces narrower than this are absorbed into a neighbor.
pub const MIN_PIECE: f64 = 1e-8;
/// Number of chords used when the sign pattern of `f''` cannot be resolved.
const FALLBACK_CHORDS: usize = 32;
const MAX_DESCENT_ROUNDS: usize = 50;
const GOLDEN_ITERS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Subintervals of uniform convexity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityPartition {
    /// `z_0 = a < z_1 < ... < z_m = b`.
    pub points: Vec<f64>,
    pub tags: Vec<Convexity>,
    /// Extra inflation per piece covering root brackets and absorbed slivers.
    pub slack: Vec<f64>,
}

impl ConvexityPartition {
    pub fn pieces(&self) -> usize {
        self.tags.len()
    }

    pub fn piece(&self, i: usize) -> Interval {
        Interval::new(self.points[i], self.points[i + 1])
    }
}

/// The piecewise-linear function through `(s_i, t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlBound {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PwlBound {
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.breakpoints;
        let k = s.partition_point(|&v| v <= x).clamp(1, s.len() - 1);
        let (x0, x1) = (s[k - 1], s[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        y0 + t * (y1 - y0)
    }

    /// Exact integral of the interpolant.
    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(s, t)| 0.5 * (s[1] - s[0]) * (t[0] + t[1]))
            .sum()
    }

    fn negated(mut self) -> PwlBound {
        self.values.iter_mut().for_each(|v| *v = -*v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnivariateError {
    #[error("expression is not univariate: {0}")]
    NotUnivariate(String),
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("non-finite value at x = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateOptions {
    pub divisions: usize,
    /// Fixed safety inflation; `None` selects `1e-9 * (1 + max |f|)` over breakpoints.
    pub eps_num: Option<f64>,
}

impl Default for UnivariateOptions {
    fn default() -> Self {
        UnivariateOptions {
            divisions: DEFAULT_DIVISIONS,
            eps_num: None,
        }
    }
}

/// A univariate expression with its first two derivatives.
struct Scalar {
    f: Expr,
    df: Expr,
    d2f: Expr,
}

impl Scalar {
    fn new(f: &Expr) -> Result<Scalar, UnivariateError> {
        if f.vars().len() > 1 {
            return Err(UnivariateError::NotUnivariate(f.to_string()));
        }
        let v = f.univariate_var().unwrap_or(1);
        let df = f.differentiate(v);
        let d2f = df.differentiate(v);
        Ok(Scalar {
            f: f.clone(),
            df,
            d2f,
        })
    }

    fn f(&self, x: f64) -> Result<f64, UnivariateError> {
        let v = self.f.eval_scalar(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(UnivariateError::NonFinite(x))
        }
    }

    fn df(&self, x: f64) -> Result<f64, UnivariateError> {
        let v = self.df.eval_scalar(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(UnivariateError::NonFinite(x))
        }
    }
}

fn classify(d2f: &Expr, a: f64, b: f64) -> Result<Convexity, UnivariateError> {
    let mut best = 0.0f64;
    for k in 1..8 {
        let x = a + (b - a) * k as f64 / 8.0;
        let v = d2f.eval_scalar(x)?;
        if v.abs() > best.abs() {
            best = v;
        }
    }
    Ok(if best > 0.0 {
        Convexity::Convex
    } else if best < 0.0 {
        Convexity::Concave
    } else {
        Convexity::Linear
    })
}

/// Splits `[a, b]` at the sign changes of `f''`.
pub fn convexity_partition(
    f: &Expr,
    a: f64,
    b: f64,
) -> Result<ConvexityPartition, UnivariateError> {
    if !(a < b) {
        return Err(UnivariateError::EmptyInterval(a, b));
    }
    let s = Scalar::new(f)?;
    let sc = match find_sign_changes(&s.d2f, Interval::new(a, b), DEFAULT_ROOT_TOL) {
        Ok(sc) => sc,
        // f'' hovers at zero beyond what intervals can resolve (e.g. after
        // cancellation); chords with the interpolation error bound are sound,
        // and short chords keep the interval estimate of f'' from blowing up
        Err(ExprError::RootCluster { .. }) => {
            let pieces = (((b - a) / MIN_PIECE) as usize).clamp(1, FALLBACK_CHORDS);
            let points: Vec<f64> = (0..=pieces)
                .map(|k| {
                    if k == pieces {
                        b
                    } else {
                        a + (b - a) * k as f64 / pieces as f64
                    }
                })
                .collect();
            let mut slack = Vec::with_capacity(pieces);
            for w in points.windows(2) {
                let m = s.d2f.interval_scalar(Interval::new(w[0], w[1]))?.mag();
                if !m.is_finite() {
                    return Err(UnivariateError::NonFinite(w[0]));
                }
                slack.push(m * (w[1] - w[0]) * (w[1] - w[0]) / 8.0);
            }
            return Ok(ConvexityPartition {
                points,
                tags: vec![Convexity::Linear; pieces],
                slack,
            });
        }
        Err(e) => return Err(e.into()),
    };
    if sc.identically_zero {
        return Ok(ConvexityPartition {
            points: vec![a, b],
            tags: vec![Convexity::Linear],
            slack: vec![0.0],
        });
    }
    // (position, uncertainty width) of each kept boundary
    let mut interior: Vec<(f64, f64)> = Vec::new();
    let (mut left_h, mut right_h) = (0.0, 0.0);
    for r in &sc.roots {
        let h = r.bracket.width();
        if r.x - a < MIN_PIECE {
            left_h += (r.x - a) + h;
        } else if b - r.x < MIN_PIECE {
            right_h += (b - r.x) + h;
        } else {
            match interior.last_mut() {
                Some(last) if r.x - last.0 < MIN_PIECE => last.1 += (r.x - last.0) + h,
                _ => interior.push((r.x, h)),
            }
        }
    }
    let mut cuts = vec![(a, left_h)];
    cuts.extend(interior);
    cuts.push((b, right_h));
    let mut points = Vec::with_capacity(cuts.len());
    let mut tags = Vec::with_capacity(cuts.len() - 1);
    let mut slack = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0].0, w[1].0);
        points.push(lo);
        let tag = classify(&s.d2f, lo, hi)?;
        let m = s
            .d2f
            .interval_scalar(Interval::new(lo, hi))
            .map(|i| i.mag())
            .unwrap_or(f64::INFINITY);
        let h = w[0].1 + w[1].1;
        let width = hi - lo;
        let mut sl = if h > 0.0 { m * h * (width + h) } else { 0.0 };
        if tag == Convexity::Linear {
            sl += m * width * width / 8.0;
        }
        tags.push(tag);
        slack.push(sl);
    }
    points.push(b);
    Ok(ConvexityPartition {
        points,
        tags,
        slack,
    })
}

fn chord(s: &Scalar, xs: &[f64], sign: f64) -> Result<PwlBound, UnivariateError> {
    let values = xs
        .iter()
        .map(|&x| s.f(x).map(|v| sign * v))
        .collect::<Result<_, _>>()?;
    Ok(PwlBound {
        breakpoints: xs.to_vec(),
        values,
    })
}

/// Tangent chain below the convex function `sign * f`, with tangent points
/// at the ends and at the midpoints of the partition `xs`.
fn tangents(s: &Scalar, xs: &[f64], sign: f64) -> Result<PwlBound, UnivariateError> {
    let (a, b) = (xs[0], xs[xs.len() - 1]);
    let mut tau = vec![a];
    tau.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    tau.push(b);
    let mut lines = Vec::with_capacity(tau.len());
    for &t in &tau {
        lines.push((t, sign * s.f(t)?, sign * s.df(t)?));
    }
    let line = |j: usize, x: f64| lines[j].1 + lines[j].2 * (x - lines[j].0);
    let mut bx = vec![a];
    let mut bv = vec![lines[0].1];
    for j in 0..lines.len() - 1 {
        let (t0, t1) = (lines[j].0, lines[j + 1].0);
        let dm = lines[j].2 - lines[j + 1].2;
        let mut x = (lines[j + 1].1 - lines[j].1 + lines[j].2 * t0 - lines[j + 1].2 * t1) / dm;
        if !x.is_finite() {
            x = 0.5 * (t0 + t1);
        }
        let x = x.clamp(t0, t1);
        let v = line(j, x).min(line(j + 1, x));
        if x <= *bx.last().expect("nonempty") {
            let last = bv.last_mut().expect("nonempty");
            *last = last.min(v);
        } else {
            bx.push(x);
            bv.push(v);
        }
    }
    let vb = lines[lines.len() - 1].1;
    if b <= *bx.last().expect("nonempty") {
        let last = bv.last_mut().expect("nonempty");
        *last = last.min(vb);
    } else {
        bx.push(b);
        bv.push(vb);
    }
    Ok(PwlBound {
        breakpoints: bx,
        values: bv,
    })
}

/// Builds the side of the bound for `sign * f`, assumed convex.
/// `chords` selects the chord chain (upper) or tangent chain (lower).
fn build(s: &Scalar, xs: &[f64], sign: f64, chords: bool) -> Result<PwlBound, UnivariateError> {
    if chords {
        chord(s, xs, sign)
    } else {
        tangents(s, xs, sign)
    }
}

/// Optimizes interior breakpoints to minimize the area between the bound and
/// `sign * f`. Since the integral of f is fixed, this is the integral of the
/// bound itself (minimized for chords, maximized for tangents).
fn optimize(
    s: &Scalar,
    a: f64,
    b: f64,
    k: usize,
    sign: f64,
    chords: bool,
) -> Result<PwlBound, UnivariateError> {
    let mut xs: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
    xs[k] = b;
    let cost = |xs: &[f64]| -> Result<f64, UnivariateError> {
        let i = build(s, xs, sign, chords)?.integral();
        Ok(if chords { i } else { -i })
    };
    let mut current = cost(&xs)?;
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..MAX_DESCENT_ROUNDS {
        let before = current;
        for i in 1..k {
            let (mut lo, mut hi) = (xs[i - 1], xs[i + 1]);
            let mut trial = xs.clone();
            let mut eval = |x: f64| -> Result<f64, UnivariateError> {
                trial[i] = x;
                cost(&trial)
            };
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let (mut fc, mut fd) = (eval(c)?, eval(d)?);
            for _ in 0..GOLDEN_ITERS {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = eval(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = eval(d)?;
                }
            }
            let (x, v) = if fc < fd { (c, fc) } else { (d, fd) };
            if v < current && x > xs[i - 1] && x < xs[i + 1] {
                xs[i] = x;
                current = v;
            }
        }
        if before - current <= 1e-15 * (1.0 + current.abs()) {
            break;
        }
    }
    build(s, &xs, sign, chords)
}

/// Bound on one side of a piece where `f` is convex or concave.
pub fn bound_convex_piece(
    f: &Expr,
    piece: Interval,
    k: usize,
    side: Side,
) -> Result<PwlBound, UnivariateError> {
    let s = Scalar::new(f)?;
    let tag = classify(&s.d2f, piece.lo, piece.hi)?;
    piece_bound(&s, piece, k.max(1), side, tag)
}

fn piece_bound(
    s: &Scalar,
    piece: Interval,
    k: usize,
    side: Side,
    tag: Convexity,
) -> Result<PwlBound, UnivariateError> {
    let (a, b) = (piece.lo, piece.hi);
    match tag {
        Convexity::Linear => chord(s, &[a, b], 1.0),
        Convexity::Convex => optimize(s, a, b, k, 1.0, side == Side::Upper),
        // -f is convex: the upper bound of f is minus the tangent chain of -f
        Convexity::Concave => Ok(optimize(s, a, b, k, -1.0, side == Side::Lower)?.negated()),
    }
}

/// One-dimensional bounding set enclosing `f` on `[a, b]`.
pub fn bound_univariate(
    f: &Expr,
    a: f64,
    b: f64,
    opts: &UnivariateOptions,
) -> Result<BoundingSet, BoundingError> {
    let (lower, upper) = univariate_bounds(f, a, b, opts)?;
    let axis = normalize_axis(
        lower
            .breakpoints
            .iter()
            .chain(&upper.breakpoints)
            .copied()
            .collect(),
    );
    let grid = Grid::new(vec![axis.clone()])?;
    let l = axis.iter().map(|&x| lower.eval(x)).collect();
    let u = axis.iter().map(|&x| upper.eval(x)).collect();
    BoundingSet::new(vec![f.univariate_var().unwrap_or(1)], grid, l, u)
}

/// Stitched, inflated lower and upper piecewise-linear bounds.
pub fn univariate_bounds(
    f: &Expr,
    a: f64,
    b: f64,
    opts: &UnivariateOptions,
) -> Result<(PwlBound, PwlBound), UnivariateError> {
    let part = convexity_partition(f, a, b)?;
    let s = Scalar::new(f)?;
    let k = opts.divisions.max(1);
    let mut lower = PwlBound {
        breakpoints: Vec::new(),
        values: Vec::new(),
    };
    let mut upper = lower.clone();
    let mut lower_slack = Vec::new();
    let mut upper_slack = Vec::new();
    for i in 0..part.pieces() {
        let piece = part.piece(i);
        for (out, sl, side) in [
            (&mut lower, &mut lower_slack, Side::Lower),
            (&mut upper, &mut upper_slack, Side::Upper),
        ] {
            let p = piece_bound(&s, piece, k, side, part.tags[i])?;
            for (j, (x, v)) in p.breakpoints.into_iter().zip(p.values).enumerate() {
                if j == 0 && !out.breakpoints.is_empty() {
                    // shared piece endpoint: keep the looser value
                    let last = out.values.len() - 1;
                    out.values[last] = if side == Side::Lower {
                        out.values[last].min(v)
                    } else {
                        out.values[last].max(v)
                    };
                    let prev: &mut f64 = sl.last_mut().expect("slack entry");
                    *prev = prev.max(part.slack[i]);
                    continue;
                }
                out.breakpoints.push(x);
                out.values.push(v);
                sl.push(part.slack[i]);
            }
        }
    }
    let eps = opts.eps_num.unwrap_or_else(|| {
        let m = lower
            .values
            .iter()
            .chain(&upper.values)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        1e-9 * (1.0 + m)
    });
    for (v, sl) in lower.values.iter_mut().zip(&lower_slack) {
        *v -= eps + sl;
    }
    for (v, sl) in upper.values.iter_mut().zip(&upper_slack) {
        *v += eps + sl;
    }
    Ok((lower, upper))
}
