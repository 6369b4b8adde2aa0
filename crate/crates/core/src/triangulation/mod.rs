//! Delaunay triangulations of point sets and grids, with point location.
//!
//! Ties between cospherical points are broken by a symbolic perturbation of
//! the lifted heights keyed to point index, so every input has exactly one
//! triangulation. For grids the Delaunay subdivision is the set of box cells,
//! and the perturbed refinement of a cell depends only on the order of its
//! corners, which is the same in every cell. The refinement is computed once
//! on the unit cube and instantiated per cell.

mod predicates;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

pub use predicates::{in_sphere_sos, insphere_raw, orient, robust_det};

use crate::grid::Grid;

/// Largest supported dimension.
pub const MAX_DIM: usize = 6;
/// Slack for barycentric containment tests.
pub const LOCATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriangulationError {
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionCap(usize),
    #[error("point set is not full-dimensional")]
    Degenerate,
    #[error("duplicate point at index {0}")]
    Duplicate(usize),
    #[error("point {0:?} lies outside the triangulated domain")]
    Outside(Vec<f64>),
    #[error("triangulation failed: {0}")]
    Failed(String),
}

/// A finite point set, optionally carrying grid structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    grid: Option<Grid>,
}

impl PointSet {
    pub fn from_points(dim: usize, points: Vec<Vec<f64>>) -> PointSet {
        assert!(
            points.iter().all(|p| p.len() == dim),
            "point dimension mismatch"
        );
        PointSet {
            dim,
            points,
            grid: None,
        }
    }

    pub fn from_grid(grid: &Grid) -> PointSet {
        PointSet {
            dim: grid.dim(),
            points: grid.points(),
            grid: Some(grid.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }
}

/// Barycentric coordinates of a point in a located simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Barycentric {
    pub simplex: usize,
    pub theta: Vec<f64>,
}

/// A triangulation of a point set by n-simplices.
#[derive(Debug)]
pub struct Triangulation {
    points: PointSet,
    simplices: Vec<Vec<usize>>,
    neighbors: Vec<Vec<Option<usize>>>,
    inverse: Vec<Vec<f64>>,
    per_cell: usize,
    hint: AtomicUsize,
}

impl Clone for Triangulation {
    fn clone(&self) -> Self {
        Triangulation {
            points: self.points.clone(),
            simplices: self.simplices.clone(),
            neighbors: self.neighbors.clone(),
            inverse: self.inverse.clone(),
            per_cell: self.per_cell,
            hint: AtomicUsize::new(self.hint.load(Ordering::Relaxed)),
        }
    }
}

/// Builds the Delaunay triangulation of a full-dimensional point set.
pub fn delaunay_triangulate(ps: &PointSet) -> Result<Triangulation, TriangulationError> {
    let n = ps.dim();
    if n > MAX_DIM {
        return Err(TriangulationError::DimensionCap(n));
    }
    if n == 0 {
        if ps.len() != 1 {
            return Err(TriangulationError::Degenerate);
        }
        return Ok(Triangulation::assemble(ps.clone(), vec![vec![0]], 0));
    }
    if let Some(grid) = ps.grid() {
        // the perturbed refinement of a box depends only on corner order
        let pattern = cube_pattern(n);
        let mut simplices = Vec::with_capacity(grid.cell_count() * pattern.len());
        for c in 0..grid.cell_count() {
            let corners = grid.cell_corners(&grid.cell_multi(c));
            for s in pattern.iter() {
                simplices.push(s.iter().map(|&b| corners[b]).collect());
            }
        }
        return Ok(Triangulation::assemble(
            ps.clone(),
            simplices,
            pattern.len(),
        ));
    }
    validate_points(ps)?;
    let simplices = bowyer_watson(&normalize_uniform(ps.points()))?;
    Ok(Triangulation::assemble(ps.clone(), simplices, 0))
}

fn validate_points(ps: &PointSet) -> Result<(), TriangulationError> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, p) in ps.points().iter().enumerate() {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(TriangulationError::Failed(format!("non-finite point {i}")));
        }
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key, i).is_some() {
            return Err(TriangulationError::Duplicate(i));
        }
    }
    if ps.len() < ps.dim() + 1 {
        return Err(TriangulationError::Degenerate);
    }
    Ok(())
}

fn normalize_uniform(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points[0].len();
    let lo: Vec<f64> = (0..n)
        .map(|i| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let span = (0..n)
        .map(|i| points.iter().map(|p| p[i] - lo[i]).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    points
        .iter()
        .map(|p| p.iter().zip(&lo).map(|(v, l)| (v - l) / span).collect())
        .collect()
}

/// The perturbation-canonical triangulation of the unit n-cube, as lists of
/// corner numbers (corner `b` has coordinate `i` equal to bit `n-1-i` of `b`).
fn cube_pattern(n: usize) -> Arc<Vec<Vec<usize>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Vec<usize>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().expect("pattern cache").get(&n) {
        return p.clone();
    }
    let corners: Vec<Vec<f64>> = (0..1usize << n)
        .map(|b| (0..n).map(|i| ((b >> (n - 1 - i)) & 1) as f64).collect())
        .collect();
    let pattern = Arc::new(bowyer_watson(&corners).expect("unit cube triangulates"));
    cache
        .lock()
        .expect("pattern cache")
        .insert(n, pattern.clone());
    pattern
}

/// Incremental Bowyer–Watson on points normalized into the unit box.
/// Simplices are returned with sorted vertex lists.
fn bowyer_watson(points: &[Vec<f64>]) -> Result<Vec<Vec<usize>>, TriangulationError> {
    let mut scale = 1e3;
    loop {
        let simplices = bowyer_watson_with(points, scale)?;
        if hull_is_convex(points, &simplices) {
            return Ok(simplices);
        }
        scale *= 100.0;
        if scale > 1e12 {
            return Err(TriangulationError::Failed(
                "boundary simplices missing".into(),
            ));
        }
    }
}

fn bowyer_watson_with(points: &[Vec<f64>], k: f64) -> Result<Vec<Vec<usize>>, TriangulationError> {
    let n = points[0].len();
    let count = points.len();
    let mut all: Vec<Vec<f64>> = points.to_vec();
    let base: Vec<f64> = vec![0.5 - k; n];
    all.push(base.clone());
    for i in 0..n {
        let mut v = base.clone();
        v[i] += k * (n as f64 + 1.0);
        all.push(v);
    }
    let mut alive: Vec<Vec<usize>> = vec![(count..count + n + 1).collect()];
    for p in 0..count {
        let mut bad = Vec::new();
        let mut keep = Vec::with_capacity(alive.len());
        for s in alive.drain(..) {
            let verts: Vec<&[f64]> = s.iter().map(|&v| all[v].as_slice()).collect();
            if in_sphere_sos(&verts, &s, &all[p], p) {
                bad.push(s);
            } else {
                keep.push(s);
            }
        }
        alive = keep;
        if bad.is_empty() {
            return Err(TriangulationError::Failed(format!(
                "point {p} has an empty cavity"
            )));
        }
        let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in &bad {
            for skip in 0..=n {
                let f: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *facets.entry(f).or_insert(0) += 1;
            }
        }
        let mut boundary: Vec<Vec<usize>> = facets
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| f)
            .collect();
        boundary.sort();
        for mut f in boundary {
            f.push(p);
            f.sort_unstable();
            let verts: Vec<&[f64]> = f.iter().map(|&v| all[v].as_slice()).collect();
            if orient(&verts) == 0 {
                return Err(TriangulationError::Degenerate);
            }
            alive.push(f);
        }
    }
    let mut out: Vec<Vec<usize>> = alive
        .into_iter()
        .filter(|s| s.iter().all(|&v| v < count))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(TriangulationError::Degenerate);
    }
    Ok(out)
}

/// Checks that interior facets separate their two simplices and that every
/// boundary facet supports all points.
fn hull_is_convex(points: &[Vec<f64>], simplices: &[Vec<usize>]) -> bool {
    let n = points[0].len();
    let mut facets: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
    for s in simplices {
        for skip in 0..=n {
            let f: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect();
            match facets.get_mut(&f) {
                Some(e) if e.0 == 1 => {
                    let mut verts: Vec<&[f64]> = f.iter().map(|&v| points[v].as_slice()).collect();
                    verts.push(&points[e.1]);
                    let a = orient(&verts);
                    *verts.last_mut().expect("apex slot") = &points[s[skip]];
                    if a == orient(&verts) {
                        return false;
                    }
                    e.0 = 2;
                }
                Some(_) => return false,
                None => {
                    facets.insert(f, (1, s[skip]));
                }
            }
        }
    }
    let used: std::collections::HashSet<usize> = simplices.iter().flatten().copied().collect();
    if used.len() != points.len() {
        return false;
    }
    for (f, (count, apex)) in facets {
        if count != 1 {
            continue;
        }
        let mut verts: Vec<&[f64]> = f.iter().map(|&v| points[v].as_slice()).collect();
        verts.push(&points[apex]);
        let inner = orient(&verts);
        for (i, p) in points.iter().enumerate() {
            if f.contains(&i) {
                continue;
            }
            *verts.last_mut().expect("apex slot") = p;
            let o = orient(&verts);
            if o != 0 && o != inner {
                return false;
            }
        }
    }
    true
}

fn invert(m: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(p, c);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c];
                for k in 0..2 * n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some(a.iter().flat_map(|r| r[n..].to_vec()).collect())
}

impl Triangulation {
    fn assemble(points: PointSet, simplices: Vec<Vec<usize>>, per_cell: usize) -> Triangulation {
        let n = points.dim();
        let mut neighbors = vec![vec![None; n + 1]; simplices.len()];
        if n > 0 {
            let mut facets: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
            for (si, s) in simplices.iter().enumerate() {
                for skip in 0..=n {
                    let f: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    if let Some((other, oskip)) = facets.remove(&f) {
                        neighbors[si][skip] = Some(other);
                        neighbors[other][oskip] = Some(si);
                    } else {
                        facets.insert(f, (si, skip));
                    }
                }
            }
        }
        let inverse = simplices
            .iter()
            .map(|s| {
                let v0 = points.point(s[0]);
                // columns are v_k - v_0; stored as rows of the transpose
                let cols: Vec<Vec<f64>> = (0..n)
                    .map(|r| (1..=n).map(|k| points.point(s[k])[r] - v0[r]).collect())
                    .collect();
                invert(&cols).unwrap_or_else(|| vec![f64::NAN; n * n])
            })
            .collect();
        Triangulation {
            points,
            simplices,
            neighbors,
            inverse,
            per_cell,
            hint: AtomicUsize::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Neighbor across the facet opposite each vertex.
    pub fn neighbors(&self, s: usize) -> &[Option<usize>] {
        &self.neighbors[s]
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Coordinates of the simplex's vertices.
    pub fn vertices(&self, s: usize) -> Vec<&[f64]> {
        self.simplices[s]
            .iter()
            .map(|&v| self.points.point(v))
            .collect()
    }

    /// Unsigned volume of a simplex.
    pub fn volume(&self, s: usize) -> f64 {
        let n = self.dim();
        let v = self.vertices(s);
        let rows: Vec<Vec<f64>> = (1..=n)
            .map(|k| v[k].iter().zip(v[0]).map(|(a, b)| a - b).collect())
            .collect();
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        robust_det(&rows).abs() / fact
    }

    /// For each point, the simplices having it as a vertex.
    pub fn vertex_simplices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.points.len()];
        for (si, s) in self.simplices.iter().enumerate() {
            for &v in s {
                out[v].push(si);
            }
        }
        out
    }

    /// Barycentric coordinates of `x` with respect to simplex `s`.
    pub fn barycentric_in(&self, s: usize, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let v0 = self.points.point(self.simplices[s][0]);
        let inv = &self.inverse[s];
        let d: Vec<f64> = x.iter().zip(v0).map(|(a, b)| a - b).collect();
        let mut theta = vec![0.0; n + 1];
        for k in 0..n {
            theta[k + 1] = (0..n).map(|j| inv[k * n + j] * d[j]).sum();
        }
        theta[0] = 1.0 - theta[1..].iter().sum::<f64>();
        theta
    }

    fn accept(theta: Vec<f64>, s: usize) -> Barycentric {
        let mut theta: Vec<f64> = theta.into_iter().map(|t| t.max(0.0)).collect();
        let sum: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|t| *t /= sum);
        Barycentric { simplex: s, theta }
    }

    fn min_theta(theta: &[f64]) -> f64 {
        theta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Locates `x` and returns its barycentric coordinates. Points on shared
    /// faces resolve to the lowest-index containing simplex.
    pub fn locate(&self, x: &[f64]) -> Result<Barycentric, TriangulationError> {
        let n = self.dim();
        if n == 0 {
            return Ok(Barycentric {
                simplex: 0,
                theta: vec![1.0],
            });
        }
        if let Some(grid) = self.points.grid() {
            if !grid.contains(x, LOCATE_TOL) {
                return Err(TriangulationError::Outside(x.to_vec()));
            }
            let mut best: Option<(usize, Vec<f64>)> = None;
            let mut fallback: Option<(f64, usize, Vec<f64>)> = None;
            for cell in grid.cells_containing(x, LOCATE_TOL) {
                let c = grid.cell_index(&cell);
                for s in c * self.per_cell..(c + 1) * self.per_cell {
                    let theta = self.barycentric_in(s, x);
                    let m = Triangulation::min_theta(&theta);
                    if m >= -LOCATE_TOL {
                        if best.as_ref().map_or(true, |b| s < b.0) {
                            best = Some((s, theta));
                        }
                    } else if fallback.as_ref().map_or(true, |f| m > f.0) {
                        fallback = Some((m, s, theta));
                    }
                }
            }
            return match (best, fallback) {
                (Some((s, t)), _) => Ok(Triangulation::accept(t, s)),
                (None, Some((m, s, t))) if m >= -1e-6 => Ok(Triangulation::accept(t, s)),
                _ => Err(TriangulationError::Outside(x.to_vec())),
            };
        }
        let found = self.walk(x).or_else(|| self.scan(x));
        match found {
            Some((s, theta)) => {
                self.hint.store(s, Ordering::Relaxed);
                if Triangulation::min_theta(&theta) <= LOCATE_TOL {
                    // on a shared face: take the lowest containing index
                    if let Some((s2, t2)) = self.scan(x) {
                        return Ok(Triangulation::accept(t2, s2));
                    }
                }
                Ok(Triangulation::accept(theta, s))
            }
            None => Err(TriangulationError::Outside(x.to_vec())),
        }
    }

    fn walk(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut s = self
            .hint
            .load(Ordering::Relaxed)
            .min(self.simplices.len() - 1);
        for _ in 0..self.simplices.len() + 8 {
            let theta = self.barycentric_in(s, x);
            let (k, m) = theta
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            if m >= -LOCATE_TOL {
                return Some((s, theta));
            }
            s = self.neighbors[s][k]?;
        }
        None
    }

    fn scan(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        (0..self.simplices.len()).find_map(|s| {
            let theta = self.barycentric_in(s, x);
            (Triangulation::min_theta(&theta) >= -LOCATE_TOL).then_some((s, theta))
        })
    }
}

/// Points of a grid sharing at least one coordinate with `q`.
pub fn grid_star(grid: &Grid, q: &[f64]) -> Result<Vec<Vec<f64>>, TriangulationError> {
    grid.star(q)
        .map(|idx| idx.into_iter().map(|i| grid.point_at(i)).collect())
        .ok_or_else(|| TriangulationError::Outside(q.to_vec()))
}
