//! Forward reachability: box successors from enclosure MILPs, windows of
//! symbolic steps, whole trajectories and reach-avoid verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounding::{bound_expr, BoundOptions, BoundingError, BoundingSet};
use crate::expr::{Expr, Interval};
use crate::milp::{
    encode_enclosure, encode_relu_network, propagate_preactivation_bounds, DependencyGraph,
    EncodeError, LayerBounds, MilpModel, ModelError, NeuralNetwork, Objective, VarId, Vertex,
};
use crate::solver::{
    solve_external, solve_milp_with, ExternalError, MilpOptions, MilpResult, MilpStatus,
};
use crate::triangulation::Triangulation;

/// Padding of every enclosure domain beyond the current box.
pub const DOMAIN_PAD: f64 = 1e-9;

/// Relative outward rounding applied to every solved bound.
pub const BOUND_PAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AvoidShape {
    Box(Vec<Interval>),
    /// The half-space `coeffs · x <= rhs`.
    HalfSpace {
        coeffs: Vec<f64>,
        rhs: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// The shape itself is unsafe.
    Inside,
    /// Everything outside the shape is unsafe.
    Outside,
}

/// Unsafe region active for steps `t_from..=t_to`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidRegion {
    pub t_from: usize,
    pub t_to: usize,
    pub shape: AvoidShape,
    pub polarity: Polarity,
}

impl AvoidRegion {
    /// Whether the box meets the unsafe set.
    pub fn meets(&self, bx: &[Interval]) -> bool {
        match (&self.shape, self.polarity) {
            (AvoidShape::Box(r), Polarity::Inside) => {
                bx.iter().zip(r).all(|(a, b)| a.lo <= b.hi && b.lo <= a.hi)
            }
            (AvoidShape::Box(r), Polarity::Outside) => {
                bx.iter().zip(r).any(|(a, b)| a.lo < b.lo || a.hi > b.hi)
            }
            (AvoidShape::HalfSpace { coeffs, rhs }, pol) => {
                let (mut lo, mut hi) = (0.0, 0.0);
                for (c, iv) in coeffs.iter().zip(bx) {
                    lo += (c * iv.lo).min(c * iv.hi);
                    hi += (c * iv.lo).max(c * iv.hi);
                }
                match pol {
                    Polarity::Inside => lo <= *rhs,
                    Polarity::Outside => hi > *rhs,
                }
            }
        }
    }
}

/// A discrete-time neural feedback system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub name: String,
    pub n: usize,
    pub init: Vec<Interval>,
    pub dynamics: Vec<Expr>,
    pub perturbation: Vec<Interval>,
    /// `None` means a zero controller.
    pub controller: Option<NeuralNetwork>,
    pub delta: f64,
    pub horizon: usize,
    pub goal: Option<Vec<Interval>>,
    pub avoid: Vec<AvoidRegion>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReachError {
    #[error("invalid system: {0}")]
    Spec(String),
    #[error("bounding f{dim} at step {t}: {source}")]
    Bounding {
        t: usize,
        dim: usize,
        source: BoundingError,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model for x{dim} at step {t} is infeasible; the encoding is inconsistent")]
    Infeasible { t: usize, dim: usize },
    #[error("model for x{dim} at step {t} is unbounded")]
    Unbounded { t: usize, dim: usize },
    #[error("external solver: {0}")]
    External(#[from] ExternalError),
}

impl SystemSpec {
    pub fn validate(&self) -> Result<(), ReachError> {
        let err = |m: String| Err(ReachError::Spec(m));
        if self.n == 0 {
            return err("n must be positive".into());
        }
        if self.init.len() != self.n
            || self.perturbation.len() != self.n
            || self.dynamics.len() != self.n
        {
            return err(format!(
                "n = {} but I has {}, E has {}, F has {} entries",
                self.n,
                self.init.len(),
                self.perturbation.len(),
                self.dynamics.len()
            ));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return err(format!("delta must be positive, got {}", self.delta));
        }
        for (name, bx) in [("I", &self.init), ("E", &self.perturbation)] {
            if bx
                .iter()
                .any(|iv| !(iv.lo <= iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite())
            {
                return err(format!("{name} must be a finite nonempty box"));
            }
        }
        for (i, f) in self.dynamics.iter().enumerate() {
            if let Some(v) = f.vars().max().filter(|&v| v > self.n) {
                return err(format!("f{} reads x{v} but n = {}", i + 1, self.n));
            }
        }
        if let Some(c) = &self.controller {
            if c.input_dim() != self.n || c.output_dim() != self.n {
                return err(format!(
                    "controller maps R^{} -> R^{}, expected R^{n} -> R^{n}",
                    c.input_dim(),
                    c.output_dim(),
                    n = self.n
                ));
            }
        }
        if let Some(g) = &self.goal {
            if g.len() != self.n {
                return err("goal box has the wrong dimension".into());
            }
        }
        for a in &self.avoid {
            let len = match &a.shape {
                AvoidShape::Box(b) => b.len(),
                AvoidShape::HalfSpace { coeffs, .. } => coeffs.len(),
            };
            if len != self.n || a.t_from > a.t_to {
                return err(format!(
                    "avoid region for t in [{}, {}] is malformed",
                    a.t_from, a.t_to
                ));
            }
        }
        Ok(())
    }

    fn controlled(&self) -> Vec<bool> {
        match &self.controller {
            Some(c) => c.constants().iter().map(Option::is_none).collect(),
            None => vec![false; self.n],
        }
    }

    fn control_constant(&self, i: usize) -> f64 {
        self.controller
            .as_ref()
            .and_then(|c| c.constants()[i])
            .unwrap_or(0.0)
    }

    /// Dependency graph of a window of `window` steps.
    pub fn graph(&self, window: usize) -> DependencyGraph {
        let deps = self
            .dynamics
            .iter()
            .map(|f| f.vars().iter().collect::<BTreeSet<_>>())
            .collect();
        DependencyGraph::new(deps, self.controlled(), window)
    }

    /// One exact step of the dynamics.
    pub fn step(&self, x: &[f64], eps: &[f64]) -> Result<Vec<f64>, crate::expr::ExprError> {
        let u = match &self.controller {
            Some(c) => c.forward(x),
            None => vec![0.0; self.n],
        };
        (0..self.n)
            .map(|i| Ok(x[i] + (self.dynamics[i].evaluate(x)? + u[i] + eps[i]) * self.delta))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Builtin,
    /// Shell template with `{lp}` and `{sol}`.
    External(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachOptions {
    pub bound: BoundOptions,
    pub milp: MilpOptions,
    pub backend: Backend,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            bound: BoundOptions::default(),
            milp: MilpOptions::default(),
            backend: Backend::Builtin,
        }
    }
}

impl ReachOptions {
    pub fn with_divisions(mut self, k: usize) -> Self {
        self.bound.univariate.divisions = k;
        self
    }

    pub fn with_time_limit(mut self, d: Duration) -> Self {
        self.milp.time_limit = d;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepMode {
    Initial,
    Concrete,
    Symbolic { window: usize, depth: usize },
}

/// Solver statistics of one successor computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    /// Relative gaps of the `2n` solves, ordered (x1 min, x1 max, x2 min, ...).
    pub gaps: Vec<f64>,
    pub pivots: usize,
    pub nodes: usize,
    /// Solves that stopped early and fell back on their bound.
    pub limited: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub bx: Vec<Interval>,
    pub mode: StepMode,
    pub stats: StepStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachTrajectory {
    pub steps: Vec<StepRecord>,
}

impl ReachTrajectory {
    pub fn boxes(&self) -> Vec<&[Interval]> {
        self.steps.iter().map(|s| s.bx.as_slice()).collect()
    }

    pub fn last(&self) -> &[Interval] {
        &self
            .steps
            .last()
            .expect("trajectory holds the initial box")
            .bx
    }
}

/// Window lengths covering the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub windows: Vec<usize>,
}

impl Schedule {
    pub fn concrete(horizon: usize) -> Schedule {
        Schedule {
            windows: vec![1; horizon],
        }
    }

    /// Windows of `w` steps; the last one takes the remainder.
    pub fn symbolic(horizon: usize, w: usize) -> Schedule {
        let w = w.max(1);
        let mut windows = vec![w; horizon / w];
        if horizon % w > 0 {
            windows.push(horizon % w);
        }
        Schedule { windows }
    }

    pub fn steps(&self) -> usize {
        self.windows.iter().sum()
    }
}

/// Per-layer data of a window: the state box and everything bounded over it.
struct Layer {
    bx: Vec<Interval>,
    enclosures: Vec<(BoundingSet, Triangulation)>,
    net_bounds: Option<LayerBounds>,
}

fn padded(bx: &[Interval]) -> Vec<Interval> {
    bx.iter()
        .map(|iv| Interval {
            lo: iv.lo - DOMAIN_PAD,
            hi: iv.hi + DOMAIN_PAD,
        })
        .collect()
}

fn build_layer(
    spec: &SystemSpec,
    bx: &[Interval],
    t: usize,
    opts: &ReachOptions,
) -> Result<Layer, ReachError> {
    let dom = padded(bx);
    let mut enclosures = Vec::with_capacity(spec.n);
    for (i, f) in spec.dynamics.iter().enumerate() {
        let wrap = |e: BoundingError| ReachError::Bounding {
            t,
            dim: i + 1,
            source: e,
        };
        let set = bound_expr(f, &dom, &opts.bound).map_err(wrap)?;
        let tri = set.triangulate().map_err(wrap)?;
        enclosures.push((set, tri));
    }
    let net_bounds = spec
        .controller
        .as_ref()
        .filter(|c| !c.is_constant())
        .map(|c| propagate_preactivation_bounds(c, bx));
    Ok(Layer {
        bx: bx.to_vec(),
        enclosures,
        net_bounds,
    })
}

/// The model for the successor of dimension `dim` (0-based) after the
/// last layer, restricted to the dependency cone of that objective.
/// Returns the model and the objective's linear part and constant.
fn assemble(
    spec: &SystemSpec,
    layers: &[Layer],
    dim: usize,
) -> Result<(MilpModel, Vec<(VarId, f64)>, f64), ReachError> {
    let depth = layers.len();
    let graph = spec.graph(depth);
    let cone = graph.cone(Vertex {
        t: depth - 1,
        i: dim + 1,
    });
    let mut m = MilpModel::new();
    // state variables read by some vertex of the cone
    let mut x: BTreeMap<(usize, usize), VarId> = BTreeMap::new();
    for v in &cone {
        for j in graph.reads(*v) {
            if let std::collections::btree_map::Entry::Vacant(e) = x.entry((v.t, j)) {
                let iv = layers[v.t].bx[j - 1];
                e.insert(m.continuous(format!("x[{}][{}]", v.t, j), iv.lo, iv.hi)?);
            }
        }
    }
    let mut u: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
    let mut y: BTreeMap<(usize, usize), VarId> = BTreeMap::new();
    let mut eps: BTreeMap<(usize, usize), VarId> = BTreeMap::new();
    for v in &cone {
        let layer = &layers[v.t];
        if v.i == 0 {
            let net = spec
                .controller
                .as_ref()
                .expect("controller vertex without a controller");
            let inputs: Vec<VarId> = (1..=spec.n).map(|j| x[&(v.t, j)]).collect();
            let outs = encode_relu_network(
                &mut m,
                net,
                layer.net_bounds.as_ref().unwrap(),
                &inputs,
                v.t,
            )?;
            u.insert(v.t, outs);
        } else {
            let (set, tri) = &layer.enclosures[v.i - 1];
            let inputs: Vec<VarId> = set.vars().iter().map(|&j| x[&(v.t, j)]).collect();
            let enc = encode_enclosure(&mut m, set, tri, &inputs, v.t, v.i)?;
            y.insert((v.t, v.i), enc.y);
            let e = spec.perturbation[v.i - 1];
            eps.insert(
                (v.t, v.i),
                m.continuous(format!("eps[{}][{}]", v.t, v.i), e.lo, e.hi)?,
            );
        }
    }
    let controlled = spec.controlled();
    // the update x[t+1][i] = x[t][i] + (y + u + eps) * delta, as terms and constant
    let update = |t: usize, i: usize| -> (Vec<(VarId, f64)>, f64) {
        let d = spec.delta;
        let mut terms = vec![(x[&(t, i)], 1.0), (y[&(t, i)], d), (eps[&(t, i)], d)];
        let mut c = 0.0;
        if controlled[i - 1] {
            terms.push((u[&t][i - 1], d));
        } else {
            c = spec.control_constant(i - 1) * d;
        }
        (terms, c)
    };
    for (&(t, j), &var) in &x {
        if t > 0 {
            let (mut terms, c) = update(t - 1, j);
            for tm in &mut terms {
                tm.1 = -tm.1;
            }
            terms.push((var, 1.0));
            m.add_row(terms, crate::milp::RowSense::Eq, c)?;
        }
    }
    let (terms, c) = update(depth - 1, dim + 1);
    Ok((m, terms, c))
}

fn solve(
    model: &MilpModel,
    obj: &Objective,
    opts: &ReachOptions,
) -> Result<MilpResult, ReachError> {
    match &opts.backend {
        Backend::Builtin => Ok(solve_milp_with(model, obj, &opts.milp)),
        Backend::External(cmd) => Ok(solve_external(model, obj, cmd)?),
    }
}

/// Interval-arithmetic successor of dimension `i` over a box. Every solved
/// bound is intersected with it, and it stands in when a solve ends without
/// any finite bound.
fn interval_successor(spec: &SystemSpec, layer: &Layer, i: usize) -> Interval {
    // both readings of f are sound over the box; keep their intersection
    let mut f = layer.enclosures[i].0.range();
    if let Ok(g) = spec.dynamics[i].interval_evaluate(&layer.bx) {
        f = Interval {
            lo: f.lo.max(g.lo),
            hi: f.hi.min(g.hi),
        };
    }
    let u = match (&spec.controller, &layer.net_bounds) {
        (Some(c), Some(b)) if c.constants()[i].is_none() => b.pre.last().unwrap()[i],
        _ => Interval::point(spec.control_constant(i)),
    };
    let (e, d, x) = (spec.perturbation[i], spec.delta, layer.bx[i]);
    Interval {
        lo: x.lo + (f.lo + u.lo + e.lo) * d,
        hi: x.hi + (f.hi + u.hi + e.hi) * d,
    }
}

fn pad_down(v: f64) -> f64 {
    v - BOUND_PAD * (1.0 + v.abs())
}

fn pad_up(v: f64) -> f64 {
    v + BOUND_PAD * (1.0 + v.abs())
}

/// Successor box after the last of `layers`, solving `2n` MILPs.
fn successor(
    spec: &SystemSpec,
    layers: &[Layer],
    t: usize,
    opts: &ReachOptions,
) -> Result<(Vec<Interval>, StepStats), ReachError> {
    let start = Instant::now();
    let models: Vec<_> = (0..spec.n)
        .into_par_iter()
        .map(|i| assemble(spec, layers, i))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, bool)> = (0..spec.n).flat_map(|i| [(i, false), (i, true)]).collect();
    let results: Vec<(usize, bool, MilpResult)> = jobs
        .par_iter()
        .map(|&(i, max)| {
            let (m, terms, c) = &models[i];
            let mut obj = if max {
                Objective::maximize(terms.clone())
            } else {
                Objective::minimize(terms.clone())
            };
            obj.constant = *c;
            solve(m, &obj, opts).map(|r| (i, max, r))
        })
        .collect::<Result<_, _>>()?;
    let mut stats = StepStats::default();
    let mut bx = vec![Interval::point(0.0); spec.n];
    let last = layers.last().unwrap();
    for (i, max, r) in results {
        stats.gaps.push(r.gap);
        stats.pivots += r.pivots;
        stats.nodes += r.nodes;
        match r.status {
            MilpStatus::Infeasible => return Err(ReachError::Infeasible { t, dim: i + 1 }),
            MilpStatus::Unbounded => return Err(ReachError::Unbounded { t, dim: i + 1 }),
            MilpStatus::TimeLimit => stats.limited += 1,
            MilpStatus::Optimal => {}
        }
        // the interval successor is sound too and can beat a loose enclosure
        let iv = interval_successor(spec, last, i);
        let v = r.outer();
        if max {
            let h = pad_up(iv.hi);
            bx[i].hi = if v.is_finite() { pad_up(v).min(h) } else { h };
        } else {
            let l = pad_down(iv.lo);
            bx[i].lo = if v.is_finite() { pad_down(v).max(l) } else { l };
        }
    }
    for (i, iv) in bx.iter_mut().enumerate() {
        if iv.lo > iv.hi {
            // both ends are sound, so they can only cross by rounding
            let m = 0.5 * (iv.lo + iv.hi);
            debug_assert!(iv.lo - iv.hi < 1e-6, "crossed bounds on x{}", i + 1);
            *iv = Interval { lo: m, hi: m };
        }
    }
    stats.elapsed = start.elapsed();
    Ok((bx, stats))
}

/// Concrete successor of a box.
pub fn next_set(
    spec: &SystemSpec,
    bx: &[Interval],
    opts: &ReachOptions,
) -> Result<(Vec<Interval>, StepStats), ReachError> {
    let layer = build_layer(spec, bx, 0, opts)?;
    successor(spec, &[layer], 1, opts)
}

/// Boxes for the `depth` steps after `entry`, each from one MILP spanning
/// every step back to the window entry. Enclosures of a step are built
/// over the box already computed for it within the window.
pub fn window_sets(
    spec: &SystemSpec,
    entry: &[Interval],
    t0: usize,
    depth: usize,
    opts: &ReachOptions,
) -> Result<Vec<(Vec<Interval>, StepStats)>, ReachError> {
    let mut layers = vec![build_layer(spec, entry, t0, opts)?];
    let mut out = Vec::with_capacity(depth);
    for k in 1..=depth {
        let (bx, stats) = successor(spec, &layers, t0 + k, opts)?;
        if k < depth {
            layers.push(build_layer(spec, &bx, t0 + k, opts)?);
        }
        out.push((bx, stats));
    }
    Ok(out)
}

pub fn compute_trajectory(
    spec: &SystemSpec,
    schedule: &Schedule,
    opts: &ReachOptions,
) -> Result<ReachTrajectory, ReachError> {
    spec.validate()?;
    let mut steps = vec![StepRecord {
        t: 0,
        bx: spec.init.clone(),
        mode: StepMode::Initial,
        stats: StepStats::default(),
    }];
    let mut t = 0;
    for &w in &schedule.windows {
        let w = w.min(spec.horizon - t.min(spec.horizon));
        if w == 0 {
            break;
        }
        let entry = steps.last().unwrap().bx.clone();
        for (k, (bx, stats)) in window_sets(spec, &entry, t, w, opts)?
            .into_iter()
            .enumerate()
        {
            let mode = if w == 1 {
                StepMode::Concrete
            } else {
                StepMode::Symbolic {
                    window: w,
                    depth: k + 1,
                }
            };
            steps.push(StepRecord {
                t: t + k + 1,
                bx,
                mode,
                stats,
            });
        }
        t += w;
    }
    Ok(ReachTrajectory { steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Reach,
    Avoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Verified,
    FalsifiedCandidate,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub property: Property,
    pub status: VerdictStatus,
    pub witness_step: Option<usize>,
    pub witness_box: Option<Vec<[f64; 2]>>,
}

fn as_pairs(bx: &[Interval]) -> Vec<[f64; 2]> {
    bx.iter().map(|iv| [iv.lo, iv.hi]).collect()
}

fn subset(a: &[Interval], b: &[Interval]) -> bool {
    a.iter().zip(b).all(|(x, y)| y.lo <= x.lo && x.hi <= y.hi)
}

fn overlaps(a: &[Interval], b: &[Interval]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.lo <= y.hi && y.lo <= x.hi)
}

/// Avoid verdict always; reach verdict when the system has a goal.
pub fn check_reach_avoid(traj: &ReachTrajectory, spec: &SystemSpec) -> Vec<Verdict> {
    let mut out = Vec::new();
    let hit = traj.steps.iter().find(|s| {
        spec.avoid
            .iter()
            .any(|a| (a.t_from..=a.t_to).contains(&s.t) && a.meets(&s.bx))
    });
    out.push(match hit {
        None => Verdict {
            property: Property::Avoid,
            status: VerdictStatus::Verified,
            witness_step: None,
            witness_box: None,
        },
        Some(s) => Verdict {
            property: Property::Avoid,
            status: VerdictStatus::FalsifiedCandidate,
            witness_step: Some(s.t),
            witness_box: Some(as_pairs(&s.bx)),
        },
    });
    if let Some(g) = &spec.goal {
        let inside = traj.steps.iter().find(|s| subset(&s.bx, g));
        let touching = traj.steps.iter().find(|s| overlaps(&s.bx, g));
        out.push(match (inside, touching) {
            (Some(s), _) => Verdict {
                property: Property::Reach,
                status: VerdictStatus::Verified,
                witness_step: Some(s.t),
                witness_box: Some(as_pairs(&s.bx)),
            },
            (None, Some(s)) => Verdict {
                property: Property::Reach,
                status: VerdictStatus::Unknown,
                witness_step: Some(s.t),
                witness_box: Some(as_pairs(&s.bx)),
            },
            (None, None) => Verdict {
                property: Property::Reach,
                status: VerdictStatus::FalsifiedCandidate,
                witness_step: None,
                witness_box: None,
            },
        });
    }
    out
}

pub fn box_volume(bx: &[Interval]) -> f64 {
    bx.iter().map(|iv| iv.hi - iv.lo).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::milp::{Activation, Layer as NetLayer};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn scalar(f: &str, controller: Option<NeuralNetwork>) -> SystemSpec {
        SystemSpec {
            name: "scalar".into(),
            n: 1,
            init: vec![iv(0.0, 0.1)],
            dynamics: vec![parse(f).unwrap()],
            perturbation: vec![iv(0.0, 0.0)],
            controller,
            delta: 0.1,
            horizon: 3,
            goal: None,
            avoid: Vec::new(),
        }
    }

    #[test]
    fn zero_dynamics_is_stationary() {
        let s = SystemSpec {
            n: 2,
            init: vec![iv(0.0, 1.0), iv(-1.0, 2.0)],
            dynamics: vec![parse("0").unwrap(), parse("0").unwrap()],
            perturbation: vec![iv(0.0, 0.0); 2],
            ..scalar("0", None)
        };
        let tr = compute_trajectory(&s, &Schedule::concrete(3), &ReachOptions::default()).unwrap();
        assert_eq!(tr.steps.len(), 4);
        for st in &tr.steps {
            for (a, b) in st.bx.iter().zip(&s.init) {
                assert!((a.lo - b.lo).abs() < 1e-7 && (a.hi - b.hi).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn constant_dynamics_shift() {
        let s = scalar("2", None);
        let (bx, _) = next_set(&s, &s.init, &ReachOptions::default()).unwrap();
        assert!((bx[0].lo - 0.2).abs() < 1e-7 && (bx[0].hi - 0.3).abs() < 1e-7);
    }

    #[test]
    fn sine_successor_contains_samples() {
        let s = scalar("sin(x1)", None);
        let (bx, _) = next_set(&s, &s.init, &ReachOptions::default()).unwrap();
        for k in 0..=1000 {
            let x = 0.1 * k as f64 / 1000.0;
            let y = x + x.sin() * 0.1;
            assert!(bx[0].lo <= y && y <= bx[0].hi, "{y} not in {:?}", bx[0]);
        }
        assert!(bx[0].hi - bx[0].lo < 0.12);
    }

    #[test]
    fn controller_enters_the_update() {
        // u(x) = relu(x - 0.05) - 1
        let l1 = NetLayer {
            weights: vec![vec![1.0]],
            bias: vec![-0.05],
            activation: Activation::Relu,
        };
        let l2 = NetLayer {
            weights: vec![vec![1.0]],
            bias: vec![-1.0],
            activation: Activation::Identity,
        };
        let net = NeuralNetwork::new(vec![l1, l2], vec![None]).unwrap();
        let s = scalar("0", Some(net));
        let (bx, _) = next_set(&s, &s.init, &ReachOptions::default()).unwrap();
        // x + 0.1*(relu(x-0.05)-1) is increasing in x
        let lo = 0.0 - 0.1;
        let hi = 0.1 + 0.1 * (0.05 - 1.0);
        assert!(
            (bx[0].lo - lo).abs() < 1e-7 && (bx[0].hi - hi).abs() < 1e-7,
            "{bx:?}"
        );
    }

    #[test]
    fn symbolic_window_on_linear_system_matches_concrete() {
        let s = SystemSpec {
            n: 2,
            init: vec![iv(0.0, 0.1), iv(0.5, 0.6)],
            dynamics: vec![parse("x2").unwrap(), parse("-x1").unwrap()],
            perturbation: vec![iv(0.0, 0.0); 2],
            horizon: 2,
            ..scalar("0", None)
        };
        let opts = ReachOptions::default();
        let c = compute_trajectory(&s, &Schedule::concrete(2), &opts).unwrap();
        let w = compute_trajectory(&s, &Schedule::symbolic(2, 2), &opts).unwrap();
        assert_eq!(
            w.steps[2].mode,
            StepMode::Symbolic {
                window: 2,
                depth: 2
            }
        );
        for (a, b) in c.last().iter().zip(w.last()) {
            assert!(b.lo >= a.lo - 1e-8 && b.hi <= a.hi + 1e-8);
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::symbolic(7, 3).windows, vec![3, 3, 1]);
        assert_eq!(Schedule::concrete(2).windows, vec![1, 1]);
    }

    #[test]
    fn verdicts() {
        let mut s = scalar("0", None);
        let mk = |t, lo, hi| StepRecord {
            t,
            bx: vec![iv(lo, hi)],
            mode: StepMode::Concrete,
            stats: StepStats::default(),
        };
        let tr = ReachTrajectory {
            steps: (0..6)
                .map(|t| mk(t, 1.0 - 0.1 * t as f64, 1.2 - 0.1 * t as f64))
                .collect(),
        };
        s.goal = Some(vec![iv(0.5, 0.75)]);
        s.avoid = vec![AvoidRegion {
            t_from: 3,
            t_to: 3,
            shape: AvoidShape::Box(vec![iv(0.8, 2.0)]),
            polarity: Polarity::Inside,
        }];
        let v = check_reach_avoid(&tr, &s);
        assert_eq!(v[0].status, VerdictStatus::FalsifiedCandidate);
        assert_eq!(v[0].witness_step, Some(3));
        assert_eq!(v[1].status, VerdictStatus::Verified);
        assert_eq!(v[1].witness_step, Some(5));
    }

    #[test]
    fn avoid_shapes() {
        let r = AvoidRegion {
            t_from: 0,
            t_to: 1,
            shape: AvoidShape::Box(vec![iv(-2.0, 2.0); 2]),
            polarity: Polarity::Outside,
        };
        assert!(!r.meets(&[iv(-1.0, 1.0), iv(0.0, 2.0)]));
        assert!(r.meets(&[iv(-1.0, 1.0), iv(0.0, 2.1)]));
        let h = AvoidRegion {
            t_from: 0,
            t_to: 1,
            shape: AvoidShape::HalfSpace {
                coeffs: vec![1.0, -1.0],
                rhs: 0.0,
            },
            polarity: Polarity::Outside,
        };
        assert!(!h.meets(&[iv(0.0, 1.0), iv(1.0, 2.0)]));
        assert!(h.meets(&[iv(0.0, 1.5), iv(1.0, 2.0)]));
    }

    #[test]
    fn volumes() {
        assert_eq!(box_volume(&vec![iv(0.0, 1.0); 4]), 1.0);
        assert_eq!(box_volume(&[iv(0.0, 1.0), iv(2.0, 2.0)]), 0.0);
    }

    #[test]
    fn validation() {
        let mut s = scalar("x2", None);
        assert!(s.validate().is_err());
        s = scalar("x1", None);
        s.delta = 0.0;
        assert!(s.validate().is_err());
    }
}
