//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::lp::{solve_lp_bounded, LpOptions, LpStatus};
use crate::milp::{MilpModel, ObjSense, Objective, VarKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub int_tol: f64,
    pub mip_gap: f64,
    pub time_limit: Duration,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            int_tol: 1e-6,
            mip_gap: 1e-6,
            time_limit: Duration::from_secs(600),
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped early (time or LP iteration limit); `bound` is still valid.
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Best feasible objective found, in the objective's own sense.
    pub incumbent: Option<f64>,
    /// Valid bound on the optimum: a lower bound when minimizing, upper when maximizing.
    pub bound: f64,
    pub gap: f64,
    pub values: Option<Vec<f64>>,
    pub nodes: usize,
    pub pivots: usize,
}

impl MilpResult {
    /// The outer value a sound caller should use: the bound, never the incumbent.
    pub fn outer(&self) -> f64 {
        self.bound
    }
}

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.id.cmp(&self.id))
    }
}

fn gap_of(inc: f64, bound: f64) -> f64 {
    if !inc.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    ((inc - bound) / inc.abs().max(1.0)).max(0.0)
}

/// Solves the model with its own objective.
pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> MilpResult {
    let obj = model
        .objective()
        .cloned()
        .unwrap_or_else(|| Objective::minimize(Vec::new()));
    solve_milp_with(model, &obj, opts)
}

/// Solves `model` for `objective`, leaving the model untouched so several
/// objectives can share it.
pub fn solve_milp_with(model: &MilpModel, objective: &Objective, opts: &MilpOptions) -> MilpResult {
    let start = Instant::now();
    let sign = if objective.sense == ObjSense::Maximize {
        -1.0
    } else {
        1.0
    };
    // internal minimization form
    let min_obj = Objective {
        sense: ObjSense::Minimize,
        terms: objective
            .terms
            .iter()
            .map(|(v, c)| (*v, sign * c))
            .collect(),
        constant: sign * objective.constant,
    };
    let base_lo: Vec<f64> = model.vars().iter().map(|v| v.lo).collect();
    let base_hi: Vec<f64> = model.vars().iter().map(|v| v.hi).collect();
    let binaries: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixes: Vec::new(),
    });
    let mut next_id = 1;
    let mut incumbent = f64::INFINITY;
    let mut best_x: Option<Vec<f64>> = None;
    let mut nodes = 0;
    let mut pivots = 0;
    // bounds of nodes whose LP could not be solved
    let mut unresolved = f64::INFINITY;
    let mut stopped = false;

    let to_sense = |v: f64| sign * v;
    while let Some(node) = heap.peek() {
        let open = node.bound.min(unresolved);
        if incumbent.is_finite() && gap_of(incumbent, open) <= opts.mip_gap {
            break;
        }
        if start.elapsed() >= opts.time_limit {
            stopped = true;
            break;
        }
        let node = heap.pop().unwrap();
        nodes += 1;
        let mut lo = base_lo.clone();
        let mut hi = base_hi.clone();
        for &(j, v) in &node.fixes {
            lo[j] = v;
            hi[j] = v;
        }
        let lp = solve_lp_bounded(model, Some(&min_obj), &lo, &hi, &opts.lp);
        pivots += lp.pivots;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return MilpResult {
                    status: MilpStatus::Unbounded,
                    incumbent: None,
                    bound: to_sense(f64::NEG_INFINITY),
                    gap: f64::INFINITY,
                    values: None,
                    nodes,
                    pivots,
                };
            }
            LpStatus::IterationLimit => {
                unresolved = unresolved.min(node.bound);
                continue;
            }
            LpStatus::Optimal => {}
        }
        let z = lp.objective.max(node.bound);
        if incumbent.is_finite() && z >= incumbent - opts.mip_gap * incumbent.abs().max(1.0) {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let f = (lp.x[j] - lp.x[j].round()).abs();
            if f > opts.int_tol && branch.map_or(true, |(_, bf)| f > bf) {
                branch = Some((j, f));
            }
        }
        match branch {
            None => {
                let mut x = lp.x;
                for &j in &binaries {
                    x[j] = x[j].round();
                }
                let val = min_obj.value(&x);
                if val < incumbent {
                    incumbent = val;
                    best_x = Some(x);
                }
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, v));
                    heap.push(Node {
                        bound: z,
                        id: next_id,
                        fixes,
                    });
                    next_id += 1;
                }
            }
        }
    }

    let open = heap
        .peek()
        .map_or(f64::INFINITY, |n| n.bound)
        .min(unresolved);
    let bound = open.min(incumbent);
    let limited = stopped || unresolved.is_finite() && unresolved < incumbent;
    let status = if limited && gap_of(incumbent, bound) > opts.mip_gap {
        MilpStatus::TimeLimit
    } else if incumbent.is_finite() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    let bound = if status == MilpStatus::Infeasible {
        f64::INFINITY
    } else {
        bound
    };
    MilpResult {
        status,
        incumbent: incumbent.is_finite().then(|| to_sense(incumbent)),
        bound: to_sense(bound),
        gap: gap_of(incumbent, bound),
        values: best_x,
        nodes,
        pivots,
    }
}
