//! Dependency graphs between per-dimension models and the controller.
//!
//! Vertex `(t, 0)` is the controller at window step `t`; `(t, i)` for
//! `i >= 1` is the enclosure model of state dimension `i`.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub t: usize,
    pub i: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Two models of the same step share variables.
    State,
    /// A model at step `t` feeds the same dimension at `t + 1`.
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    n: usize,
    window: usize,
    /// `deps[i - 1]`: state variables (1-based) read by the transition of dimension `i`.
    deps: Vec<BTreeSet<usize>>,
    /// Dimensions whose controller output is not a constant.
    controlled: Vec<bool>,
    controller_reads_state: bool,
    edges: Vec<(Vertex, Vertex, EdgeKind)>,
}

impl DependencyGraph {
    /// Builds the graph for a window of `window` steps. `deps[i - 1]` lists
    /// the state variables in `f_i`; `controlled[i - 1]` says whether `u_i`
    /// comes from the network.
    pub fn new(
        deps: Vec<BTreeSet<usize>>,
        controlled: Vec<bool>,
        window: usize,
    ) -> DependencyGraph {
        let n = deps.len();
        assert_eq!(controlled.len(), n);
        let controller_reads_state = controlled.iter().any(|&c| c);
        let mut edges = Vec::new();
        for t in 0..window {
            if controller_reads_state {
                for i in 1..=n {
                    edges.push((Vertex { t, i: 0 }, Vertex { t, i }, EdgeKind::State));
                }
            }
            for i in 1..=n {
                for j in i + 1..=n {
                    if deps[i - 1].contains(&j) || deps[j - 1].contains(&i) {
                        edges.push((Vertex { t, i }, Vertex { t, i: j }, EdgeKind::State));
                    }
                }
            }
            if t + 1 < window {
                for i in 1..=n {
                    edges.push((Vertex { t, i }, Vertex { t: t + 1, i }, EdgeKind::Temporal));
                }
            }
        }
        DependencyGraph {
            n,
            window,
            deps,
            controlled,
            controller_reads_state,
            edges,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (0..self.window)
            .flat_map(|t| (0..=self.n).map(move |i| Vertex { t, i }))
            .collect()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex, EdgeKind)] {
        &self.edges
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        self.edges
            .iter()
            .any(|&(u, v, _)| (u, v) == (a, b) || (u, v) == (b, a))
    }

    /// State variables (1-based) read at step `v.t` by vertex `v`.
    pub fn reads(&self, v: Vertex) -> BTreeSet<usize> {
        if v.i == 0 {
            if self.controller_reads_state {
                (1..=self.n).collect()
            } else {
                BTreeSet::new()
            }
        } else {
            let mut s = self.deps[v.i - 1].clone();
            s.insert(v.i);
            s
        }
    }

    /// Vertices `v` directly needs: the controller of its step (for a
    /// controlled dimension) and, past the first step, the previous-step
    /// models defining the states it reads.
    pub fn requires(&self, v: Vertex) -> Vec<Vertex> {
        let mut out = Vec::new();
        if v.i > 0 && self.controlled[v.i - 1] {
            out.push(Vertex { t: v.t, i: 0 });
        }
        if v.t > 0 {
            out.extend(
                self.reads(v)
                    .into_iter()
                    .map(|j| Vertex { t: v.t - 1, i: j }),
            );
        }
        out
    }

    /// All vertices the objective at `target` depends on, target included.
    pub fn cone(&self, target: Vertex) -> BTreeSet<Vertex> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(self.requires(v));
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unicycle(window: usize) -> DependencyGraph {
        let deps = vec![
            [3, 4].into(),
            [3, 4].into(),
            BTreeSet::new(),
            BTreeSet::new(),
        ];
        DependencyGraph::new(deps, vec![false, false, true, true], window)
    }

    #[test]
    fn unicycle_step() {
        let g = unicycle(1);
        assert_eq!(g.vertices().len(), 5);
        let v = |i| Vertex { t: 0, i };
        for i in 1..=4 {
            assert!(g.has_edge(v(0), v(i)));
        }
        for (a, b) in [(1, 3), (1, 4), (2, 3), (2, 4)] {
            assert!(g.has_edge(v(a), v(b)));
        }
        assert!(!g.has_edge(v(1), v(2)));
        assert!(!g.has_edge(v(3), v(4)));
        assert_eq!(g.edges().len(), 8);
    }

    #[test]
    fn temporal_edges() {
        let g = unicycle(2);
        assert_eq!(g.vertices().len(), 10);
        for i in 1..=4 {
            assert!(g.edges().contains(&(
                Vertex { t: 0, i },
                Vertex { t: 1, i },
                EdgeKind::Temporal
            )));
        }
        // x1 at step 1 needs the controller and the models defining x1, x3, x4
        let c = g.cone(Vertex { t: 1, i: 1 });
        assert!(c.contains(&Vertex { t: 0, i: 3 }) && c.contains(&Vertex { t: 0, i: 0 }));
        assert!(!c.contains(&Vertex { t: 1, i: 0 }));
        assert!(!c.contains(&Vertex { t: 0, i: 2 }));
    }

    #[test]
    fn scalar_system() {
        let g = DependencyGraph::new(vec![[1].into()], vec![true], 1);
        assert_eq!(g.vertices().len(), 2);
        assert_eq!(g.edges().len(), 1);
    }
}
