//! Dense bounded primal simplex with a two-phase start.
//!
//! Every row gets a slack column (`Ax + s = b`, the slack's bounds encode the
//! row sense); rows whose initial slack value is out of bounds also get an
//! artificial column that phase one drives to zero. Pricing is Dantzig's
//! largest reduced cost, switching to Bland's rule after a run of degenerate
//! pivots.

use crate::milp::{MilpModel, ObjSense, Objective, RowSense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub opt_tol: f64,
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub max_iters: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            opt_tol: 1e-9,
            feas_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the model's own sense.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row duals of the minimization form (`max c'x` is solved as `min -c'x`).
    pub duals: Vec<f64>,
    /// Reduced costs of the structural columns in the minimization form.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    m: usize,
    /// Columns: structural, slack, artificial, then the right-hand side.
    width: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    d: Vec<f64>,
    pivots: usize,
    opts: LpOptions,
}

enum Step {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn cols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn set_costs(&mut self, c: &[f64]) {
        let n = self.cols();
        self.d = c.to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.width..i * self.width + n];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basics(&mut self) {
        let n = self.cols();
        for i in 0..self.m {
            let row = &self.t[i * self.width..(i + 1) * self.width];
            let mut v = row[n];
            for j in 0..n {
                if self.basic_row[j].is_none() && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.t[r * w + q];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (a, b) in self.d.iter_mut().zip(&pivot_row) {
                *a -= f * b;
            }
            self.d[q] = 0.0;
        }
        let old = self.basis[r];
        self.basic_row[old] = None;
        self.basic_row[q] = Some(r);
        self.basis[r] = q;
        self.pivots += 1;
    }

    fn run(&mut self, iters: &mut usize) -> Step {
        let n = self.cols();
        let mut degenerate = 0usize;
        let bland_after = 10 * self.m.max(1);
        loop {
            if *iters >= self.opts.max_iters {
                return Step::IterationLimit;
            }
            *iters += 1;
            let bland = degenerate >= bland_after;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..n {
                if self.basic_row[j].is_some() || self.lo[j] == self.hi[j] {
                    continue;
                }
                let dj = self.d[j];
                let dir = if dj < -self.opts.opt_tol && self.x[j] < self.hi[j] {
                    1.0
                } else if dj > self.opts.opt_tol && self.x[j] > self.lo[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Step::Optimal;
            };
            // ratio test
            let mut theta = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let tiq = self.at(i, q);
                if tiq.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let a = tiq * dir;
                let b = self.basis[i];
                let ratio = if a > 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x[b] - self.lo[b]) / a
                } else {
                    if self.hi[b] == f64::INFINITY {
                        continue;
                    }
                    (self.hi[b] - self.x[b]) / -a
                };
                let ratio = ratio.max(0.0);
                let better = match leave {
                    None => ratio < theta,
                    Some((r, _)) => {
                        if ratio < theta {
                            true
                        } else if ratio == theta {
                            if bland {
                                b < self.basis[r]
                            } else {
                                tiq.abs() > self.at(r, q).abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better || (leave.is_none() && ratio <= theta && theta.is_infinite()) {
                    theta = ratio;
                    leave = Some((i, a));
                }
            }
            if theta.is_infinite() {
                return Step::Unbounded;
            }
            let step = dir * theta;
            self.x[q] += step;
            for i in 0..self.m {
                let tiq = self.at(i, q);
                if tiq != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= tiq * step;
                }
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            match leave {
                None => {
                    // bound flip: land exactly on the opposite bound
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((r, a)) => {
                    let b = self.basis[r];
                    self.x[b] = if a > 0.0 { self.lo[b] } else { self.hi[b] };
                    self.pivot(r, q);
                }
            }
        }
    }
}

fn initial_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

/// Solves the LP relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel) -> LpSolution {
    let lo: Vec<f64> = model.vars().iter().map(|v| v.lo).collect();
    let hi: Vec<f64> = model.vars().iter().map(|v| v.hi).collect();
    solve_lp_bounded(model, model.objective(), &lo, &hi, &LpOptions::default())
}

/// Solves the LP relaxation for `objective` with the given variable bounds
/// in place of the model's.
pub fn solve_lp_bounded(
    model: &MilpModel,
    objective: Option<&Objective>,
    lo: &[f64],
    hi: &[f64],
    opts: &LpOptions,
) -> LpSolution {
    let n = model.num_vars();
    let m = model.rows().len();
    let sign = match objective.map(|o| o.sense) {
        Some(ObjSense::Maximize) => -1.0,
        _ => 1.0,
    };
    let mut cost = vec![0.0; n];
    if let Some(o) = objective {
        for (v, c) in &o.terms {
            cost[v.0] += sign * c;
        }
    }
    if (0..n).any(|j| !(lo[j] <= hi[j])) {
        return LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            x: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            pivots: 0,
        };
    }

    // equilibration
    let mut row_scale = vec![1.0; m];
    for (i, r) in model.rows().iter().enumerate() {
        let mx = r.terms.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        if mx > 0.0 {
            row_scale[i] = 1.0 / mx;
        }
    }
    let mut col_max = vec![0.0f64; n];
    for (i, r) in model.rows().iter().enumerate() {
        for (v, a) in &r.terms {
            col_max[v.0] = col_max[v.0].max((a * row_scale[i]).abs());
        }
    }
    let col_scale: Vec<f64> = col_max
        .iter()
        .map(|&c| if c > 0.0 { 1.0 / c } else { 1.0 })
        .collect();

    let slo: Vec<f64> = (0..n).map(|j| lo[j] / col_scale[j]).collect();
    let shi: Vec<f64> = (0..n).map(|j| hi[j] / col_scale[j]).collect();
    let x0: Vec<f64> = (0..n).map(|j| initial_value(slo[j], shi[j])).collect();
    let rhs: Vec<f64> = model
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| r.rhs * row_scale[i])
        .collect();
    let mut resid = rhs.clone();
    for (i, r) in model.rows().iter().enumerate() {
        for (v, a) in &r.terms {
            resid[i] -= a * row_scale[i] * col_scale[v.0] * x0[v.0];
        }
    }
    let slack_bounds = |i: usize| match model.rows()[i].sense {
        RowSense::Le => (0.0, f64::INFINITY),
        RowSense::Ge => (f64::NEG_INFINITY, 0.0),
        RowSense::Eq => (0.0, 0.0),
    };
    let mut art_rows = Vec::new();
    for (i, &r) in resid.iter().enumerate() {
        let (sl, sh) = slack_bounds(i);
        if r < sl - 1e-12 || r > sh + 1e-12 {
            art_rows.push(i);
        }
    }
    let na = art_rows.len();
    let cols = n + m + na;
    let width = cols + 1;
    let mut t = vec![0.0; m * width];
    let mut tlo = Vec::with_capacity(cols);
    let mut thi = Vec::with_capacity(cols);
    tlo.extend_from_slice(&slo);
    thi.extend_from_slice(&shi);
    for i in 0..m {
        let (sl, sh) = slack_bounds(i);
        tlo.push(sl);
        thi.push(sh);
    }
    for _ in 0..na {
        tlo.push(0.0);
        thi.push(f64::INFINITY);
    }
    let mut basis = vec![0; m];
    let mut x = vec![0.0; cols];
    x[..n].copy_from_slice(&x0);
    let mut art_of_row = vec![None; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = Some(k);
    }
    for (i, r) in model.rows().iter().enumerate() {
        let (sl, sh) = slack_bounds(i);
        let rowsign;
        match art_of_row[i] {
            None => {
                rowsign = 1.0;
                basis[i] = n + i;
                x[n + i] = resid[i];
            }
            Some(k) => {
                let sb = resid[i].clamp(sl, sh);
                let sigma = if resid[i] > sb { 1.0 } else { -1.0 };
                rowsign = sigma;
                x[n + i] = sb;
                basis[i] = n + m + k;
                x[n + m + k] = (resid[i] - sb).abs();
                t[i * width + n + m + k] = 1.0;
            }
        }
        for (v, a) in &r.terms {
            t[i * width + v.0] += rowsign * a * row_scale[i] * col_scale[v.0];
        }
        t[i * width + n + i] = rowsign;
        t[i * width + cols] = rowsign * rhs[i];
    }
    let mut basic_row = vec![None; cols];
    for (i, &b) in basis.iter().enumerate() {
        basic_row[b] = Some(i);
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        lo: tlo,
        hi: thi,
        x,
        basis,
        basic_row,
        d: vec![0.0; cols],
        pivots: 0,
        opts: *opts,
    };
    let mut iters = 0usize;

    let finish = |tab: &Tableau, status: LpStatus| -> LpSolution {
        let x: Vec<f64> = (0..n).map(|j| tab.x[j] * col_scale[j]).collect();
        let objective = objective.map_or(0.0, |o| o.value(&x));
        let duals = (0..m).map(|i| -tab.d[n + i] * row_scale[i]).collect();
        let reduced_costs = (0..n).map(|j| tab.d[j] / col_scale[j]).collect();
        LpSolution {
            status,
            objective,
            x,
            duals,
            reduced_costs,
            pivots: tab.pivots,
        }
    };

    if na > 0 {
        let mut c1 = vec![0.0; cols];
        for k in 0..na {
            c1[n + m + k] = 1.0;
        }
        tab.set_costs(&c1);
        match tab.run(&mut iters) {
            Step::IterationLimit => return finish(&tab, LpStatus::IterationLimit),
            Step::Unbounded => return finish(&tab, LpStatus::Infeasible),
            Step::Optimal => {}
        }
        tab.refresh_basics();
        let infeas: f64 = (0..na).map(|k| tab.x[n + m + k].max(0.0)).sum();
        if infeas > opts.feas_tol {
            return finish(&tab, LpStatus::Infeasible);
        }
        for k in 0..na {
            tab.hi[n + m + k] = 0.0;
            if tab.basic_row[n + m + k].is_none() {
                tab.x[n + m + k] = 0.0;
            }
        }
    }
    let mut c2 = vec![0.0; cols];
    for j in 0..n {
        c2[j] = cost[j] * col_scale[j];
    }
    for _ in 0..3 {
        tab.set_costs(&c2);
        match tab.run(&mut iters) {
            Step::IterationLimit => return finish(&tab, LpStatus::IterationLimit),
            Step::Unbounded => return finish(&tab, LpStatus::Unbounded),
            Step::Optimal => {}
        }
        tab.refresh_basics();
        let drift = (0..cols)
            .map(|j| (tab.lo[j] - tab.x[j]).max(tab.x[j] - tab.hi[j]))
            .fold(0.0, f64::max);
        if drift <= opts.feas_tol {
            break;
        }
        // clamp drifted basics back and re-optimize
        for j in 0..cols {
            tab.x[j] = tab.x[j].clamp(tab.lo[j], tab.hi[j]);
        }
    }
    finish(&tab, LpStatus::Optimal)
}
