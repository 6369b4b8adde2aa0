//! Generators shared by the integration tests.
#![allow(dead_code)]

use polyreach::expr::{Expr, Func, Interval};
use polyreach::milp::{Activation, Layer, MilpModel, NeuralNetwork, Objective, RowSense, VarId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn leaf(rng: &mut ChaCha8Rng, dims: usize) -> Expr {
    if rng.gen_bool(0.75) {
        Expr::var(rng.gen_range(1..=dims))
    } else {
        Expr::constant((rng.gen_range(-20..=20) as f64) / 10.0)
    }
}

fn has_exp(e: &Expr) -> bool {
    e.to_string().contains("exp")
}

/// Argument of an elementary function: a random expression in one variable.
pub fn univariate_arg(rng: &mut ChaCha8Rng, depth: usize, dims: usize) -> Expr {
    let v = rng.gen_range(1..=dims);
    random_expr(rng, depth, 1).rename_vars(&|_| v)
}

/// Random expression over `x1..x{dims}` of depth at most `depth`: sums,
/// differences and products of sin, cos and exp applied to univariate
/// arguments. `exp` is never nested inside `exp`, which keeps values finite
/// on boxes inside [-3, 3].
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize, dims: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, dims);
    }
    match rng.gen_range(0..6) {
        0 => Expr::func(Func::Sin, univariate_arg(rng, depth - 1, dims)),
        1 => Expr::func(Func::Cos, univariate_arg(rng, depth - 1, dims)),
        2 => {
            let a = univariate_arg(rng, depth - 1, dims);
            if has_exp(&a) {
                Expr::func(Func::Sin, a)
            } else {
                Expr::func(Func::Exp, a)
            }
        }
        3 => Expr::add(
            random_expr(rng, depth - 1, dims),
            random_expr(rng, depth - 1, dims),
        ),
        4 => Expr::sub(
            random_expr(rng, depth - 1, dims),
            random_expr(rng, depth - 1, dims),
        ),
        _ => Expr::mul(
            random_expr(rng, depth - 1, dims),
            random_expr(rng, depth - 1, dims),
        ),
    }
}

/// Random box in [-1.5, 1.5]^dims, each side of width in (0.05, 2].
pub fn random_box(rng: &mut ChaCha8Rng, dims: usize) -> Vec<Interval> {
    (0..dims)
        .map(|_| {
            let w = rng.gen_range(0.05..=2.0);
            let lo = rng.gen_range(-1.5..=1.5 - w * 0.5);
            Interval::new(lo, lo + w)
        })
        .collect()
}

pub fn sample_box(rng: &mut ChaCha8Rng, bx: &[Interval]) -> Vec<f64> {
    bx.iter()
        .map(|iv| {
            if iv.lo < iv.hi {
                rng.gen_range(iv.lo..=iv.hi)
            } else {
                iv.lo
            }
        })
        .collect()
}

/// Random ReLU network with hidden ReLU layers and a linear output layer.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n_in: usize,
    hidden: &[usize],
    n_out: usize,
    scale: f64,
) -> NeuralNetwork {
    let mut sizes = vec![n_in];
    sizes.extend_from_slice(hidden);
    sizes.push(n_out);
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(l, w)| Layer {
            weights: (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-scale..=scale)).collect())
                .collect(),
            bias: (0..w[1]).map(|_| rng.gen_range(-scale..=scale)).collect(),
            activation: if l + 2 == sizes.len() {
                Activation::Identity
            } else {
                Activation::Relu
            },
        })
        .collect();
    NeuralNetwork::new(layers, vec![None; n_out]).unwrap()
}

/// Forward pass written out independently of the library: plain loops over
/// the weight rows.
pub fn matmul_forward(net: &NeuralNetwork, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    for layer in net.layers() {
        let mut next = Vec::with_capacity(layer.weights.len());
        for (row, b) in layer.weights.iter().zip(&layer.bias) {
            let mut s = *b;
            for (w, xi) in row.iter().zip(&v) {
                s += w * xi;
            }
            if layer.activation == Activation::Relu && s < 0.0 {
                s = 0.0;
            }
            next.push(s);
        }
        v = next;
    }
    for (o, c) in v.iter_mut().zip(net.constants()) {
        if let Some(c) = c {
            *o = *c;
        }
    }
    v
}

pub fn eps_num(range: Interval) -> f64 {
    1e-9 * (1.0 + range.lo.abs().max(range.hi.abs()))
}

/// One entry of the enclosure fuzz corpus: an expression of depth at most 3
/// over at most 3 variables and a box of width at most 2.
pub fn fuzz_case(seed: u64) -> (Expr, Vec<Interval>) {
    let mut r = rng(seed);
    let dims = r.gen_range(1..=3);
    let e = random_expr(&mut r, 3, dims);
    let bx = random_box(&mut r, dims);
    (e, bx)
}

/// Tolerance for sampled enclosure checks: the numerical inflation the
/// bounds were built with.
pub fn enclosure_tol(b: &polyreach::bounding::BoundingSet) -> f64 {
    eps_num(b.range())
}

/// Closed-loop system with n <= 2, shallow dynamics and a tiny ReLU
/// controller.
pub fn random_system(seed: u64, horizon: usize) -> polyreach::reach::SystemSpec {
    let mut r = rng(seed);
    let n = r.gen_range(1..=2);
    let dynamics = (0..n).map(|_| random_expr(&mut r, 2, n)).collect();
    let init = (0..n)
        .map(|_| {
            let lo = r.gen_range(-1.0..1.0);
            Interval::new(lo, lo + r.gen_range(0.01..0.2))
        })
        .collect();
    let perturbation = (0..n)
        .map(|_| {
            if r.gen_bool(0.5) {
                Interval::new(0.0, 0.0)
            } else {
                let w = r.gen_range(0.0..0.05);
                Interval::new(-w, w)
            }
        })
        .collect();
    let hidden = [r.gen_range(1..=4)];
    let controller = random_network(&mut r, n, &hidden, n, 0.3);
    polyreach::reach::SystemSpec {
        name: format!("fuzz-{seed}"),
        n,
        init,
        dynamics,
        perturbation,
        controller: Some(controller),
        delta: 0.1,
        horizon,
        goal: None,
        avoid: Vec::new(),
    }
}

/// Exact closed-loop trajectory written against the matmul oracle rather
/// than the library's controller and step code.
pub fn simulate(spec: &polyreach::reach::SystemSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut x = sample_box(rng, &spec.init);
    let mut out = vec![x.clone()];
    for _ in 0..spec.horizon {
        let u = match &spec.controller {
            Some(c) => matmul_forward(c, &x),
            None => vec![0.0; spec.n],
        };
        let eps = sample_box(rng, &spec.perturbation);
        let f: Vec<f64> = spec
            .dynamics
            .iter()
            .map(|f| f.evaluate(&x).unwrap())
            .collect();
        x = (0..spec.n)
            .map(|i| x[i] + (f[i] + u[i] + eps[i]) * spec.delta)
            .collect();
        out.push(x.clone());
    }
    out
}

/// Checks every state of every simulated run against the box of its step
/// and returns the first escape as `(run, t, dim, value, interval)`.
pub fn first_escape(
    spec: &polyreach::reach::SystemSpec,
    traj: &polyreach::reach::ReachTrajectory,
    runs: usize,
    seed: u64,
) -> Option<(usize, usize, usize, f64, Interval)> {
    let mut r = rng(seed);
    for run in 0..runs {
        let xs = simulate(spec, &mut r);
        for (step, x) in traj.steps.iter().zip(&xs) {
            for (d, (v, iv)) in x.iter().zip(&step.bx).enumerate() {
                let slack = 1e-9 * (1.0 + v.abs());
                if *v < iv.lo - slack || *v > iv.hi + slack {
                    return Some((run, step.t, d, *v, *iv));
                }
            }
        }
    }
    None
}

/// Knapsack-like MILP: binaries plus one continuous `z` in [-3, 3].
pub struct Mip {
    pub weights: Vec<Vec<f64>>,
    pub zcoef: Vec<f64>,
    pub rhs: Vec<f64>,
    pub obj: Vec<f64>,
    pub zobj: f64,
}

pub fn random_mip(r: &mut ChaCha8Rng, nb: usize) -> Mip {
    let m = r.gen_range(1..=3);
    let int = |r: &mut ChaCha8Rng, k: i32| r.gen_range(-k..=k) as f64;
    Mip {
        weights: (0..m)
            .map(|_| (0..nb).map(|_| int(r, 5)).collect())
            .collect(),
        zcoef: (0..m).map(|_| int(r, 2)).collect(),
        rhs: (0..m).map(|_| int(r, 8) + 2.0).collect(),
        obj: (0..nb).map(|_| int(r, 6) + 0.5 * int(r, 1)).collect(),
        zobj: int(r, 2) + 0.25,
    }
}

pub fn build_mip(p: &Mip) -> MilpModel {
    let mut m = MilpModel::new();
    let bs: Vec<VarId> = (0..p.obj.len())
        .map(|j| m.binary(format!("b{j}")).unwrap())
        .collect();
    let z = m.continuous("z", -3.0, 3.0).unwrap();
    for ((w, zc), rhs) in p.weights.iter().zip(&p.zcoef).zip(&p.rhs) {
        let mut terms: Vec<(VarId, f64)> = bs.iter().copied().zip(w.iter().copied()).collect();
        terms.push((z, *zc));
        m.add_row(terms, RowSense::Le, *rhs).unwrap();
    }
    let mut terms: Vec<(VarId, f64)> = bs.iter().copied().zip(p.obj.iter().copied()).collect();
    terms.push((z, p.zobj));
    m.set_objective(Objective::maximize(terms));
    m
}

/// Exhaustive enumeration of the binaries; for each assignment the single
/// continuous variable ranges over an interval cut out by the rows.
pub fn enumerate_mip(p: &Mip) -> Option<f64> {
    let nb = p.obj.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let bits: Vec<f64> = (0..nb).map(|j| (mask >> j & 1) as f64).collect();
        let (mut lo, mut hi) = (-3.0f64, 3.0f64);
        let mut ok = true;
        for ((w, zc), rhs) in p.weights.iter().zip(&p.zcoef).zip(&p.rhs) {
            let slack = rhs - w.iter().zip(&bits).map(|(a, b)| a * b).sum::<f64>();
            if *zc > 0.0 {
                hi = hi.min(slack / zc);
            } else if *zc < 0.0 {
                lo = lo.max(slack / zc);
            } else if slack < 0.0 {
                ok = false;
            }
        }
        if !ok || lo > hi + 1e-12 {
            continue;
        }
        let z = if p.zobj >= 0.0 { hi } else { lo };
        let v = p.obj.iter().zip(&bits).map(|(a, b)| a * b).sum::<f64>() + p.zobj * z;
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    best
}

/// Bounding set over a random 2-D grid with arbitrary ordered bounds.
pub fn random_bounding_set(r: &mut ChaCha8Rng) -> polyreach::bounding::BoundingSet {
    let axes: Vec<Vec<f64>> = (0..2)
        .map(|_| {
            let m = r.gen_range(2..=4);
            let mut v: Vec<f64> = (0..m).map(|_| r.gen_range(-3.0..3.0)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
            if v.len() < 2 {
                v = vec![-1.0, 1.0];
            }
            v
        })
        .collect();
    let g = polyreach::grid::Grid::new(axes).unwrap();
    let lower: Vec<f64> = (0..g.len()).map(|_| r.gen_range(-5.0..5.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + r.gen_range(0.0..3.0)).collect();
    polyreach::bounding::BoundingSet::new(vec![1, 2], g, lower, upper).unwrap()
}
