mod common;

use std::collections::BTreeSet;

use common::{matmul_forward, random_bounding_set, random_network, rng, sample_box};
use polyreach::expr::{parse, Interval};
use polyreach::milp::{
    enclosure_model, encode_relu_network, propagate_preactivation_bounds, DependencyGraph,
    MilpModel, Objective, Vertex,
};
use polyreach::solver::{solve_milp_with, MilpOptions, MilpStatus};
use polyreach::univariate::{bound_univariate, UnivariateOptions};
use proptest::prelude::*;
use rand::Rng;

fn opts() -> MilpOptions {
    MilpOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn enclosure_extremes_sit_on_grid_vertices(seed in any::<u64>()) {
        let set = random_bounding_set(&mut rng(seed));
        let tri = set.triangulate().unwrap();
        let (m, v) = enclosure_model(&set, &tri).unwrap();
        let up = solve_milp_with(&m, &Objective::maximize(vec![(v.y_hi, 1.0)]), &opts());
        let lo = solve_milp_with(&m, &Objective::minimize(vec![(v.y_lo, 1.0)]), &opts());
        let umax = set.upper().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lmin = set.lower().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(up.status, MilpStatus::Optimal);
        prop_assert!((up.bound - umax).abs() <= 1e-6, "{} vs {umax}", up.bound);
        prop_assert!((lo.bound - lmin).abs() <= 1e-6, "{} vs {lmin}", lo.bound);
    }

    #[test]
    fn fixed_input_recovers_the_surface(seed in any::<u64>()) {
        let mut r = rng(seed);
        let set = random_bounding_set(&mut r);
        let tri = set.triangulate().unwrap();
        let (m, v) = enclosure_model(&set, &tri).unwrap();
        let dom: Vec<Interval> = set.grid().lower().into_iter().zip(set.grid().upper()).map(|(a, b)| Interval::new(a, b)).collect();
        for _ in 0..5 {
            let x = sample_box(&mut r, &dom);
            let mut mm = m.clone();
            mm.fix(v.x[0], x[0]);
            mm.fix(v.x[1], x[1]);
            let (l, u) = set.bounds_with(&tri, &x).unwrap();
            let up = solve_milp_with(&mm, &Objective::maximize(vec![(v.y_hi, 1.0)]), &opts());
            let lo = solve_milp_with(&mm, &Objective::minimize(vec![(v.y_lo, 1.0)]), &opts());
            prop_assert_eq!(up.status, MilpStatus::Optimal);
            prop_assert!((up.incumbent.unwrap() - u).abs() <= 1e-6, "upper at {x:?}: {:?} vs {u}", up.incumbent);
            prop_assert!((lo.incumbent.unwrap() - l).abs() <= 1e-6, "lower at {x:?}: {:?} vs {l}", lo.incumbent);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn relu_encoding_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n_in = r.gen_range(1..=3);
        let depth = r.gen_range(0..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| r.gen_range(1..=8)).collect();
        let n_out = r.gen_range(1..=2);
        let net = random_network(&mut r, n_in, &hidden, n_out, 1.0);
        let bx: Vec<Interval> = (0..n_in).map(|_| Interval::new(-1.0, 1.0)).collect();
        let mut m = MilpModel::new();
        let xs: Vec<_> = (0..n_in).map(|i| m.continuous(format!("x{i}"), -1.0, 1.0).unwrap()).collect();
        let bounds = propagate_preactivation_bounds(&net, &bx);
        let ys = encode_relu_network(&mut m, &net, &bounds, &xs, 0).unwrap();
        for _ in 0..20 {
            let x = sample_box(&mut r, &bx);
            let mut mm = m.clone();
            for (v, xi) in xs.iter().zip(&x) {
                mm.fix(*v, *xi);
            }
            let res = solve_milp_with(&mm, &Objective::maximize(vec![(ys[0], 1.0)]), &opts());
            prop_assert_eq!(res.status, MilpStatus::Optimal);
            let vals = res.values.unwrap();
            let want = matmul_forward(&net, &x);
            for (k, y) in ys.iter().enumerate() {
                prop_assert!((vals[y.0] - want[k]).abs() <= 1e-6, "output {k}: {} vs {}", vals[y.0], want[k]);
            }
        }
        let res = solve_milp_with(&m, &Objective::maximize(vec![(ys[0], 1.0)]), &opts());
        let sampled = (0..2000).map(|_| matmul_forward(&net, &sample_box(&mut r, &bx))[0]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(res.bound >= sampled - 1e-9);
    }

    #[test]
    fn denser_grids_never_raise_the_upper_bound(seed in any::<u64>(), which in 0usize..3, k in 1usize..4) {
        let f = parse(["exp(x1)", "x1 * x1", "-cos(x1)"][which]).unwrap();
        let mut r = rng(seed);
        let c = r.gen_range(-1.0..0.5);
        let d = c + r.gen_range(0.05..0.5);
        let max_upper = |k: usize| {
            let set = bound_univariate(&f, -1.0, 1.0, &UnivariateOptions { divisions: k, eps_num: None }).unwrap();
            let tri = set.triangulate().unwrap();
            let (mut m, v) = enclosure_model(&set, &tri).unwrap();
            m.tighten(v.x[0], c, d);
            solve_milp_with(&m, &Objective::maximize(vec![(v.y_hi, 1.0)]), &opts()).bound
        };
        let (coarse, fine) = (max_upper(k), max_upper(2 * k));
        prop_assert!(fine <= coarse + 1e-8, "k={k}: {fine} > {coarse} on [{c}, {d}]");
    }

    #[test]
    fn dependency_graph_shape(seed in any::<u64>(), n in 1usize..6, window in 1usize..4) {
        let mut r = rng(seed);
        let deps: Vec<BTreeSet<usize>> = (0..n).map(|_| (1..=n).filter(|_| r.gen_bool(0.4)).collect()).collect();
        let controlled: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        let g = DependencyGraph::new(deps, controlled.clone(), window);
        prop_assert_eq!(g.vertices().len(), (n + 1) * window);
        let any = controlled.iter().any(|&c| c);
        for t in 0..window {
            for i in 1..=n {
                prop_assert_eq!(g.has_edge(Vertex { t, i }, Vertex { t, i: 0 }), any);
            }
        }
    }
}
