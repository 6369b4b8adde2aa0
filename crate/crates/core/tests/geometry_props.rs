mod common;

use common::{eps_num, random_expr, rng};
use polyreach::expr::{parse, Expr, Interval};
use polyreach::grid::Grid;
use polyreach::triangulation::{delaunay_triangulate, grid_star, PointSet};
use polyreach::univariate::{convexity_partition, univariate_bounds, UnivariateOptions};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_grid(r: &mut ChaCha8Rng, dims: usize) -> Grid {
    let axes = (0..dims)
        .map(|_| {
            let m = r.gen_range(2..=4);
            let mut v: Vec<f64> = (0..m).map(|_| r.gen_range(-2.0..2.0)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if v.len() < 2 {
                v = vec![-1.0, 1.0];
            }
            v
        })
        .collect();
    Grid::new(axes).unwrap()
}

/// Circumcentre by Gaussian elimination on `2 (v_j - v_0) . c = |v_j|^2 - |v_0|^2`.
fn circumcentre(vs: &[&[f64]]) -> Vec<f64> {
    let n = vs.len() - 1;
    let mut a: Vec<Vec<f64>> = (1..=n)
        .map(|j| {
            let mut row: Vec<f64> = (0..n).map(|k| 2.0 * (vs[j][k] - vs[0][k])).collect();
            let rhs: f64 = (0..n)
                .map(|k| vs[j][k] * vs[j][k] - vs[0][k] * vs[0][k])
                .sum();
            row.push(rhs);
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                for k in c..=n {
                    a[i][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn univariate_bounds_enclose(seed in any::<u64>(), k in 1usize..5) {
        let mut r = rng(seed);
        let f = random_expr(&mut r, 3, 1);
        let a = r.gen_range(-1.5..1.0);
        let b = a + r.gen_range(0.05..2.0);
        let (lo, hi) = univariate_bounds(&f, a, b, &UnivariateOptions { divisions: k, eps_num: None }).unwrap();
        let scale = Interval::new(
            lo.values.iter().copied().fold(f64::INFINITY, f64::min),
            hi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let eps = eps_num(scale);
        for _ in 0..10_000 {
            let x = r.gen_range(a..=b);
            let v = f.evaluate(&[x]).unwrap();
            prop_assert!(lo.eval(x) - eps <= v && v <= hi.eval(x) + eps, "{f} at {x}");
        }
    }

    #[test]
    fn bounds_pinned_at_piece_endpoints(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_expr(&mut r, 2, 1);
        let (a, b) = (-1.0, 1.0);
        let part = convexity_partition(&f, a, b).unwrap();
        let (lo, hi) = univariate_bounds(&f, a, b, &UnivariateOptions::default()).unwrap();
        let m = lo.values.iter().chain(&hi.values).fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-9 * (1.0 + m);
        for (i, &z) in part.points.iter().enumerate() {
            let slack = [i.checked_sub(1), Some(i)]
                .into_iter()
                .flatten()
                .filter_map(|p| part.slack.get(p))
                .fold(0.0f64, |s, v| s.max(*v));
            let fz = f.evaluate(&[z]).unwrap();
            let tol = eps + slack + 1e-12 * (1.0 + fz.abs());
            prop_assert!((fz - lo.eval(z)).abs() <= tol, "{f}: lower at {z}");
            prop_assert!((hi.eval(z) - fz).abs() <= tol, "{f}: upper at {z}");
        }
    }

    #[test]
    fn simplex_volumes_partition_the_grid(seed in any::<u64>(), dims in 1usize..4) {
        let g = random_grid(&mut rng(seed), dims);
        let t = delaunay_triangulate(&PointSet::from_grid(&g)).unwrap();
        let total: f64 = (0..t.len()).map(|s| t.volume(s)).sum();
        let want: f64 = g.axes().iter().map(|a| a[a.len() - 1] - a[0]).product();
        prop_assert!((total - want).abs() <= 1e-9 * want, "{total} vs {want}");
    }

    #[test]
    fn circumballs_are_empty(seed in any::<u64>(), dims in 2usize..4, scattered in any::<bool>()) {
        let mut r = rng(seed);
        let ps = if scattered {
            let mut pts: Vec<Vec<f64>> = (0..(1 << dims)).map(|m| (0..dims).map(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect();
            pts.extend((0..6).map(|_| (0..dims).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>()));
            PointSet::from_points(dims, pts)
        } else {
            PointSet::from_grid(&random_grid(&mut r, dims))
        };
        let t = delaunay_triangulate(&ps).unwrap();
        for s in 0..t.len() {
            let vs = t.vertices(s);
            let c = circumcentre(&vs);
            let r2 = dist2(vs[0], &c);
            for (i, p) in ps.points().iter().enumerate() {
                if t.simplices()[s].contains(&i) {
                    continue;
                }
                prop_assert!(dist2(p, &c) >= r2 - 1e-9 * (1.0 + r2), "point {i} inside the ball of simplex {s}");
            }
        }
    }

    #[test]
    fn locate_reconstructs_the_point(seed in any::<u64>(), dims in 1usize..4) {
        let mut r = rng(seed);
        let g = random_grid(&mut r, dims);
        let t = delaunay_triangulate(&PointSet::from_grid(&g)).unwrap();
        let (lo, hi) = (g.lower(), g.upper());
        for _ in 0..50 {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| r.gen_range(*a..=*b)).collect();
            let bc = t.locate(&x).unwrap();
            let vs = t.vertices(bc.simplex);
            prop_assert!((bc.theta.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(bc.theta.iter().all(|&th| th >= -1e-9));
            for k in 0..dims {
                let y: f64 = bc.theta.iter().zip(&vs).map(|(th, v)| th * v[k]).sum();
                prop_assert!((y - x[k]).abs() <= 1e-9, "coordinate {k}: {y} vs {}", x[k]);
            }
        }
    }

    #[test]
    fn inserted_points_form_the_star(seed in any::<u64>(), dims in 1usize..4) {
        let mut r = rng(seed);
        let g = random_grid(&mut r, dims);
        let (lo, hi) = (g.lower(), g.upper());
        let q: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| r.gen_range(*a..=*b)).collect();
        let g2 = g.expanded_by(&q);
        let mut added: Vec<Vec<f64>> = g2.points().into_iter().filter(|p| g.find_point(p).is_none()).collect();
        let mut star: Vec<Vec<f64>> = grid_star(&g2, &q).unwrap().into_iter().filter(|p| g.find_point(p).is_none()).collect();
        added.sort_by(|a, b| a.partial_cmp(b).unwrap());
        star.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(added, star);
    }
}

#[test]
fn gap_is_monotone_in_divisions() {
    for f in ["sin(x1)", "cos(x1)", "exp(x1)"] {
        let e: Expr = parse(f).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let (lo, hi) = univariate_bounds(
                &e,
                -1.0,
                1.0,
                &UnivariateOptions {
                    divisions: k,
                    eps_num: None,
                },
            )
            .unwrap();
            let gap: f64 = (0..=400)
                .map(|i| -1.0 + i as f64 / 200.0)
                .map(|x| hi.eval(x) - lo.eval(x))
                .sum();
            assert!(gap <= prev + 1e-9, "{f}: k={k} gap {gap} > {prev}");
            prev = gap;
        }
    }
}

#[test]
fn high_dimensional_grids_triangulate() {
    for n in 1..=6 {
        let g = Grid::new(
            vec![vec![0.0, 0.5, 2.0]; n.min(4)]
                .into_iter()
                .chain(vec![vec![-1.0, 1.0]; n.saturating_sub(4)])
                .collect(),
        )
        .unwrap();
        let t = delaunay_triangulate(&PointSet::from_grid(&g)).unwrap();
        let total: f64 = (0..t.len()).map(|s| t.volume(s)).sum();
        let want: f64 = g.axes().iter().map(|a| a[a.len() - 1] - a[0]).product();
        assert!(
            (total - want).abs() <= 1e-9 * want,
            "n={n}: {total} vs {want}"
        );
    }
}
