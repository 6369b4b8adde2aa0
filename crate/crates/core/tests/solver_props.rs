mod common;

use common::{build_mip, enumerate_mip, random_mip, rng};
use polyreach::milp::{MilpModel, Objective, RowSense, VarId};
use polyreach::solver::{solve_lp, solve_milp, LpStatus, MilpOptions, MilpStatus};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Lp {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn random_lp(r: &mut ChaCha8Rng) -> Lp {
    let n = r.gen_range(2..=3);
    let m = r.gen_range(1..=4);
    let int = |r: &mut ChaCha8Rng, k: i32| r.gen_range(-k..=k) as f64;
    Lp {
        a: (0..m)
            .map(|_| (0..n).map(|_| int(r, 4)).collect())
            .collect(),
        b: (0..m).map(|_| int(r, 6)).collect(),
        c: (0..n).map(|_| int(r, 3)).collect(),
        lo: (0..n).map(|_| -(r.gen_range(0..=4) as f64)).collect(),
        hi: (0..n).map(|_| r.gen_range(0..=4) as f64).collect(),
    }
}

fn build(lp: &Lp) -> (MilpModel, Vec<VarId>) {
    let mut m = MilpModel::new();
    let xs: Vec<VarId> = (0..lp.c.len())
        .map(|j| m.continuous(format!("x{j}"), lp.lo[j], lp.hi[j]).unwrap())
        .collect();
    for (row, rhs) in lp.a.iter().zip(&lp.b) {
        m.add_row(
            xs.iter().copied().zip(row.iter().copied()).collect(),
            RowSense::Le,
            *rhs,
        )
        .unwrap();
    }
    m.set_objective(Objective::maximize(
        xs.iter().copied().zip(lp.c.iter().copied()).collect(),
    ));
    (m, xs)
}

/// Solves the square system by Gaussian elimination; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                for k in c..n {
                    a[i][k] -= f * a[c][k];
                }
                b[i] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all basic solutions: every choice of `n` tight
/// constraints among rows and bounds.
fn vertex_enumeration(lp: &Lp) -> Option<f64> {
    let n = lp.c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.a.iter().cloned().zip(lp.b.iter().copied()).collect();
    for j in 0..n {
        let e: Vec<f64> = (0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect();
        planes.push((e.clone(), lp.lo[j]));
        planes.push((e, lp.hi[j]));
    }
    let mut best: Option<f64> = None;
    let k = planes.len();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let chosen: Vec<&(Vec<f64>, f64)> = (0..k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &planes[i])
            .collect();
        let Some(x) = solve_square(
            chosen.iter().map(|p| p.0.clone()).collect(),
            chosen.iter().map(|p| p.1).collect(),
        ) else {
            continue;
        };
        let feasible =
            (0..n).all(|j| x[j] >= lp.lo[j] - 1e-9 && x[j] <= lp.hi[j] + 1e-9)
                && lp.a.iter().zip(&lp.b).all(|(row, b)| {
                    row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() <= b + 1e-9
                });
        if feasible {
            let v: f64 = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed));
        let (m, _) = build(&lp);
        let s = solve_lp(&m);
        match vertex_enumeration(&lp) {
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best).abs() <= 1e-6, "{} vs {best}", s.objective);
                prop_assert!(m.max_violation(&s.x) <= 1e-7);
            }
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn complementary_slackness(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed));
        let (m, _) = build(&lp);
        let s = solve_lp(&m);
        prop_assume!(s.status == LpStatus::Optimal);
        // minimization form: min -c'x
        for (i, (row, b)) in lp.a.iter().zip(&lp.b).enumerate() {
            let slack = b - row.iter().zip(&s.x).map(|(a, v)| a * v).sum::<f64>();
            prop_assert!(s.duals[i] <= 1e-9, "row {i} dual {} has the wrong sign", s.duals[i]);
            prop_assert!((s.duals[i] * slack).abs() <= 1e-6, "row {i}: y = {}, slack = {slack}", s.duals[i]);
        }
        for j in 0..lp.c.len() {
            let d = -lp.c[j] - lp.a.iter().zip(&s.duals).map(|(row, y)| row[j] * y).sum::<f64>();
            prop_assert!((d - s.reduced_costs[j]).abs() <= 1e-6, "reduced cost {j}: {d} vs {}", s.reduced_costs[j]);
            let gap = (s.x[j] - lp.lo[j]).abs().min((lp.hi[j] - s.x[j]).abs());
            prop_assert!((d * gap).abs() <= 1e-6, "column {j}: d = {d} off its bound by {gap}");
        }
    }

    #[test]
    fn branch_and_bound_matches_enumeration(seed in any::<u64>(), nb in 1usize..9) {
        let p = random_mip(&mut rng(seed), nb);
        let res = solve_milp(&build_mip(&p), &MilpOptions::default());
        match enumerate_mip(&p) {
            Some(best) => {
                prop_assert_eq!(res.status, MilpStatus::Optimal);
                let inc = res.incumbent.unwrap();
                prop_assert!((inc - best).abs() <= 1e-6, "{inc} vs {best}");
                prop_assert!(res.bound >= best - 1e-6);
            }
            None => prop_assert_eq!(res.status, MilpStatus::Infeasible),
        }
    }

    #[test]
    fn solves_are_deterministic(seed in any::<u64>(), nb in 1usize..9) {
        let m = build_mip(&random_mip(&mut rng(seed), nb));
        let a = solve_milp(&m, &MilpOptions::default());
        let b = solve_milp(&m, &MilpOptions::default());
        prop_assert_eq!(a.pivots, b.pivots);
        prop_assert_eq!(a.nodes, b.nodes);
        prop_assert_eq!(a.bound.to_bits(), b.bound.to_bits());
        prop_assert_eq!(a.incumbent.map(f64::to_bits), b.incumbent.map(f64::to_bits));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(a.values.as_deref().map(bits), b.values.as_deref().map(bits));
    }
}
