mod common;

use common::{random_box, random_expr, rng, sample_box};
use polyreach::expr::{find_sign_changes, parse, Expr, ExprError, Interval};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>(), depth in 0usize..5, dims in 1usize..4) {
        let e = random_expr(&mut rng(seed), depth, dims);
        let back = parse(&e.to_string()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn derivative_matches_central_difference(seed in any::<u64>()) {
        let mut r = rng(seed);
        let e = random_expr(&mut r, 3, 1);
        let d = e.differentiate(1);
        for _ in 0..100 {
            let x = r.gen_range(-1.5..1.5);
            let h = 1e-6;
            let fd = (e.evaluate(&[x + h]).unwrap() - e.evaluate(&[x - h]).unwrap()) / (2.0 * h);
            let v = d.evaluate(&[x]).unwrap();
            prop_assert!((v - fd).abs() <= 1e-4 * (1.0 + v.abs()), "{e} at {x}: {v} vs {fd}");
        }
    }

    #[test]
    fn interval_evaluation_contains_samples(seed in any::<u64>(), dims in 1usize..4) {
        let mut r = rng(seed);
        let e = random_expr(&mut r, 3, dims);
        let bx = random_box(&mut r, dims);
        let iv = e.interval_evaluate(&bx).unwrap();
        for _ in 0..10_000 {
            let x = sample_box(&mut r, &bx);
            let v = e.evaluate(&x).unwrap();
            prop_assert!(iv.lo <= v && v <= iv.hi, "{e}: {v} outside [{}, {}]", iv.lo, iv.hi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn isolated_roots_are_zeros(seed in any::<u64>()) {
        let mut r = rng(seed);
        let base = random_expr(&mut r, 2, 1);
        let c = base.evaluate(&[r.gen_range(-1.0..1.0)]).unwrap();
        let e = Expr::sub(base, Expr::constant(c));
        let dom = Interval::new(-1.5, 1.5);
        let found = match find_sign_changes(&e, dom, 1e-10) {
            Ok(f) => f,
            // intervals cannot separate a cancelling expression like `x1 - x1`
            // from zero; the reported cluster must then really be flat zero
            Err(ExprError::RootCluster { lo, hi }) => {
                for k in 0..=10 {
                    let t = lo + (hi - lo) * k as f64 / 10.0;
                    prop_assert!(e.evaluate(&[t]).unwrap().abs() <= 1e-12, "{e} at {t}");
                }
                return Ok(());
            }
            Err(err) => return Err(TestCaseError::fail(err.to_string())),
        };
        if found.identically_zero {
            return Ok(());
        }
        for root in &found.roots {
            let z = root.x;
            let scale = (0..=20)
                .map(|k| {
                    let t = (z - 1e-3 + 1e-4 * k as f64).clamp(dom.lo, dom.hi);
                    e.evaluate(&[t]).unwrap().abs()
                })
                .fold(1.0, f64::max);
            let fz = e.evaluate(&[z]).unwrap();
            prop_assert!(fz.abs() <= 1e-6 * scale, "{e}: f({z}) = {fz}");
            if root.crossing {
                let (a, b) = (root.bracket.lo, root.bracket.hi);
                let (fa, fb) = (e.evaluate(&[a]).unwrap(), e.evaluate(&[b]).unwrap());
                prop_assert!(fa * fb <= 1e-12 * scale * scale, "{e}: no sign change over [{a}, {b}]");
            }
        }
    }
}
