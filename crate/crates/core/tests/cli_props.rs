mod common;

use std::path::{Path, PathBuf};

use clap::Parser;
use common::{matmul_forward, random_network, random_system, rng, sample_box};
use polyreach::cli::{emit_plot_data, main_with, run_verification, Cli, VerifyArgs};
use polyreach::config::{load_system_config, BenchmarkConfig, ControllerConfig};
use polyreach::expr::Interval;
use polyreach::netfile::{load_network, write_network};
use polyreach::reach::{AvoidRegion, AvoidShape, Polarity};
use proptest::prelude::*;
use rand::Rng;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(name: &str) -> (polyreach::cli::RunOutcome, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let o = run_verification(&VerifyArgs::new(configs().join(name), out.path())).unwrap();
    (o, out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut spec = random_system(seed, r.gen_range(1..20));
        let n = spec.n;
        if r.gen_bool(0.5) {
            spec.goal = Some((0..n).map(|_| Interval::new(-r.gen_range(0.0..3.0), r.gen_range(0.0..3.0))).collect());
        }
        for _ in 0..r.gen_range(0..3) {
            let shape = if r.gen_bool(0.5) {
                AvoidShape::Box((0..n).map(|_| Interval::new(r.gen_range(-5.0..0.0), r.gen_range(0.0..5.0))).collect())
            } else {
                AvoidShape::HalfSpace { coeffs: (0..n).map(|_| r.gen_range(-2.0..2.0)).collect(), rhs: r.gen_range(-1.0..1.0) }
            };
            let t_from = r.gen_range(0..5);
            spec.avoid.push(AvoidRegion {
                t_from,
                t_to: t_from + r.gen_range(0..5),
                shape,
                polarity: if r.gen_bool(0.5) { Polarity::Inside } else { Polarity::Outside },
            });
        }
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.nnet"), write_network(spec.controller.as_ref().unwrap())).unwrap();
        let ctrl = ControllerConfig { file: "c.nnet".into(), constant_outputs: Vec::new() };
        let path = dir.path().join("sys.toml");
        std::fs::write(&path, BenchmarkConfig::from_spec(&spec, Some(ctrl.clone())).to_toml()).unwrap();
        let first = load_system_config(&path).unwrap();
        prop_assert_eq!(&first.spec, &spec);
        std::fs::write(&path, BenchmarkConfig::from_spec(&first.spec, Some(ctrl)).to_toml()).unwrap();
        let second = load_system_config(&path).unwrap();
        prop_assert_eq!(&second.spec, &first.spec);
        prop_assert_eq!(second.config, first.config);
    }

    #[test]
    fn written_networks_load_back_exactly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let hidden: Vec<usize> = (0..r.gen_range(0..3)).map(|_| r.gen_range(1..6)).collect();
        let (n_in, n_out) = (r.gen_range(1..4), r.gen_range(1..4));
        let net = random_network(&mut r, n_in, &hidden, n_out, 2.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.nnet");
        std::fs::write(&p, write_network(&net)).unwrap();
        prop_assert_eq!(load_network(&p).unwrap(), net);
    }
}

#[test]
fn shipped_networks_match_matrix_multiply() {
    let mut checked = 0;
    for entry in std::fs::read_dir(configs().join("networks")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("nnet") {
            continue;
        }
        let net = load_network(&path).unwrap();
        let bx = vec![Interval::new(-10.0, 10.0); net.input_dim()];
        let mut r = rng(3);
        for _ in 0..100 {
            let x = sample_box(&mut r, &bx);
            let (got, want) = (net.forward(&x), matmul_forward(&net, &x));
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "{}: {g} vs {w}", path.display());
            }
        }
        checked += 1;
    }
    assert!(checked >= 1);
}

#[test]
fn fixtures_cover_each_exit_code() {
    for (name, code) in [
        ("fixtures/exit0.toml", 0),
        ("fixtures/exit1.toml", 1),
        ("fixtures/exit2.toml", 2),
    ] {
        let (o, out) = run(name);
        assert_eq!(o.exit_code, code, "{name}: {}", o.summary);
        for f in ["results.json", "steps.csv", "plot.csv"] {
            assert!(out.path().join(f).is_file(), "{name} is missing {f}");
        }
        let json: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.path().join("results.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(json["steps"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn binary_entry_point_returns_exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let args = |cfg: PathBuf| {
        Cli::try_parse_from([
            "polyreach",
            "verify",
            cfg.to_str().unwrap(),
            "--out",
            out.path().to_str().unwrap(),
        ])
        .unwrap()
    };
    assert_eq!(main_with(args(configs().join("fixtures/exit1.toml"))), 1);
    assert_eq!(main_with(args(configs().join("pendulum.toml"))), 2);
    assert_eq!(main_with(args(configs().join("no-such-file.toml"))), 2);
}

#[test]
fn zero_dynamics_keep_the_initial_box() {
    let (o, out) = run("zero_smoke.toml");
    assert_eq!(o.exit_code, 0);
    let init = &o.trajectory.steps[0].bx;
    assert_eq!(o.trajectory.steps.len(), 5);
    for s in &o.trajectory.steps {
        for (a, b) in s.bx.iter().zip(init) {
            assert!(
                (a.lo - b.lo).abs() <= 1e-8 && (a.hi - b.hi).abs() <= 1e-8,
                "t={}: {:?}",
                s.t,
                s.bx
            );
        }
    }
    let plot = std::fs::read_to_string(out.path().join("plot.csv")).unwrap();
    let rows: Vec<&str> = plot.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.split(',').count() == 9));
}

#[test]
fn plot_dimensions_are_checked() {
    let (o, _out) = run("zero_smoke.toml");
    assert!(emit_plot_data(&o.trajectory, (1, 3)).is_err());
    assert!(emit_plot_data(&o.trajectory, (0, 1)).is_err());
    assert_eq!(
        emit_plot_data(&o.trajectory, (2, 1))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn shipped_benchmarks_carry_their_constants() {
    let read = |name: &str| {
        BenchmarkConfig::from_toml(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
    };
    let u = read("unicycle.toml");
    assert_eq!((u.n, u.delta, u.horizon), (4, 0.2, 50));
    assert_eq!(
        u.init,
        vec![[9.5, 9.55], [-4.5, -4.45], [2.1, 2.11], [1.5, 1.51]]
    );
    assert_eq!(u.perturbation.unwrap()[3], [-1e-4, 1e-4]);
    assert_eq!(
        u.goal.unwrap(),
        vec![[-0.6, 0.6], [-0.2, 0.2], [-0.06, 0.06], [-0.3, 0.3]]
    );
    assert_eq!(
        u.controller.unwrap().constant_outputs,
        vec![(1, 0.0), (2, 0.0)]
    );

    let t = read("tora.toml");
    assert_eq!((t.n, t.delta, t.horizon), (4, 0.1, 20));
    assert_eq!(
        t.init,
        vec![[0.6, 0.7], [-0.7, -0.6], [-0.4, -0.3], [0.5, 0.6]]
    );
    assert_eq!(t.avoid[0].bx.clone().unwrap(), vec![[-2.0, 2.0]; 4]);
    assert_eq!(t.avoid[0].polarity, "outside");

    let smoke = read("unicycle_smoke.toml");
    assert_eq!(smoke.horizon, 5);
    assert_eq!(smoke.init, u.init);
}

#[test]
fn missing_inputs_are_reported_by_field() {
    let err = load_system_config(&configs().join("tora.toml"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("controller.file"), "{err}");
    let err = load_system_config(&configs().join("pendulum.toml"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("parameters.c1"), "{err}");
    let err = load_system_config(&configs().join("acc.toml"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("parameters.c1"), "{err}");
}
