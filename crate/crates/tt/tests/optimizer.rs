use std::convert::Infallible;

use proptest::prelude::*;
use seirhcd_tt::{tt_optimize, TTConfig};

fn ok(v: f64) -> Result<f64, Infallible> {
    Ok(v)
}

fn rastrigin(q: &[f64]) -> f64 {
    10.0 * q.len() as f64
        + q.iter()
            .map(|x| x * x - 10.0 * (2.0 * std::f64::consts::PI * x).cos())
            .sum::<f64>()
}

fn grid_min(cfg: &TTConfig, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..cfg.n {
        for j in 0..cfg.n {
            best = best.min(f(&cfg.point(&[i, j])));
        }
    }
    best
}

#[test]
fn bowl_optimum_is_the_nearest_grid_node() {
    let cfg = TTConfig::new(vec![0.0; 2], vec![1.0; 2], 64, 2, 4);
    let res = tt_optimize(|q| ok((q[0] - 0.3).powi(2) + (q[1] - 0.7).powi(2)), &cfg).unwrap();
    let nearest: Vec<usize> = [0.3, 0.7].iter().map(|c: &f64| (c * 63.0).round() as usize).collect();
    assert_eq!(res.idx_best, nearest);
    let cell = res.cell_size[0];
    assert!(res.j_best <= 2.0 * cell * cell);
}

#[test]
fn rastrigin_reaches_the_grid_optimum_basin() {
    let mut cfg = TTConfig::new(vec![-5.12; 2], vec![5.12; 2], 128, 4, 10);
    cfg.seed = 7;
    let res = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    let exhaustive = grid_min(&cfg, rastrigin);
    assert!(res.j_best <= 1.0, "J_best = {}", res.j_best);
    assert!(res.j_best >= exhaustive);
    assert!(res.evaluations < cfg.n * cfg.n);
}

#[test]
fn best_value_never_increases_along_the_log() {
    let cfg = TTConfig::new(vec![-5.12; 3], vec![5.12; 3], 32, 3, 6);
    let res = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    for w in res.log.windows(2) {
        assert!(w[1].j_best <= w[0].j_best);
        assert!(w[1].evaluations >= w[0].evaluations);
        assert!(w[1].iteration >= w[0].iteration);
    }
    for e in &res.log {
        assert!(e.alpha <= e.j_best);
    }
    assert_eq!(res.log.last().unwrap().j_best, res.j_best);
}

#[test]
fn evaluation_cap_is_respected() {
    let mut cfg = TTConfig::new(vec![-5.12; 4], vec![5.12; 4], 20, 3, 8);
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let f = |q: &[f64]| {
        calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        ok(rastrigin(q))
    };
    let res = tt_optimize(f, &cfg).unwrap();
    let n_calls = calls.load(std::sync::atomic::Ordering::Relaxed);
    assert_eq!(n_calls, res.evaluations);
    assert!(n_calls <= cfg.budget());

    cfg.max_evals = Some(150);
    let res = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    assert!(res.evaluations <= 150);
}

#[test]
fn runs_are_deterministic_under_a_seed() {
    let mut cfg = TTConfig::new(vec![-5.12; 3], vec![5.12; 3], 24, 3, 4);
    cfg.seed = 11;
    let a = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    let b = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    assert_eq!(a.idx_best, b.idx_best);
    assert_eq!(a.j_best.to_bits(), b.j_best.to_bits());
    assert_eq!(a.log, b.log);
}

#[test]
fn stagnation_stops_early() {
    let mut cfg = TTConfig::new(vec![0.0; 2], vec![1.0; 2], 16, 2, 50);
    cfg.stagnation = Some(3);
    let res = tt_optimize(|q| ok(q[0] + q[1]), &cfg).unwrap();
    assert!(res.passes < 50);
    assert_eq!(res.j_best, 0.0);
}

#[test]
fn config_round_trips_through_json() {
    let mut cfg = TTConfig::new(vec![0.0, -1.0], vec![1.0, 1.0], 33, 4, 6);
    cfg.seed = 3;
    cfg.stagnation = Some(3);
    let text = serde_json::to_string(&cfg).unwrap();
    let back: TTConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg, back);
    assert!(serde_json::from_str::<TTConfig>(r#"{"b_min":[0],"b_max":[1],"n":4,"r_max":1,"n_tt":1,"bogus":1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separable_objectives_match_per_dimension_minima(
        centers in proptest::collection::vec(-1.0f64..1.0, 2..5),
        weights in proptest::collection::vec(0.1f64..5.0, 4),
        n in 5usize..24,
        seed in 0u64..1000,
    ) {
        let d = centers.len();
        let mut cfg = TTConfig::new(vec![-1.0; d], vec![1.0; d], n, 2, 4);
        cfg.seed = seed;
        let term = |k: usize, x: f64| weights[k] * (x - centers[k]).powi(2);
        let f = |q: &[f64]| ok(q.iter().enumerate().map(|(k, &x)| term(k, x)).sum());
        let res = tt_optimize(f, &cfg).unwrap();
        let mut expected = 0.0;
        for k in 0..d {
            let best = (0..n).map(|i| term(k, cfg.node(k, i))).fold(f64::INFINITY, f64::min);
            expected += best;
            prop_assert_eq!(term(k, res.q_best[k]), best);
        }
        prop_assert!((res.j_best - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn result_is_a_grid_node(seed in 0u64..500, n in 3usize..40) {
        let mut cfg = TTConfig::new(vec![-2.0, 0.5, 10.0], vec![3.0, 0.75, 11.0], n, 3, 3);
        cfg.seed = seed;
        let res = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
        prop_assert_eq!(&res.q_best, &cfg.point(&res.idx_best));
        prop_assert!(res.idx_best.iter().all(|&i| i < n));
        prop_assert!(res.evaluations <= cfg.budget());
    }
}
