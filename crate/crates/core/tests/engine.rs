use proptest::prelude::*;

use rdelab::catalog::{build_spec, closed_cdf, init_sampler, parse_params, ParamMap};
use rdelab::distance::{ks_distance, marginal_ks, wasserstein_p};
use rdelab::engine::{apply_t, apply_t2, eval_sample, iterate, EvalOpts, IterConfig};
use rdelab::pool::{BivariatePool, Delta, SamplePool};
use rdelab::{registry, Rde, Sampler, StateSpace, Value};

fn none() -> ParamMap {
    ParamMap::new()
}

fn spec(id: &str, kv: &[&str]) -> std::sync::Arc<dyn Rde> {
    build_spec(id, &parse_params(kv).unwrap()).unwrap()
}

fn init_pool(id: &str, n: usize, seed: u64) -> SamplePool {
    SamplePool::sample(init_sampler(id, &none()).unwrap().as_ref(), n, seed)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn apply_t_is_deterministic_across_thread_counts() {
    for id in [
        "quicksort",
        "meanfield_matching",
        "frozen_perc",
        "gw_matching",
        "lindley",
    ] {
        let s = spec(id, &[]);
        let pool = init_pool(id, 4000, 2);
        let a = in_pool(1, || apply_t(&pool, s.as_ref(), 9).unwrap());
        let b = in_pool(7, || apply_t(&pool, s.as_ref(), 9).unwrap());
        let c = apply_t(&pool, s.as_ref(), 9).unwrap();
        assert_eq!(a, b, "{id}");
        assert_eq!(a, c, "{id}");
        assert_ne!(a, apply_t(&pool, s.as_ref(), 10).unwrap(), "{id}");
    }
}

#[test]
fn truncation_is_exact_when_the_horizon_doubles() {
    let reg = registry();
    let mut checked = 0;
    for e in reg.iter() {
        let raw = none();
        let s = build_spec(e.id(), &raw).unwrap();
        if !s.unbounded() {
            continue;
        }
        let mut pool = SamplePool::sample(init_sampler(e.id(), &raw).unwrap().as_ref(), 3000, 4);
        for g in 0..3 {
            pool = apply_t(&pool, s.as_ref(), 100 + g).unwrap();
        }
        let bound = s.support_bound(&pool.values);
        let one = EvalOpts {
            bound: bound.clone(),
            horizon_factor: 1,
        };
        let two = EvalOpts {
            bound,
            horizon_factor: 2,
        };
        for i in 0..500 {
            let (a, capped) = eval_sample(s.as_ref(), &pool.values, 77, i, &one);
            if capped {
                continue;
            }
            let (b, _) = eval_sample(s.as_ref(), &pool.values, 77, i, &two);
            assert_eq!(a, b, "{} sample {i}", e.id());
        }
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} unbounded entries");
}

#[test]
fn t2_marginal_matches_t() {
    for id in ["quicksort", "gw_matching", "frozen_perc"] {
        let s = spec(id, &[]);
        let n = 50_000;
        let pool = init_pool(id, n, 3);
        let bp = BivariatePool::independent(&pool, 5);
        let out = apply_t2(&bp, s.as_ref(), 6).unwrap();
        let single = apply_t(&pool, s.as_ref(), 8).unwrap();
        let bound = 4.0 * 1.36 / (n as f64).sqrt();
        assert!(
            marginal_ks(&out.marginal_x(), &single).unwrap() < bound,
            "{id}"
        );
        assert!(
            marginal_ks(&out.marginal_y(), &single).unwrap() < bound,
            "{id}"
        );
    }
}

#[test]
fn oracle_stationarity_for_closed_forms() {
    let reg = registry();
    let mut checked = 0;
    for e in reg.iter() {
        let Ok(oracle) = closed_cdf(e.id(), &none()) else {
            continue;
        };
        let s = build_spec(e.id(), &none()).unwrap();
        let sampler: &dyn Sampler = oracle.as_ref();
        let pool = SamplePool::sample(sampler, 100_000, 21);
        let image = apply_t(&pool, s.as_ref(), 22).unwrap();
        let ks = marginal_ks(&pool, &image).unwrap();
        assert!(ks < 0.01, "{}: KS {ks}", e.id());
        assert!(
            (pool.frac_inf() - image.frac_inf()).abs() < 0.01,
            "{}",
            e.id()
        );
        checked += 1;
    }
    assert!(checked >= 6, "only {checked} closed forms");
}

fn zero_is_minimal(st: &StateSpace) -> bool {
    match *st {
        StateSpace::Interval { lo, .. } => lo == 0.0,
        StateSpace::Discrete { lo, .. } | StateSpace::Integers { lo } => lo == 0,
        StateSpace::Vector { .. } => false,
    }
}

#[test]
fn monotone_specs_have_monotone_iterates() {
    let reg = registry();
    let n = 50_000;
    let slack = 3.0 / (n as f64).sqrt();
    let mut checked = 0;
    for e in reg.iter() {
        let s = build_spec(e.id(), &none()).unwrap();
        if !s.monotone() || !zero_is_minimal(&s.state()) {
            continue;
        }
        let mut pool = SamplePool::sample(&Delta(Value::ZERO), n, 1);
        let mut prev = pool.summary().quantiles;
        for g in 0..8 {
            pool = apply_t(&pool, s.as_ref(), 40 + g).unwrap();
            let q = pool.summary().quantiles;
            for (k, (a, b)) in prev.iter().zip(&q).enumerate() {
                let tol = slack * (1.0 + a.abs().min(1e6));
                assert!(
                    *b >= *a - tol || b.is_infinite(),
                    "{} gen {g} level {k}: {a} -> {b}",
                    e.id()
                );
            }
            prev = q;
        }
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} monotone entries");
}

#[test]
fn iterate_reports_are_consistent() {
    let s = spec("quicksort", &[]);
    let (pool, rep) = iterate(
        s.as_ref(),
        &init_pool("quicksort", 5000, 1),
        &IterConfig {
            tol: 0.02,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(pool.len(), 5000);
    assert!(rep
        .records
        .windows(2)
        .all(|w| w[1].generation > w[0].generation));
    assert!(rep.records.iter().all(|r| r.distance >= 0.0));
}

fn brute_force_wp(a: &[f64], b: &[f64], p: f64) -> f64 {
    fn perms(k: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                perms(k, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut all = Vec::new();
    perms(
        a.len(),
        &mut vec![false; a.len()],
        &mut Vec::new(),
        &mut all,
    );
    all.iter()
        .map(|s| {
            (a.iter()
                .zip(s)
                .map(|(x, &j)| (x - b[j]).abs().powf(p))
                .sum::<f64>()
                / a.len() as f64)
                .powf(1.0 / p)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn wasserstein_two_point_example() {
    let a = SamplePool::from_reals(&[0.0, 10.0]);
    let b = SamplePool::from_reals(&[0.0, 0.0]);
    assert!((wasserstein_p(&a, &b, 2.0).unwrap() - 50f64.sqrt()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn size_is_preserved(n in 2usize..400, seed in any::<u64>()) {
        let s = spec("gw_matching", &[]);
        let pool = init_pool("gw_matching", n, seed);
        prop_assert_eq!(apply_t(&pool, s.as_ref(), seed).unwrap().len(), n);
    }

    #[test]
    fn diagonal_stays_diagonal(n in 2usize..300, seed in any::<u64>(), which in 0usize..4) {
        let id = ["quicksort", "frozen_perc", "meanfield_matching", "noisy_voter"][which];
        let s = spec(id, &[]);
        let bp = BivariatePool::diagonal(&init_pool(id, n, seed));
        let out = apply_t2(&bp, s.as_ref(), seed ^ 1).unwrap();
        prop_assert_eq!(&out.x, &out.y);
    }

    #[test]
    fn wasserstein_matches_brute_force(
        a in prop::collection::vec(-10.0f64..10.0, 1..=6),
        shift in prop::collection::vec(-10.0f64..10.0, 6),
        p in 1.0f64..3.0,
    ) {
        let b: Vec<f64> = shift[..a.len()].to_vec();
        let (pa, pb) = (SamplePool::from_reals(&a), SamplePool::from_reals(&b));
        let w = wasserstein_p(&pa, &pb, p).unwrap();
        prop_assert!((w - brute_force_wp(&a, &b, p)).abs() < 1e-9);
        prop_assert!((w - wasserstein_p(&pb, &pa, p).unwrap()).abs() < 1e-12);
        prop_assert_eq!(wasserstein_p(&pa, &pa, p).unwrap(), 0.0);
    }

    #[test]
    fn wasserstein_triangle(
        a in prop::collection::vec(-5.0f64..5.0, 20),
        b in prop::collection::vec(-5.0f64..5.0, 20),
        c in prop::collection::vec(-5.0f64..5.0, 20),
        p in 1.0f64..4.0,
    ) {
        let (a, b, c) = (SamplePool::from_reals(&a), SamplePool::from_reals(&b), SamplePool::from_reals(&c));
        let ab = wasserstein_p(&a, &b, p).unwrap();
        let bc = wasserstein_p(&b, &c, p).unwrap();
        let ac = wasserstein_p(&a, &c, p).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn ks_is_a_bounded_symmetric_distance(
        a in prop::collection::vec(-5.0f64..5.0, 2..50),
        b in prop::collection::vec(-5.0f64..5.0, 2..50),
    ) {
        let (pa, pb) = (SamplePool::from_reals(&a), SamplePool::from_reals(&b));
        let d = ks_distance(&pa, &pb).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_distance(&pb, &pa).unwrap());
        prop_assert_eq!(ks_distance(&pa, &pa).unwrap(), 0.0);
    }
}
