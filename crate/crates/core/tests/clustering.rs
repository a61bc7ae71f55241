use dpmeter_core::clustering::*;
use dpmeter_core::noise::{utility_bounds, LaplaceScale};
use dpmeter_core::rng::{seeded, stream, Domain};
use dpmeter_core::stats::chi_square_statistic;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma};

/// `E|G1 − G2|` for iid `Gamma(shape, 1)` through `E|X − Y| = 2∫F(1 − F)`.
fn gini_mean_difference(shape: f64) -> f64 {
    let g = Gamma::new(shape, 1.0).unwrap();
    let upper = 60.0 + 20.0 * shape;
    let steps = 200_000;
    let h = upper / steps as f64;
    let f = |x: f64| {
        let c = g.cdf(x);
        2.0 * c * (1.0 - c)
    };
    let mut s = f(0.0) + f(upper);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn shuffle_places_every_member_uniformly() {
    let ids: Vec<u32> = (0..6).collect();
    let mut counts = [0u64; 6];
    for seed in 0..1000 {
        let cl = random_clusters(&ids, 3, &mut stream(seed, Domain::Clustering, 0, 0)).unwrap();
        let flat: Vec<u32> = cl.iter().flat_map(|c| c.members.clone()).collect();
        counts[flat.iter().position(|&x| x == 0).unwrap()] += 1;
    }
    let stat = chi_square_statistic(&counts, &[1000.0 / 6.0; 6]);
    assert!(1.0 - ChiSquared::new(5.0).unwrap().cdf(stat) > 0.01, "{counts:?}");
}

#[test]
fn clusters_partition_without_overlap() {
    let ids: Vec<u32> = (100..347).collect();
    let cl = random_clusters(&ids, 20, &mut seeded(3)).unwrap();
    assert_eq!(cl.len(), 12);
    let mut all: Vec<u32> = cl.iter().flat_map(|c| c.members.clone()).collect();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 240);
    assert!(cl.iter().all(|c| c.size() == 20));
}

#[test]
fn no_failures_gives_laplace_error() {
    let (total, lambda, n) = (9_999.0, 600.0, 50);
    let e = simulate_slot_error(total, lambda, n, 0, 100_000, &mut seeded(11)).unwrap();
    let expect = lambda / (total + 1.0);
    assert!((e.mu / expect - 1.0).abs() < 0.02, "{} vs {expect}", e.mu);
    // sd of |L| is λ for a Laplace variable
    assert!((e.sigma / expect - 1.0).abs() < 0.03);
}

#[test]
fn half_failures_match_gamma_difference() {
    let (total, lambda, n, m) = (4_999.0, 250.0, 20, 10);
    let k = n as f64 / (n - m) as f64;
    let oracle = lambda * gini_mean_difference(k) / (total + 1.0);
    let e = simulate_slot_error(total, lambda, n, m, 100_000, &mut seeded(12)).unwrap();
    assert!((e.mu / oracle - 1.0).abs() < 0.02, "{} vs {oracle}", e.mu);
    let b = utility_bounds(0.5, LaplaceScale::new(lambda).unwrap(), total).unwrap();
    assert!((b.mu / oracle - 1.0).abs() < 1e-6, "{} vs {oracle}", b.mu);
}

#[test]
fn gini_oracle_is_sane() {
    // Exponential: E|X − Y| = 1.
    assert!((gini_mean_difference(1.0) - 1.0).abs() < 1e-6);
}

#[test]
fn analytic_series_and_zero_noise() {
    let totals = [0.0, 10.0, 100.0];
    let lambdas: Vec<LaplaceScale> = [1.0, 2.0, 3.0].iter().map(|&l| LaplaceScale::new(l).unwrap()).collect();
    let a = analytic_error_series(&totals, &lambdas, 0.0).unwrap();
    for ((e, &x), l) in a.iter().zip(&totals).zip(&lambdas) {
        assert!((e.mu - l.get() / (x + 1.0)).abs() < 1e-12);
    }
    let e = error_series(&totals, &[0.0; 3], 10, 0.2, 100, &mut seeded(1)).unwrap();
    assert!(e.iter().all(|s| s.mu == 0.0 && s.sigma == 0.0));
    assert!(error_series(&totals, &[1.0; 3], 10, 0.2, 10, &mut seeded(1)).is_err());
}

#[test]
fn summary_by_hand() {
    let mu = vec![vec![0.1, 0.3], vec![0.2, 0.2], vec![0.0, 0.6]];
    let s = error_summary(5, &mu).unwrap();
    assert_eq!(s.clusters, 3);
    // per-cluster means 0.2, 0.2, 0.3
    let m = 0.7 / 3.0;
    assert!((s.mean_error - m).abs() < 1e-12);
    let dev = ((2.0 * (0.2f64 - m).powi(2) + (0.3 - m).powi(2)) / 2.0).sqrt();
    assert!((s.dev_error - dev).abs() < 1e-12);
    assert!((s.max_error - (0.2 + 0.6) / 2.0).abs() < 1e-12);
}

fn synthetic_rows(households: usize, slots: usize, seed: u64) -> Vec<Vec<f64>> {
    let scale = LogNormal::new(0.0, 0.8).unwrap();
    let mut rng = seeded(seed);
    (0..households)
        .map(|_| {
            let s: f64 = scale.sample(&mut rng);
            (0..slots).map(|_| s * 200.0 * rng.random::<f64>()).collect()
        })
        .collect()
}

fn mean_relative_scale(rows: &[Vec<f64>], clusters: &[Cluster]) -> f64 {
    let mut acc = 0.0;
    for c in clusters {
        let r: Vec<&[f64]> = c.members.iter().map(|&i| rows[i as usize].as_slice()).collect();
        let l = slot_maxima(&r).unwrap();
        let x = slot_totals(&r).unwrap();
        acc += l.iter().zip(&x).map(|(l, x)| l / (x + 1.0)).sum::<f64>() / l.len() as f64;
    }
    acc / clusters.len() as f64
}

#[test]
fn consumption_clusters_are_tighter() {
    let rows = synthetic_rows(400, 48, 21);
    let ids: Vec<u32> = (0..400).collect();
    let avgs: Vec<(u32, f64)> = rows.iter().enumerate().map(|(i, r)| (i as u32, r.iter().sum::<f64>() / r.len() as f64)).collect();
    for n in [5, 20, 50] {
        let by_use = consumption_clusters(&avgs, n).unwrap();
        let random = random_clusters(&ids, n, &mut seeded(n as u64)).unwrap();
        let (a, b) = (mean_relative_scale(&rows, &by_use), mean_relative_scale(&rows, &random));
        assert!(a < b, "N={n}: {a} vs {b}");
    }
}

#[test]
fn consumption_order_and_remainder() {
    let avgs = [(7, 3.0), (1, 1.0), (2, 1.0), (9, 0.5), (4, 10.0)];
    let c = consumption_clusters(&avgs, 2).unwrap();
    assert_eq!(c[0].members, [9, 1]);
    assert_eq!(c[1].members, [2, 7]);
    assert_eq!(c.len(), 2);
}

proptest! {
    #[test]
    fn window_guarantee(m in prop::collection::vec(0.0f64..500.0, 1..80), s in 1usize..12) {
        let l = window_sums(&m, s).unwrap();
        let s = s.min(m.len());
        for a in 0..=m.len() - s {
            let eps: f64 = (a..a + s).filter(|&u| l[u] > 0.0).map(|u| m[u] / l[u]).sum();
            prop_assert!(eps <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn window_lambda_grows_with_s(m in prop::collection::vec(0.0f64..500.0, 1..80), s in 1usize..12) {
        let a = window_sums(&m, s).unwrap();
        let b = window_sums(&m, s + 1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x <= &(y + 1e-9));
        }
        for (x, mm) in a.iter().zip(&m) {
            prop_assert!(x + 1e-9 >= *mm);
        }
    }

    #[test]
    fn lambda_scales_with_readings(m in prop::collection::vec(0.0f64..500.0, 1..40), s in 1usize..6, c in 0.1f64..10.0) {
        let a = window_sums(&m, s).unwrap();
        let scaled: Vec<f64> = m.iter().map(|x| x * c).collect();
        let b = window_sums(&scaled, s).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * c - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn tolerated_is_floor(n in 1u32..1000, alpha in 0.0f64..0.99) {
        let m = tolerated_failures(n, alpha).unwrap();
        prop_assert!(m as f64 <= alpha * n as f64 + 1e-6);
        prop_assert!((m + 1) as f64 > alpha * n as f64);
    }
}
