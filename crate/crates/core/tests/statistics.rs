use proptest::prelude::*;

use fpgdd::inference::{cross_validate, permutation_test, KlrModel, KlrOptions, DEFAULT_LAMBDA_GRID};
use fpgdd::metrics::DistanceMatrix;
use fpgdd::rng::seeded;
use rand::Rng;

/// Pairwise |x_i - x_j| on a line, with labels from the sign of x.
fn line(x: &[f64]) -> (DistanceMatrix, Vec<bool>) {
    let ids = (0..x.len()).map(|i| format!("s{i}")).collect();
    let dist = DistanceMatrix::from_pairs(ids, |i, j| Ok((x[i] - x[j]).abs())).unwrap();
    (dist, x.iter().map(|v| *v > 0.0).collect())
}

#[test]
fn moving_away_from_positives_lowers_the_probability() {
    let x = [-2.0, -1.5, -1.2, -0.4, 0.3, 0.9, 1.4, 2.2];
    let (dist, labels) = line(&x);
    let model = KlrModel::fit(&dist, &labels, 1.0, KlrOptions { lambda: 0.1, ..Default::default() }).unwrap();
    for (a, &l) in model.alphas.iter().zip(&labels) {
        assert_eq!(*a > 0.0, l, "dual coefficient signs follow the labels");
    }
    let query: Vec<f64> = x.iter().map(|v| (v - 0.1f64).abs()).collect();
    let mut prev = model.predict(&query).unwrap();
    for step in 1..20 {
        let moved: Vec<f64> = query
            .iter()
            .zip(&labels)
            .map(|(d, &l)| if l { d + 0.2 * step as f64 } else { *d })
            .collect();
        let p = model.predict(&moved).unwrap();
        assert!(p <= prev + 1e-15);
        prev = p;
    }
}

#[test]
fn duplicating_samples_does_not_hurt_cross_validation() {
    let mut rng = seeded(2);
    let x: Vec<f64> = (0..24)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (0.2 + rng.random::<f64>()))
        .collect();
    let (dist, labels) = line(&x);
    let doubled: Vec<f64> = x.iter().chain(&x).copied().collect();
    let (dist2, labels2) = line(&doubled);
    let sigmas = [0.5, 1.0];
    let once = cross_validate(&dist, &labels, 4, &sigmas, &DEFAULT_LAMBDA_GRID, 9).unwrap();
    let twice = cross_validate(&dist2, &labels2, 4, &sigmas, &DEFAULT_LAMBDA_GRID, 9).unwrap();
    assert!(twice.accuracy >= once.accuracy);
}

#[test]
fn separated_groups_reach_the_minimum_p_value() {
    let x: Vec<f64> = (0..30).map(|i| if i < 15 { -5.0 - i as f64 * 0.01 } else { 5.0 + i as f64 * 0.01 }).collect();
    let (dist, labels) = line(&x);
    let r = permutation_test(&dist, &labels, 999, 4).unwrap();
    assert_eq!(r.p_value, 1.0 / 1000.0);
}

#[test]
fn identical_groups_give_a_zero_statistic() {
    // Two copies of the same point cloud, one per group.
    let base = [0.1, 0.7, 1.3, 2.0];
    let x: Vec<f64> = base.iter().chain(&base).copied().collect();
    let ids = (0..8).map(|i| format!("s{i}")).collect();
    let dist = DistanceMatrix::from_pairs(ids, |i, j| Ok((x[i] - x[j]).abs())).unwrap();
    let labels: Vec<bool> = (0..8).map(|i| i >= 4).collect();
    let r = permutation_test(&dist, &labels, 99, 1).unwrap();
    // cross pairs include the zero self-copies; within pairs do not
    let cross: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (base[i] - base[j]).abs())).sum::<f64>() / 16.0;
    let within: f64 = 2.0 * (0..4).flat_map(|i| (i + 1..4).map(move |j| (base[i] - base[j]).abs())).sum::<f64>() / 12.0;
    assert!((r.statistic - (cross - within)).abs() < 1e-12);
    assert!(r.statistic.abs() < 0.3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swapping_group_names_leaves_the_test_unchanged(
        x in prop::collection::vec(-3.0f64..3.0, 8..16),
        seed in any::<u64>(),
    ) {
        let ids = (0..x.len()).map(|i| format!("s{i}")).collect();
        let dist = DistanceMatrix::from_pairs(ids, |i, j| Ok((x[i] - x[j]).abs())).unwrap();
        let labels: Vec<bool> = (0..x.len()).map(|i| i % 3 == 0).collect();
        let swapped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let a = permutation_test(&dist, &labels, 99, seed).unwrap();
        let b = permutation_test(&dist, &swapped, 99, seed).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert!(a.p_value >= 1.0 / 100.0 && a.p_value <= 1.0);
    }
}
