use hqnn::metrics::{average_precision, roc_auc};
use hqnn::oracle::{brute_force_mann_whitney, brute_force_wilcoxon, pairwise_auc};
use hqnn::stats::{
    mann_whitney_u, mann_whitney_u_normal, wilcoxon_signed_rank, wilcoxon_signed_rank_normal,
    TestMethod,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Scores rounded to a coarse grid so ties are common.
fn random_set(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(2..60);
    let grid = [1.0, 4.0, 100.0][rng.random_range(0..3)];
    let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let scores = (0..n)
        .map(|_| (rng.random_range(-3.0..3.0f64) * grid).round() / grid)
        .collect();
    (scores, labels)
}

fn split(scores: &[f64], labels: &[u8]) -> (Vec<f64>, Vec<f64>) {
    let neg = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 0)
        .map(|(s, _)| *s)
        .collect();
    let pos = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(s, _)| *s)
        .collect();
    (neg, pos)
}

#[test]
fn auc_matches_pair_counting_and_u_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (scores, labels) = random_set(&mut rng);
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
        let (neg, pos) = split(&scores, &labels);
        let u_neg = mann_whitney_u(&neg, &pos).unwrap().statistic;
        let u_pos = mann_whitney_u(&pos, &neg).unwrap().statistic;
        let nn = (neg.len() * pos.len()) as f64;
        assert_eq!(u_neg + u_pos, nn);
        assert!((1.0 - auc - u_neg / nn).abs() <= 1e-15);
    }
}

#[test]
fn average_precision_matches_curve_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let (scores, labels) = random_set(&mut rng);
        // precision at every distinct threshold, weighted by the recall gained there
        let mut thresholds = scores.clone();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
        let mut expected = 0.0;
        let mut prev_recall = 0.0;
        for t in thresholds {
            let tp = scores
                .iter()
                .zip(&labels)
                .filter(|(s, &l)| **s >= t && l == 1)
                .count();
            let called = scores.iter().filter(|s| **s >= t).count();
            let recall = tp as f64 / n_pos;
            expected += (recall - prev_recall) * tp as f64 / called as f64;
            prev_recall = recall;
        }
        assert!((average_precision(&scores, &labels).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn exact_p_values_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..400 {
        let n = 1 + trial % 10;
        let grid = if trial % 2 == 0 { 2.0 } else { 1000.0 };
        let x: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(-2.0..2.0f64) * grid).round())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(-2.0..2.0f64) * grid).round())
            .collect();
        if let Ok(r) = wilcoxon_signed_rank(&x, &y) {
            assert_eq!(r.method, TestMethod::WilcoxonExact);
            assert!((r.p_value - brute_force_wilcoxon(&x, &y)).abs() <= 1e-12);
            // k / 2^n
            let scaled = r.p_value * (1u64 << r.n[0]) as f64;
            assert!(r.p_value == 1.0 || scaled.fract() == 0.0);
        }
        let na = rng.random_range(1..n.max(2));
        let pooled: Vec<f64> = x.iter().chain(&y).copied().take(n.max(2)).collect();
        let (a, b) = pooled.split_at(na);
        let r = mann_whitney_u(a, b).unwrap();
        assert_eq!(r.method, TestMethod::MannWhitneyExact);
        assert!((r.p_value - brute_force_mann_whitney(a, b)).abs() <= 1e-12);
    }
}

#[test]
fn exact_and_normal_wilcoxon_agree_at_25() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let x: Vec<f64> = (0..25)
            .map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3)
            .collect();
        let y: Vec<f64> = (0..25).map(|_| rng.sample(StandardNormal)).collect();
        let exact = wilcoxon_signed_rank(&x, &y).unwrap();
        let normal = wilcoxon_signed_rank_normal(&x, &y).unwrap();
        assert_eq!(exact.method, TestMethod::WilcoxonExact);
        assert_eq!(normal.method, TestMethod::WilcoxonNormal);
        assert!((exact.p_value - normal.p_value).abs() < 0.01);
    }
}

#[test]
fn exact_and_normal_mann_whitney_roughly_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let a: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..6)
            .map(|_| rng.sample::<f64, _>(StandardNormal) + 0.5)
            .collect();
        let exact = mann_whitney_u(&a, &b).unwrap();
        let normal = mann_whitney_u_normal(&a, &b).unwrap();
        assert!((exact.p_value - normal.p_value).abs() < 0.03);
    }
}

/// Rejection rate at α = 0.05 when group labels or signs are permuted at
/// random, so the null holds exactly.
#[test]
fn null_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 10_000;
    let pooled: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
    let mut rejected = 0;
    for _ in 0..trials {
        let mut perm = pooled.clone();
        perm.shuffle(&mut rng);
        if mann_whitney_u(&perm[..20], &perm[20..]).unwrap().p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!((0.03..=0.07).contains(&rate), "mann-whitney rate {rate}");

    let magnitudes: Vec<f64> = (0..20)
        .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
        .collect();
    let zeros = vec![0.0; 20];
    let mut rejected = 0;
    for _ in 0..trials {
        let d: Vec<f64> = magnitudes
            .iter()
            .map(|m| if rng.random_bool(0.5) { *m } else { -m })
            .collect();
        if wilcoxon_signed_rank(&d, &zeros).unwrap().p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!((0.03..=0.07).contains(&rate), "wilcoxon rate {rate}");
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_maps(
        scores in prop::collection::vec(-5.0f64..5.0, 4..40),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<u8> = scores.iter().map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let auc = roc_auc(&scores, &labels).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + 3.0).collect();
        prop_assert_eq!(auc, roc_auc(&mapped, &labels).unwrap());
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() == scores.len() {
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auc + roc_auc(&neg, &labels).unwrap() - 1.0).abs() < 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn p_values_in_unit_interval(
        a in prop::collection::vec(-3.0f64..3.0, 1..30),
        b in prop::collection::vec(-3.0f64..3.0, 1..30),
    ) {
        let p = mann_whitney_u(&a, &b).unwrap().p_value;
        prop_assert!((0.0..=1.0).contains(&p));
        let n = a.len().min(b.len());
        if let Ok(r) = wilcoxon_signed_rank(&a[..n], &b[..n]) {
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }
}
