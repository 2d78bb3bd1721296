use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use electro_coord::scenarios::clustering::kmeans;
use electro_coord::scenarios::{representative_days, WindProfile};

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s.into_iter().map(|v| v / c as f64).collect()))
        .collect()
}

fn wcss(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let m = means(points, labels, k);
    points.iter().zip(labels).map(|(p, &l)| sq(p, m[l].as_ref().unwrap())).sum()
}

/// Smallest WCSS over every labelling with all clusters nonempty.
fn exhaustive(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if used.iter().all(|&u| u) {
            best = best.min(wcss(points, &labels, k));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn grouped(rng: &mut ChaCha8Rng, groups: usize, per: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for g in 0..groups {
        for _ in 0..per {
            out.push((0..dim).map(|_| 10.0 * g as f64 + rng.random_range(-0.5..0.5)).collect());
        }
    }
    out
}

#[test]
fn separated_groups_reach_global_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let k = 2 + trial % 2;
        let points = grouped(&mut rng, k, 3, 4);
        let (labels, history) = kmeans(&points, k, trial as u64);
        let got = wcss(&points, &labels, k);
        let opt = exhaustive(&points, k);
        assert!((got - opt).abs() <= 1e-9 * opt.max(1.0), "trial {trial}: {got} vs {opt}");
        assert!((history.last().unwrap() - got).abs() <= 1e-9 * got.max(1.0));
    }
}

#[test]
fn medoids_are_closest_to_their_centroid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let per_day = 24;
    let days: Vec<Vec<f64>> = (0..30)
        .map(|d| {
            let level = [200.0, 900.0, 1600.0][d % 3];
            (0..per_day).map(|_| level + rng.random_range(-150.0..150.0)).collect()
        })
        .collect();
    let profile = WindProfile::new(3600.0, days.concat(), "grouped");
    let set = representative_days(&profile, 3, 8, 1).unwrap();
    assert_eq!(set.weights, vec![10, 10, 10]);
    let m = means(&days, &set.assignments, 3);
    for (j, &medoid) in set.medoids.iter().enumerate() {
        let centroid = m[j].as_ref().unwrap();
        let best = (0..days.len())
            .filter(|&i| set.assignments[i] == j)
            .map(|i| sq(&days[i], centroid))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sq(&days[medoid], centroid), best);
        assert_eq!(set.days[j].samples, days[medoid]);
    }
    let means_by_rank: Vec<f64> = set.days.iter().map(|d| d.samples.iter().sum::<f64>()).collect();
    assert!(means_by_rank.windows(2).all(|w| w[0] >= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn result_is_a_lloyd_fixed_point(seed in 0u64..1000, n in 4usize..25, k in 1usize..4, dim in 1usize..5) {
        let k = k.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let (labels, history) = kmeans(&points, k, seed);
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let m = means(&points, &labels, k);
        prop_assert!(m.iter().all(Option::is_some));
        let centers: Vec<Vec<f64>> = m.into_iter().flatten().collect();
        for (p, &l) in points.iter().zip(&labels) {
            let own = sq(p, &centers[l]);
            let best = centers.iter().map(|c| sq(p, c)).fold(f64::INFINITY, f64::min);
            prop_assert!(own <= best * (1.0 + 1e-9) + 1e-15);
        }
        prop_assert_eq!(kmeans(&points, k, seed), (labels, history));
    }
}
