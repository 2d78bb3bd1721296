//! K-means representative days.
//!
//! Each day becomes a feature vector of block-averaged power. Centers are
//! seeded with k-means++ from a ChaCha8 stream and refined by Lloyd
//! iterations. The representative of a cluster is its member day nearest to
//! the centroid, returned at the source resolution.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::wind::{block_average, write_wind_csv, WindProfile};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const RELATIVE_STOP: f64 = 1e-8;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeDaySet {
    pub k: usize,
    pub seed: u64,
    pub downsample_factor: usize,
    pub days: Vec<WindProfile>,
    /// Member count per cluster.
    pub weights: Vec<usize>,
    /// Cluster of every source day.
    pub assignments: Vec<usize>,
    /// Source day index of every representative.
    pub medoids: Vec<usize>,
    /// Within-cluster sum of squares after each assignment pass.
    pub wcss_history: Vec<f64>,
    /// Largest sample of the whole source profile.
    pub source_peak: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding. Draws one uniform index, then one uniform variate per
/// further center, selecting the first point whose cumulative squared
/// distance exceeds it.
pub fn kmeans_pp(features: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut centers = vec![features[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = features.iter().map(|f| sq_dist(f, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let r: f64 = rng.random::<f64>() * total;
        let mut pick = n - 1;
        if total > 0.0 {
            let mut acc = 0.0;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > r {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = centers.len() % n;
        }
        centers.push(features[pick].clone());
        for (i, f) in features.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(f, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Assign every point to its nearest center; empty clusters take the point
/// farthest from its own center among clusters with spare members.
fn assign(features: &[Vec<f64>], centers: &mut [Vec<f64>]) -> (Vec<usize>, f64) {
    let k = centers.len();
    let mut labels = Vec::with_capacity(features.len());
    let mut dists = Vec::with_capacity(features.len());
    for f in features {
        let (j, d) = nearest(f, centers);
        labels.push(j);
        dists.push(d);
    }
    loop {
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let mut donor: Option<usize> = None;
        for i in 0..features.len() {
            if counts[labels[i]] >= 2 && donor.is_none_or(|d| dists[i] > dists[d]) {
                donor = Some(i);
            }
        }
        let Some(i) = donor else { break };
        labels[i] = empty;
        dists[i] = 0.0;
        centers[empty] = features[i].clone();
    }
    (labels, dists.iter().sum())
}

fn centroids(features: &[Vec<f64>], labels: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = features[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (f, &l) in features.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(f) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, c))| {
            if c == 0 {
                previous[j].clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// Lloyd iterations from k-means++ seeds. Returns labels and the WCSS history.
pub fn kmeans(features: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp(features, k, &mut rng);
    let mut history = Vec::new();
    let (mut labels, mut wcss) = assign(features, &mut centers);
    history.push(wcss);
    for _ in 1..MAX_ITERATIONS {
        centers = centroids(features, &labels, k, &centers);
        let (next, next_wcss) = assign(features, &mut centers);
        history.push(next_wcss);
        let done = wcss <= 0.0 || (wcss - next_wcss) / wcss < RELATIVE_STOP;
        labels = next;
        wcss = next_wcss;
        if done {
            break;
        }
    }
    (labels, history)
}

pub fn representative_days(
    profile: &WindProfile,
    k: usize,
    seed: u64,
    downsample_factor: usize,
) -> Result<RepresentativeDaySet> {
    let days = profile.days()?;
    if k == 0 || k > days.len() {
        return Err(Error::TooManyClusters { k, days: days.len() });
    }
    let factor = downsample_factor.max(1);
    let features: Vec<Vec<f64>> = days.iter().map(|d| block_average(d, factor)).collect();
    if features[0].is_empty() {
        return Err(Error::Wind(format!("downsample factor {factor} exceeds a day of samples")));
    }
    let (labels, wcss_history) = kmeans(&features, k, seed);

    let cents = centroids(&features, &labels, k, &vec![vec![0.0; features[0].len()]; k]);
    let mut medoids = vec![usize::MAX; k];
    let mut best = vec![f64::INFINITY; k];
    for (i, f) in features.iter().enumerate() {
        let l = labels[i];
        let d = sq_dist(f, &cents[l]);
        if d < best[l] {
            best[l] = d;
            medoids[l] = i;
        }
    }

    // Order clusters by representative mean power, highest first.
    let mean = |i: usize| days[i].iter().sum::<f64>() / days[i].len() as f64;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mean(medoids[b]).total_cmp(&mean(medoids[a])).then(a.cmp(&b)));
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let assignments: Vec<usize> = labels.iter().map(|&l| relabel[l]).collect();
    let medoids: Vec<usize> = order.iter().map(|&old| medoids[old]).collect();
    let mut weights = vec![0; k];
    for &a in &assignments {
        weights[a] += 1;
    }
    let reps = medoids
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            WindProfile::new(
                profile.dt,
                days[d].to_vec(),
                format!("{}-rep{}-day{}", profile.label, j, d),
            )
        })
        .collect();
    Ok(RepresentativeDaySet {
        k,
        seed,
        downsample_factor: factor,
        days: reps,
        weights,
        assignments,
        medoids,
        wcss_history,
        source_peak: profile.peak(),
    })
}

/// On-disk description of an exported set; day files sit next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub k: usize,
    pub seed: u64,
    pub downsample_factor: usize,
    pub dt: f64,
    pub source_peak: f64,
    pub files: Vec<String>,
    pub weights: Vec<usize>,
    pub medoids: Vec<usize>,
    pub assignments: Vec<usize>,
    pub wcss_history: Vec<f64>,
}

pub fn day_file_name(index: usize) -> String {
    format!("day_{index}.csv")
}

/// Write `day_<j>.csv` per representative plus `manifest.json`.
pub fn export_representative_days(set: &RepresentativeDaySet, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(set.k);
    for (j, day) in set.days.iter().enumerate() {
        let name = day_file_name(j);
        write_wind_csv(day, dir.join(&name))?;
        files.push(name);
    }
    let manifest = Manifest {
        k: set.k,
        seed: set.seed,
        downsample_factor: set.downsample_factor,
        dt: set.days.first().map_or(0.0, |d| d.dt),
        source_peak: set.source_peak,
        files,
        weights: set.weights.clone(),
        medoids: set.medoids.clone(),
        assignments: set.assignments.clone(),
        wcss_history: set.wcss_history.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile_from_days(days: &[Vec<f64>]) -> WindProfile {
        let per_day = days[0].len();
        WindProfile::new(86_400.0 / per_day as f64, days.concat(), "t")
    }

    #[test]
    fn single_cluster_of_identical_days() {
        let p = profile_from_days(&vec![vec![3.0; 24]; 5]);
        let set = representative_days(&p, 1, 1, 1).unwrap();
        assert_eq!(set.weights, vec![5]);
        assert_eq!(set.days[0].samples, vec![3.0; 24]);
        assert_eq!(set.assignments, vec![0; 5]);
    }

    #[test]
    fn one_cluster_per_day() {
        let days: Vec<Vec<f64>> = (0..6).map(|d| vec![d as f64 * 10.0; 24]).collect();
        let p = profile_from_days(&days);
        let set = representative_days(&p, 6, 3, 1).unwrap();
        assert_eq!(set.weights, vec![1; 6]);
        let mut medoids = set.medoids.clone();
        medoids.sort();
        assert_eq!(medoids, (0..6).collect::<Vec<_>>());
        // highest mean first
        assert_eq!(set.medoids[0], 5);
    }

    #[test]
    fn too_many_clusters() {
        let p = profile_from_days(&vec![vec![1.0; 24]; 3]);
        assert!(matches!(
            representative_days(&p, 4, 0, 1),
            Err(Error::TooManyClusters { k: 4, days: 3 })
        ));
    }

    #[test]
    fn separated_groups_and_monotone_objective() {
        let mut days = Vec::new();
        for d in 0..30 {
            let level = [1.0, 5.0, 9.0][d % 3];
            days.push((0..48).map(|h| level + 0.1 * ((d * 7 + h) % 5) as f64).collect::<Vec<_>>());
        }
        let p = profile_from_days(&days);
        let set = representative_days(&p, 3, 11, 2).unwrap();
        assert_eq!(set.weights, vec![10, 10, 10]);
        for (d, &a) in set.assignments.iter().enumerate() {
            assert_eq!(a, [2, 1, 0][d % 3]);
        }
        for w in set.wcss_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for (j, &m) in set.medoids.iter().enumerate() {
            assert_eq!(set.days[j].samples, days[m]);
            assert_eq!(set.assignments[m], j);
        }
    }

    #[test]
    fn export_and_reload() {
        let days: Vec<Vec<f64>> = (0..4).map(|d| vec![d as f64; 24]).collect();
        let set = representative_days(&profile_from_days(&days), 2, 5, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = export_representative_days(&set, dir.path()).unwrap();
        assert_eq!(manifest.files.len(), 2);
        assert_eq!(read_manifest(dir.path().join(MANIFEST_FILE)).unwrap(), manifest);
        let day = super::super::wind::load_wind_csv(dir.path().join(&manifest.files[1]), 1.0).unwrap();
        assert_eq!(day.profile.samples, set.days[1].samples);
    }
}
