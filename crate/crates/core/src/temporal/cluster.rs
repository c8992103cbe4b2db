//! Day clustering: k-means (k-means++ seeded, restarted) and Ward agglomeration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DailySeriesMatrix, DayProfile, RepresentativeMode, HOURS_PER_DAY, KINDS};
use crate::error::{Error, Result};
use crate::stochastic::stream_rng;

const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    #[default]
    Kmeans,
    Ward,
}

impl ClusterMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterMethod::Kmeans => "kmeans",
            ClusterMethod::Ward => "ward",
        }
    }
}

/// Cluster label per day. Labels are numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Assignment {
    fn canonical(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Assignment { labels, k: map.len() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Day indices per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (day, &l) in self.labels.iter().enumerate() {
            m[l].push(day);
        }
        m
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Partition days into `k` non-empty clusters.
///
/// k-means keeps the restart with the lowest within-cluster squared error; ties go to the
/// lower restart index. Ward is deterministic and ignores `restarts` and `seed`.
pub fn cluster_days(
    features: &[Vec<f64>],
    k: usize,
    method: ClusterMethod,
    restarts: usize,
    seed: u64,
) -> Result<Assignment> {
    let n = features.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must be in 1..={n}, got {k}")));
    }
    let labels = match method {
        ClusterMethod::Kmeans => {
            let runs: Vec<(f64, Vec<usize>)> = (0..restarts.max(1))
                .into_par_iter()
                .map(|r| kmeans_once(features, k, seed, r as u64))
                .collect();
            runs.into_iter()
                .enumerate()
                .min_by(|(ia, a), (ib, b)| a.0.total_cmp(&b.0).then(ia.cmp(ib)))
                .map(|(_, (_, labels))| labels)
                .expect("at least one restart")
        }
        ClusterMethod::Ward => ward(features, k),
    };
    Ok(Assignment::canonical(&labels))
}

fn kmeans_plus_plus<R: Rng>(features: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![features[first].clone()];
    let mut d2: Vec<f64> = features.iter().map(|f| sq_dist(f, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                idx = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            idx.expect("positive total implies a candidate")
        } else {
            // All remaining points coincide with a centre; take an unused one at random.
            let free: Vec<usize> = (0..n).filter(|i| !chosen[*i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(features[pick].clone());
        for (d, f) in d2.iter_mut().zip(features) {
            *d = d.min(sq_dist(f, &features[pick]));
        }
    }
    centers
}

fn kmeans_once(features: &[Vec<f64>], k: usize, seed: u64, restart: u64) -> (f64, Vec<usize>) {
    let mut rng = stream_rng(seed, restart);
    let n = features.len();
    let dim = features[0].len();
    let mut centers = kmeans_plus_plus(features, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, f) in features.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(f, &centers[a]).total_cmp(&sq_dist(f, &centers[b])))
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        fill_empty_clusters(features, &centers, &mut labels, k);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (f, &l) in features.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(f) {
                *s += v;
            }
        }
        for c in 0..k {
            for (dst, s) in centers[c].iter_mut().zip(&sums[c]) {
                *dst = s / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let sse = features
        .iter()
        .zip(&labels)
        .map(|(f, &l)| sq_dist(f, &centers[l]))
        .sum();
    (sse, labels)
}

/// Move the worst-fitting point of a multi-member cluster into each empty cluster.
fn fill_empty_clusters(features: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|c| *c == 0) else {
            return;
        };
        let donor = (0..features.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(&features[a], &centers[labels[a]])
                    .total_cmp(&sq_dist(&features[b], &centers[labels[b]]))
                    .then(b.cmp(&a))
            })
            .expect("k <= n guarantees a donor");
        labels[donor] = empty;
    }
}

/// Agglomerative clustering with Ward linkage (Lance-Williams updates on squared distances).
fn ward(features: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = features.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(&features[i], &features[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut clusters = n;
    while clusters > k {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| active[i]) {
            for j in ((i + 1)..n).filter(|&j| active[j]) {
                if dist[i * n + j] < best.0 {
                    best = (dist[i * n + j], i, j);
                }
            }
        }
        let (dij, i, j) = best;
        for m in (0..n).filter(|&m| active[m] && m != i && m != j) {
            let (ni, nj, nm) = (size[i] as f64, size[j] as f64, size[m] as f64);
            let d = ((ni + nm) * dist[i * n + m] + (nj + nm) * dist[j * n + m] - nm * dij) / (ni + nj + nm);
            dist[i * n + m] = d;
            dist[m * n + i] = d;
        }
        size[i] += size[j];
        active[j] = false;
        parent[j] = i;
        clusters -= 1;
    }
    (0..n)
        .map(|mut x| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        })
        .collect()
}

/// Weight of each cluster: its share of the clustered days.
pub fn cluster_weights(assignment: &Assignment) -> Vec<f64> {
    let n = assignment.labels.len() as f64;
    assignment.sizes().iter().map(|&s| s as f64 / n).collect()
}

/// Medoid: the member day with the smallest summed feature-space distance to the other members
/// (lowest day index on ties). Centroid: element-wise mean of the members' raw values.
pub fn select_representative(
    data: &DailySeriesMatrix,
    features: &[Vec<f64>],
    members: &[usize],
    mode: RepresentativeMode,
) -> Result<DayProfile> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("empty cluster".into()));
    }
    match mode {
        RepresentativeMode::Medoid => {
            let cost = |i: usize| -> f64 {
                members
                    .iter()
                    .map(|&j| sq_dist(&features[i], &features[j]).sqrt())
                    .sum()
            };
            let best = members
                .iter()
                .copied()
                .map(|i| (cost(i), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
                .1;
            Ok(data.days[best])
        }
        RepresentativeMode::Centroid => {
            let mut out = [[0.0; HOURS_PER_DAY]; KINDS];
            let n = members.len() as f64;
            for &m in members {
                for k in 0..KINDS {
                    for h in 0..HOURS_PER_DAY {
                        out[k][h] += data.days[m][k][h] / n;
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn day(demand: f64, peak: f64) -> DayProfile {
        let mut d = [[0.1; HOURS_PER_DAY]; KINDS];
        for h in 0..HOURS_PER_DAY {
            d[0][h] = demand + if (17..20).contains(&h) { peak } else { 0.0 };
        }
        d
    }

    fn matrix(days: Vec<DayProfile>) -> DailySeriesMatrix {
        let dates = (0..days.len()).map(|i| format!("d{i}")).collect();
        DailySeriesMatrix::new(dates, days).unwrap()
    }

    #[test]
    fn k_equals_days_gives_singletons() {
        let data = synthetic::archetype_year(3, 30, 5);
        let f = data.features();
        for method in [ClusterMethod::Kmeans, ClusterMethod::Ward] {
            let a = cluster_days(&f, 30, method, 2, 0).unwrap();
            assert!(a.sizes().iter().all(|&s| s == 1), "{method:?}");
        }
    }

    #[test]
    fn k_one_is_single_cluster() {
        let data = synthetic::archetype_year(3, 20, 5);
        let a = cluster_days(&data.features(), 1, ClusterMethod::Kmeans, 3, 0).unwrap();
        assert_eq!(a.k, 1);
        assert_eq!(cluster_weights(&a), vec![1.0]);
    }

    #[test]
    fn k_larger_than_days_rejected() {
        let data = synthetic::archetype_year(2, 4, 5);
        assert!(matches!(
            cluster_days(&data.features(), 5, ClusterMethod::Kmeans, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn weights_from_sizes() {
        let a = Assignment::canonical(&[0, 0, 1, 1, 1]);
        assert_eq!(cluster_weights(&a), vec![0.4, 0.6]);
        let mut raw = vec![0; 100];
        raw.extend(vec![1; 165]);
        raw.extend(vec![2; 100]);
        let w = cluster_weights(&Assignment::canonical(&raw));
        assert_eq!(w, vec![100.0 / 365.0, 165.0 / 365.0, 100.0 / 365.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    /// Brute-force the best 2-partition by within-cluster squared error.
    fn best_two_partition(f: &[Vec<f64>]) -> Vec<usize> {
        let n = f.len();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1..(1u32 << n) - 1 {
            if mask & 1 == 0 {
                continue;
            }
            let mut sse = 0.0;
            for side in [true, false] {
                let idx: Vec<usize> = (0..n).filter(|i| ((mask >> i) & 1 == 1) == side).collect();
                let dim = f[0].len();
                let mean: Vec<f64> = (0..dim)
                    .map(|d| idx.iter().map(|&i| f[i][d]).sum::<f64>() / idx.len() as f64)
                    .collect();
                sse += idx.iter().map(|&i| sq_dist(&f[i], &mean)).sum::<f64>();
            }
            if sse < best.0 {
                best = (sse, mask);
            }
        }
        Assignment::canonical(&(0..n).map(|i| ((best.1 >> i) & 1) as usize).collect::<Vec<_>>()).labels
    }

    #[test]
    fn two_archetypes_separated_like_brute_force() {
        let days: Vec<DayProfile> = (0..12)
            .map(|i| {
                let jitter = i as f64 * 0.5;
                if i % 3 == 0 {
                    day(100.0 + jitter, 80.0)
                } else {
                    day(100.0 + jitter, 0.0)
                }
            })
            .collect();
        let data = matrix(days);
        let f = data.features();
        let oracle = best_two_partition(&f);
        for method in [ClusterMethod::Kmeans, ClusterMethod::Ward] {
            let a = cluster_days(&f, 2, method, 5, 11).unwrap();
            assert_eq!(a.labels, oracle, "{method:?}");
        }
        let peaky: Vec<usize> = (0..12).filter(|i| i % 3 == 0).collect();
        let members = Assignment::canonical(&oracle).members();
        assert!(members.contains(&peaky));
    }

    #[test]
    fn medoid_ignores_far_member() {
        let v = day(100.0, 0.0);
        let w = day(500.0, 300.0);
        let data = matrix(vec![v, v, w]);
        let f = data.features();
        let m = select_representative(&data, &f, &[0, 1, 2], RepresentativeMode::Medoid).unwrap();
        assert_eq!(m, v);
    }

    #[test]
    fn centroid_is_mean() {
        let mut a = [[0.0; HOURS_PER_DAY]; KINDS];
        let mut b = [[0.0; HOURS_PER_DAY]; KINDS];
        a[0] = [1.0; HOURS_PER_DAY];
        b[0] = [3.0; HOURS_PER_DAY];
        b[1] = [1.0; HOURS_PER_DAY];
        let data = matrix(vec![a, b]);
        let f = data.features();
        let c = select_representative(&data, &f, &[0, 1], RepresentativeMode::Centroid).unwrap();
        assert_eq!(c[0], [2.0; HOURS_PER_DAY]);
        assert_eq!(c[1], [0.5; HOURS_PER_DAY]);
    }

    #[test]
    fn singleton_representative_is_the_day() {
        let data = synthetic::archetype_year(2, 6, 2);
        let f = data.features();
        for mode in [RepresentativeMode::Medoid, RepresentativeMode::Centroid] {
            assert_eq!(select_representative(&data, &f, &[4], mode).unwrap(), data.days[4]);
        }
    }

    #[test]
    fn empty_cluster_rejected() {
        let data = synthetic::archetype_year(2, 6, 2);
        assert!(select_representative(&data, &data.features(), &[], RepresentativeMode::Medoid).is_err());
    }

    #[test]
    fn kmeans_deterministic_under_seed() {
        let data = synthetic::archetype_year(4, 120, 8);
        let f = data.features();
        let a = cluster_days(&f, 6, ClusterMethod::Kmeans, 4, 99).unwrap();
        let b = cluster_days(&f, 6, ClusterMethod::Kmeans, 4, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn duplicate_days_still_fill_every_cluster() {
        let v = day(100.0, 0.0);
        let data = matrix(vec![v; 6]);
        let a = cluster_days(&data.features(), 4, ClusterMethod::Kmeans, 2, 3).unwrap();
        assert_eq!(a.k, 4);
        assert!(a.sizes().iter().all(|&s| s > 0));
    }
}
