//! Zone typology: standardized features, spectral clustering, silhouette
//! model selection and the adjusted Rand index.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::RscaMatrix;
use crate::rng;
use crate::stats::median;

pub const RATIO_FEATURE: &str = "wd_we_ratio";
pub const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITER: usize = 300;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Column-standardized features (population sd). Constant columns are
/// zeroed and flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    zones: Vec<String>,
    names: Vec<String>,
    x: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub constant: Vec<bool>,
    /// Zones left out for lack of a ratio.
    pub dropped: Vec<String>,
}

impl FeatureMatrix {
    /// Standardizes raw rows column by column.
    pub fn standardize(zones: Vec<String>, names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = zones.len();
        let p = names.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("feature rows do not match zone and feature counts"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features contain non-finite values"));
        }
        let mut x = vec![0.0; n * p];
        let mut means = vec![0.0; p];
        let mut sds = vec![0.0; p];
        let mut constant = vec![false; p];
        for j in 0..p {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / n.max(1) as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n.max(1) as f64;
            let sd = var.sqrt();
            means[j] = m;
            sds[j] = sd;
            // spread below rounding noise of the mean counts as constant
            if !(sd > 1e-12 * m.abs().max(1e-300)) || col.iter().all(|&v| v == col[0]) {
                constant[j] = true;
                continue;
            }
            for i in 0..n {
                x[i * p + j] = (col[i] - m) / sd;
            }
        }
        Ok(FeatureMatrix {
            zones,
            names,
            x,
            means,
            sds,
            constant,
            dropped: Vec::new(),
        })
    }

    pub fn zones(&self) -> &[String] {
        &self.zones
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.zones.len()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.names.len();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn is_degenerate(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0)
    }
}

/// Per-app RSCA of each zone plus its weekday/weekend ratio. Zones without
/// a ratio are dropped with a warning.
pub fn build_features(rsca: &RscaMatrix, ratios: &BTreeMap<String, f64>) -> Result<FeatureMatrix> {
    let mut zones = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (i, z) in rsca.units().iter().enumerate() {
        match ratios.get(z) {
            Some(r) if r.is_finite() => {
                let mut row = rsca.row(i).to_vec();
                row.push(*r);
                rows.push(row);
                zones.push(z.clone());
            }
            _ => {
                log::warn!("zone {z} has no weekday/weekend ratio; left out of clustering");
                dropped.push(z.clone());
            }
        }
    }
    let mut names = rsca.cols().to_vec();
    names.push(RATIO_FEATURE.to_string());
    let mut fm = FeatureMatrix::standardize(zones, names, &rows)?;
    fm.dropped = dropped;
    Ok(fm)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn pairwise_distances(rows: &[&[f64]]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist(rows[i], rows[j]).sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

fn feature_rows(fm: &FeatureMatrix) -> Vec<&[f64]> {
    (0..fm.n()).map(|i| fm.row(i)).collect()
}

/// Symmetric normalized Laplacian `I - D^-1/2 A D^-1/2` of the RBF
/// affinity with sigma = median pairwise distance. Returns (L, sigma).
pub fn normalized_laplacian(fm: &FeatureMatrix) -> Result<(Vec<f64>, f64)> {
    let n = fm.n();
    let d = pairwise_distances(&feature_rows(fm));
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            upper.push(d[i * n + j]);
        }
    }
    let sigma = median(&upper).unwrap_or(0.0);
    if !(sigma > 0.0) {
        return Err(Error::undefined(
            "median pairwise distance is zero (duplicate feature rows); affinity undefined",
        ));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a[i * n + j] = (-d[i * n + j].powi(2) / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = a[i * n..(i + 1) * n].iter().sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        l[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let off = inv_sqrt_deg[i] * a[i * n + j] * inv_sqrt_deg[j];
            l[i * n + j] = -off;
            l[j * n + i] = -off;
        }
    }
    Ok((l, sigma))
}

/// Eigen-decomposition of a dense symmetric n x n matrix by cyclic Jacobi
/// rotations. Eigenvalues ascending; eigenvector `k` is column `k` of the
/// returned row-major matrix.
pub fn jacobi_eigen(m: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m.len() != n * n {
        return Err(Error::invalid("matrix size mismatch"));
    }
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + new] = v[k * n + old];
        }
    }
    Ok((vals, vecs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    /// Labels in zone order, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    pub silhouette: f64,
    pub seed: u64,
    pub sigma: f64,
    /// The k + 1 smallest Laplacian eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `lambda_k - lambda_{k-1}` (0-based: gap after the k-th smallest).
    pub eigengap: f64,
    pub inertia: f64,
}

/// Relabels so that labels appear in order 0, 1, 2, ... along the points.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

struct KMeansRun {
    labels: Vec<usize>,
    inertia: f64,
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> KMeansRun {
    let n = points.len();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // refill empty clusters with the point farthest from its center
        for c in 0..k {
            if !labels.contains(&c) {
                let far = (0..n)
                    .max_by(|&i, &j| {
                        sq_dist(&points[i], &centers[labels[i]])
                            .total_cmp(&sq_dist(&points[j], &centers[labels[j]]))
                            .then(j.cmp(&i))
                    })
                    .expect("n > 0");
                labels[far] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    KMeansRun { labels, inertia }
}

/// Best of `restarts` k-means++ runs by (inertia, restart index).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<(Vec<usize>, f64)> {
    if k == 0 || k > points.len() {
        return Err(Error::invalid(format!("k = {k} is not in 1..={}", points.len())));
    }
    let runs: Vec<KMeansRun> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| kmeans_once(points, k, &mut rng::stream(seed, &format!("kmeans/{r}"))))
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.inertia.total_cmp(&b.inertia).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one run");
    Ok((canonical_labels(&best.labels), best.inertia))
}

/// Normalized spectral clustering of the feature rows into `k` groups.
pub fn spectral_cluster(fm: &FeatureMatrix, k: usize, seed: u64) -> Result<ClusterResult> {
    let n = fm.n();
    if k < 2 || k + 1 > n {
        return Err(Error::invalid(format!("k = {k} needs 2 <= k <= n - 1 with n = {n}")));
    }
    if fm.is_degenerate() {
        return Err(Error::undefined("all zones have identical features; clustering refused"));
    }
    let (l, sigma) = normalized_laplacian(fm)?;
    let (vals, vecs) = jacobi_eigen(&l, n)?;
    let embedding: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = (0..k).map(|c| vecs[i * n + c]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let (labels, inertia) = kmeans(&embedding, k, seed, KMEANS_RESTARTS)?;
    let silhouette = silhouette(&feature_rows(fm), &labels)?;
    Ok(ClusterResult {
        labels,
        k,
        silhouette,
        seed,
        sigma,
        eigenvalues: vals[..(k + 1).min(n)].to_vec(),
        eigengap: vals.get(k).copied().unwrap_or(f64::NAN) - vals[k - 1],
        inertia,
    })
}

/// Mean silhouette over points; points in singleton clusters score 0.
pub fn silhouette(points: &[&[f64]], labels: &[usize]) -> Result<f64> {
    let n = points.len();
    if labels.len() != n || n == 0 {
        return Err(Error::invalid("labels and points differ in length"));
    }
    let clusters: Vec<usize> = {
        let mut c: Vec<usize> = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    if clusters.len() < 2 {
        return Err(Error::undefined("silhouette needs at least two clusters"));
    }
    let pos: HashMap<usize, usize> = clusters.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut sizes = vec![0usize; clusters.len()];
    for l in labels {
        sizes[pos[l]] += 1;
    }
    let d = pairwise_distances(points);
    let mut total = 0.0;
    for i in 0..n {
        let own = pos[&labels[i]];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; clusters.len()];
        for j in 0..n {
            if j != i {
                sums[pos[&labels[j]]] += d[i * n + j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clusters.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        total += if m > 0.0 { (b - a) / m } else { 0.0 };
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KScore {
    pub k: usize,
    pub silhouette: f64,
    pub eigengap: f64,
    pub inertia: f64,
}

/// Clusters for every k in `k_range` and returns the k with the highest
/// silhouette (smallest k on ties) with the full table.
pub fn select_k(
    fm: &FeatureMatrix,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<(usize, Vec<KScore>, Vec<ClusterResult>)> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo {
        return Err(Error::invalid(format!("invalid k range {lo}..={hi}")));
    }
    if fm.n() < hi + 1 {
        return Err(Error::invalid(format!("{} zones are too few for k up to {hi}", fm.n())));
    }
    let mut table = Vec::new();
    let mut results = Vec::new();
    for k in k_range {
        let r = spectral_cluster(fm, k, seed)?;
        table.push(KScore {
            k,
            silhouette: r.silhouette,
            eigengap: r.eigengap,
            inertia: r.inertia,
        });
        results.push(r);
    }
    let best = table
        .iter()
        .fold(None::<&KScore>, |best, s| match best {
            Some(b) if b.silhouette >= s.silhouette => Some(b),
            _ => Some(s),
        })
        .map(|s| s.k)
        .expect("nonempty range");
    Ok((best, table, results))
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("ARI needs two labelings of the same length >= 2"));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(a.len() as u64);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both labelings trivial (one cluster or all singletons)
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
