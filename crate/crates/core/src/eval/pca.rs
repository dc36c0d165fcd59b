use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::table::{BenchCategory, ScoreTable};
use super::{EvalError, Result};

/// Independent k-means++ runs; the lowest inertia wins.
pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;

fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between benchmark columns across models.
///
/// The diagonal is 1. An off-diagonal entry touching a constant column is 0
/// and logged as a warning.
pub fn correlation_matrix(table: &ScoreTable) -> Result<Vec<Vec<f64>>> {
    if table.num_models() < 2 {
        return Err(EvalError::Degenerate(format!(
            "correlation needs at least 2 models, got {}",
            table.num_models()
        )));
    }
    let b = table.num_benchmarks();
    let cols: Vec<Vec<f64>> = (0..b).map(|j| table.column(j)).collect();
    let mut r = vec![vec![0.0; b]; b];
    for i in 0..b {
        r[i][i] = 1.0;
        for j in i + 1..b {
            let v = pearson(&cols[i], &cols[j]).unwrap_or_else(|| {
                log::warn!(
                    "zero variance in {} or {}; correlation set to 0",
                    table.benchmarks[i].name,
                    table.benchmarks[j].name
                );
                0.0
            });
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Canonical labels: cluster ids in order of first appearance.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, m)| (c, dist2(p, m)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &w) in d.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            // An emptied cluster keeps its previous centroid.
            if !members.is_empty() {
                *centroid = (0..dim)
                    .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
                    .collect();
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centroids[l])).sum();
    (labels, centroids, inertia)
}

/// Seeded k-means with k-means++ initialisation and `restarts` runs.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(EvalError::Config(format!("k = {k} for {} points", points.len())));
    }
    if restarts == 0 {
        return Err(EvalError::Config("restarts must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for _ in 0..restarts {
        let run = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.2 < b.2 - 1e-12) {
            best = Some(run);
        }
    }
    let (labels, centroids, inertia) = best.expect("restarts >= 1");
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for &l in &labels {
        if !order.contains(&l) {
            order.push(l);
        }
    }
    for c in 0..k {
        if !order.contains(&c) {
            order.push(c);
        }
    }
    let relabel = |l: usize| order.iter().position(|&o| o == l).expect("complete");
    Ok(KMeansResult {
        labels: labels.iter().map(|&l| relabel(l)).collect(),
        centroids: order.iter().map(|&o| centroids[o].clone()).collect(),
        inertia,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPoint {
    pub benchmark: String,
    pub category: BenchCategory,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub points: Vec<BenchmarkPoint>,
    /// Fractions of variance carried by the first two components.
    pub explained_variance: [f64; 2],
    pub inertia: f64,
}

/// Projects benchmarks onto the top two principal components of the
/// standardized score table and clusters them with seeded k-means.
///
/// Each benchmark is a point whose coordinates are its standardized scores
/// across models. The point cloud is centred and decomposed through the
/// double-centred correlation matrix, so coordinates have zero mean.
pub fn pca_cluster(table: &ScoreTable, k: usize, seed: u64) -> Result<ClusterReport> {
    let (n, b) = (table.num_models(), table.num_benchmarks());
    if n < 3 {
        return Err(EvalError::Degenerate(format!("clustering needs at least 3 models, got {n}")));
    }
    if k == 0 || k > b {
        return Err(EvalError::Config(format!("k = {k} for {b} benchmarks")));
    }
    // Standardized columns; a constant column becomes all zeros.
    let z = DMatrix::from_fn(n, b, |m, j| {
        let col = table.column(j);
        let (mean, sd) = mean_std(&col);
        if sd > 0.0 {
            (col[m] - mean) / sd
        } else {
            0.0
        }
    });
    let corr = z.transpose() * &z / (n as f64 - 1.0);
    let centring = DMatrix::from_fn(b, b, |i, j| f64::from(u8::from(i == j)) - 1.0 / b as f64);
    let gram = &centring * corr * &centring;
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..b).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let total: f64 = eig.eigenvalues.iter().filter(|&&l| l > 0.0).sum();
    if total <= 1e-12 {
        return Err(EvalError::Degenerate("score table has no variance across benchmarks".into()));
    }
    let mut coords = vec![vec![0.0; 2]; b];
    let mut explained = [0.0; 2];
    for (axis, &e) in idx.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[e].max(0.0);
        explained[axis] = lambda / total;
        let v = eig.eigenvectors.column(e);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (i, c) in coords.iter_mut().enumerate() {
            c[axis] = sign * v[i] * lambda.sqrt();
        }
    }
    let km = kmeans(&coords, k, seed, KMEANS_RESTARTS)?;
    let points = table
        .benchmarks
        .iter()
        .zip(&coords)
        .zip(&km.labels)
        .map(|((meta, c), &cluster)| BenchmarkPoint {
            benchmark: meta.name.clone(),
            category: meta.category,
            x: c[0],
            y: c[1],
            cluster,
        })
        .collect();
    Ok(ClusterReport {
        points,
        explained_variance: explained,
        inertia: km.inertia,
    })
}
