//! K-means clustering, silhouette scoring and a 2-D PCA projection for
//! subject-wise Shapley vectors.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("too few points: {points} for k = {k}")]
    TooFewPoints { points: usize, k: usize },
    #[error("silhouette needs at least two non-empty clusters")]
    SingleCluster,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite coordinate in point {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step, ending with the final one.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let dim = points.first().map_or(0, Vec::len);
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::InvalidArgument(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
    }
    Ok(dim)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Nearest center for every point (lowest index wins ties) and the summed
/// squared distance.
fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points
        .par_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // all remaining points coincide with a center
            rng.random_range(0..points.len())
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// K-means with k-means++ seeding and Lloyd iterations. Points are
/// processed in a canonical (lexicographic) order, so the result does not
/// depend on input order; labels are numbered by first appearance in that
/// order.
pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansResult, ClusterError> {
    if cfg.k == 0 || cfg.max_iter == 0 {
        return Err(ClusterError::InvalidArgument("k and max_iter must be at least 1".into()));
    }
    if points.len() < cfg.k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            k: cfg.k,
        });
    }
    let dim = check_points(points)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = plus_plus_init(&sorted, cfg.k, &mut rng);
    let mut history = Vec::new();
    let mut iterations = 0;
    let (mut labels, mut d2) = assign(&sorted, &centers);
    for _ in 0..cfg.max_iter {
        iterations += 1;
        history.push(d2.iter().sum());
        let mut sums = vec![vec![0.0; dim]; cfg.k];
        let mut counts = vec![0usize; cfg.k];
        for (p, &l) in sorted.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut new_centers: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centers)
            .map(|((s, &n), old)| if n > 0 { s.into_iter().map(|v| v / n as f64).collect() } else { old.clone() })
            .collect();
        let mut taken = vec![false; sorted.len()];
        for c in 0..cfg.k {
            if counts[c] == 0 {
                let far = (0..sorted.len())
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)))
                    .expect("k <= number of points");
                taken[far] = true;
                new_centers[c] = sorted[far].clone();
            }
        }
        let movement = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = new_centers;
        (labels, d2) = assign(&sorted, &centers);
        if movement < cfg.tol {
            break;
        }
    }
    let inertia: f64 = d2.iter().sum();
    history.push(inertia);

    // number clusters by first appearance in canonical order
    let mut remap = vec![usize::MAX; cfg.k];
    let mut next = 0;
    for &l in &labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    for r in remap.iter_mut().filter(|r| **r == usize::MAX) {
        *r = next;
        next += 1;
    }
    let mut out_centers = vec![Vec::new(); cfg.k];
    for (c, center) in centers.into_iter().enumerate() {
        out_centers[remap[c]] = center;
    }
    let mut out_labels = vec![0; points.len()];
    for (pos, &orig) in order.iter().enumerate() {
        out_labels[orig] = remap[labels[pos]];
    }
    Ok(KMeansResult {
        labels: out_labels,
        centers: out_centers,
        inertia,
        history,
        iterations,
    })
}

/// Mean silhouette with Euclidean distance. Points in singleton clusters
/// score 0, as do points whose `a` and `b` are both 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64, ClusterError> {
    if points.len() != labels.len() {
        return Err(ClusterError::InvalidArgument(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    check_points(points)?;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let scores: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += sq_dist(&points[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Unit principal axes, largest-magnitude component positive.
    pub axes: [Vec<f64>; 2],
    /// Covariance eigenvalues of the two axes.
    pub variances: [f64; 2],
    /// Fraction of total variance captured by the two axes; 0 when the
    /// points coincide.
    pub explained_share: f64,
}

pub const PCA_MAX_DIM: usize = 64;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors as columns of `v`, unsorted.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Projects points onto the top two principal axes of their sample
/// covariance.
pub fn pca2(points: &[Vec<f64>]) -> Result<Projection, ClusterError> {
    if points.len() < 2 {
        return Err(ClusterError::TooFewPoints { points: points.len(), k: 2 });
    }
    let dim = check_points(points)?;
    if dim == 0 || dim > PCA_MAX_DIM {
        return Err(ClusterError::InvalidArgument(format!("dimension {dim} outside 1..={PCA_MAX_DIM}")));
    }
    let n = points.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for p in &centered {
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] += p[i] * p[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let total: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let (values, vectors) = jacobi_eigen(cov);
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let axis = |rank: usize| -> (Vec<f64>, f64) {
        let Some(&c) = idx.get(rank) else {
            return (vec![0.0; dim], 0.0);
        };
        let mut v: Vec<f64> = vectors.iter().map(|row| row[c]).collect();
        let lead = v
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.abs().total_cmp(&b.abs()).then(j.cmp(i)))
            .map_or(0.0, |(_, x)| *x);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        (v, values[c].max(0.0))
    };
    let (a0, l0) = axis(0);
    let (a1, l1) = axis(1);
    let dot = |p: &[f64], a: &[f64]| p.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
    let coords = if total > 0.0 {
        centered.iter().map(|p| [dot(p, &a0), dot(p, &a1)]).collect()
    } else {
        vec![[0.0, 0.0]; points.len()]
    };
    Ok(Projection {
        coords,
        axes: [a0, a1],
        variances: [l0, l1],
        explained_share: if total > 0.0 { ((l0 + l1) / total).min(1.0) } else { 0.0 },
    })
}
