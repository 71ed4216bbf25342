//! Affinity construction and spectral clustering.
//!
//! A coefficient matrix becomes a symmetric nonnegative affinity via
//! `A = |C| + |C|^T`; clustering follows the normalized-Laplacian embedding:
//! degrees `d_i = sum_j A_ij`, `L_sym = I - D^{-1/2} A D^{-1/2}` (isolated
//! nodes get a zero `D^{-1/2}` entry), the `k` eigenvectors of smallest
//! eigenvalue as columns, row normalization, then k-means on the rows.

use crate::error::{Error, Result};
use crate::lstm::SelfExpression;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A symmetric, elementwise-nonnegative similarity matrix with zero
/// diagonal. The field is private so every value in circulation satisfies
/// those invariants exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    a: DMatrix<f64>,
}

impl Affinity {
    /// Validate an externally built matrix: square, finite, `A = A^T`
    /// exactly, `A >= 0` elementwise, `diag(A) = 0`.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Shape(format!(
                "affinity must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        for j in 0..n {
            for i in 0..n {
                let v = a[(i, j)];
                if !v.is_finite() {
                    return Err(Error::Input(format!("affinity entry ({i},{j}) is {v}")));
                }
                if v < 0.0 {
                    return Err(Error::Input(format!(
                        "affinity entry ({i},{j}) = {v} is negative"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::Input(format!(
                        "affinity diagonal entry ({i},{i}) = {v} must be zero"
                    )));
                }
                if a[(i, j)] != a[(j, i)] {
                    return Err(Error::Input(format!(
                        "affinity is not symmetric at ({i},{j}): {} vs {}",
                        a[(i, j)],
                        a[(j, i)]
                    )));
                }
            }
        }
        Ok(Affinity { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

/// Cluster assignments: 1-based labels, one per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("cluster count must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::Label(format!("label {bad} outside 1..={k}")));
        }
        Ok(ClusterLabels { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `A = |C| + |C|^T`. Symmetric to exact equality (f64 addition commutes),
/// nonnegative, and hollow because `C` is.
pub fn affinity(c: &SelfExpression) -> Affinity {
    let m = c.matrix();
    let n = m.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| m[(i, j)].abs() + m[(j, i)].abs());
    Affinity { a }
}

/// `L_sym = I - D^{-1/2} A D^{-1/2}` with `D^{-1/2}_ii = 0` for isolated
/// nodes. Built exactly symmetric (the lower triangle mirrors the upper).
pub fn normalized_laplacian(a: &Affinity) -> DMatrix<f64> {
    let n = a.n();
    let m = a.matrix();
    let d_inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = m.row(i).iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        l[(j, j)] = 1.0 - d_inv_sqrt[j] * m[(j, j)] * d_inv_sqrt[j];
        for i in 0..j {
            let v = -(d_inv_sqrt[i] * m[(i, j)] * d_inv_sqrt[j]);
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    l
}

/// Rows of the spectral embedding: the `k` eigenvectors of `L_sym` with the
/// smallest eigenvalues (ascending, ties by index), row-normalized. Rows
/// that are exactly zero (isolated nodes) stay zero.
pub fn spectral_embedding(a: &Affinity, k: usize) -> Result<DMatrix<f64>> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "cluster count {k} must be in 1..={n}"
        )));
    }
    let l = normalized_laplacian(a);
    let eig = l.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| {
        eig.eigenvalues[p]
            .partial_cmp(&eig.eigenvalues[q])
            .expect("Laplacian eigenvalues are finite")
            .then(p.cmp(&q))
    });
    let mut emb = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        emb.set_column(col, &eig.eigenvectors.column(idx));
    }
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

/// Ng–Jordan–Weiss spectral clustering: embed with [`spectral_embedding`],
/// then k-means the rows. Deterministic given `(A, k, seed)`.
pub fn spectral_cluster(a: &Affinity, k: usize, seed: u64) -> Result<ClusterLabels> {
    let emb = spectral_embedding(a, k)?;
    kmeans(&emb, k, seed)
}

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;

/// Lloyd's algorithm over the rows of `points` with k-means++ seeding,
/// 10 restarts (seeds derived from `seed`), at most 300 iterations per
/// restart, empty clusters repaired by reseeding to the farthest point.
/// The best restart by (WCSS, restart index) wins; nearest-centroid ties
/// break to the lowest centroid index.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterLabels> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "cluster count {k} must be in 1..={n} (one per point at most)"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let (assign, wcss) = lloyd(points, k, &mut rng);
        // Strict improvement keeps the earliest restart on exact ties.
        if best.as_ref().is_none_or(|(bw, _)| wcss < *bw) {
            best = Some((wcss, assign));
        }
    }
    let (_, assign) = best.expect("at least one restart ran");
    ClusterLabels::new(assign.iter().map(|&c| c + 1).collect(), k)
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centroids = kmeanspp_init(points, k, rng);
    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let next = assign_points(points, &centroids);
        if next == assign {
            break;
        }
        assign = next;

        // Recompute centroids as cluster means.
        let mut counts = vec![0usize; k];
        centroids.fill(0.0);
        for (p, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for d in 0..dim {
                centroids[(c, d)] += points[(p, d)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for d in 0..dim {
                    centroids[(c, d)] *= inv;
                }
            }
        }
        // Reseed each empty cluster to the point farthest from its centroid
        // (ties to the lowest point index), one point per empty cluster.
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None::<(f64, usize)>;
            for p in 0..n {
                if taken[p] {
                    continue;
                }
                let d2 = row_dist2(points, p, &centroids, assign[p]);
                if far.is_none_or(|(fd, _)| d2 > fd) {
                    far = Some((d2, p));
                }
            }
            if let Some((_, p)) = far {
                taken[p] = true;
                for d in 0..dim {
                    centroids[(c, d)] = points[(p, d)];
                }
            }
        }
    }
    if assign.contains(&usize::MAX) {
        assign = assign_points(points, &centroids);
    }
    let wcss: f64 = (0..n)
        .map(|p| row_dist2(points, p, &centroids, assign[p]))
        .sum();
    (assign, wcss)
}

fn assign_points(points: &DMatrix<f64>, centroids: &DMatrix<f64>) -> Vec<usize> {
    let n = points.nrows();
    let k = centroids.nrows();
    (0..n)
        .map(|p| {
            let mut best = (f64::INFINITY, 0usize);
            for c in 0..k {
                let d2 = row_dist2(points, p, centroids, c);
                if d2 < best.0 {
                    best = (d2, c);
                }
            }
            best.1
        })
        .collect()
}

fn row_dist2(points: &DMatrix<f64>, p: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    let mut acc = 0.0;
    for d in 0..points.ncols() {
        let diff = points[(p, d)] - centroids[(c, d)];
        acc += diff * diff;
    }
    acc
}

fn kmeanspp_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centroids = DMatrix::zeros(k, dim);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from(&points.row(first));

    let mut d2 = DVector::from_fn(n, |p, _| row_dist2(points, p, &centroids, 0));
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for p in 0..n {
                r -= d2[p];
                if r <= 0.0 {
                    chosen = p;
                    break;
                }
            }
            chosen
        } else {
            // All remaining distances are zero (duplicate points).
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from(&points.row(pick));
        for p in 0..n {
            d2[p] = d2[p].min(row_dist2(points, p, &centroids, c));
        }
    }
    centroids
}
