//! K-means (k-means++ seeding, Lloyd iterations) and PCA projection.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::rng::SeededRng;

pub const DEFAULT_K: usize = 4;
const MAX_ITER: usize = 300;
const MOVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// `k × dim`
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every Lloyd update.
    pub inertia_trace: Vec<f64>,
    pub seed: u64,
    pub iterations_run: usize,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// `poem_index,cluster`
    pub fn to_csv(&self, poem_indices: &[usize]) -> String {
        let mut out = String::from("poem_index,cluster\n");
        for (p, l) in poem_indices.iter().zip(&self.labels) {
            writeln!(out, "{p},{l}").unwrap();
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.below(points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = points[rng.weighted_index(&d2)].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

/// Moves the point farthest from its centroid (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .map(|i| (i, sq_dist(&points[i], &centroids[labels[i]])))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("n >= k leaves a cluster with two members");
        labels[donor] = empty;
        centroids[empty] = points[donor].clone();
    }
}

fn update(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        let n = c as f64;
        s.iter_mut().for_each(|x| *x /= n);
    }
    sums
}

fn inertia(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Euclidean k-means. Cluster ids are renumbered so centroids are in
/// lexicographic order.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs at least k={k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("zero-dimensional points".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: p.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![0; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest(p, &centroids).0;
        }
        repair_empty(points, &mut labels, &mut centroids);
        let next = update(points, &labels, k, dim);
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        trace.push(inertia(points, &labels, &centroids));
        if shift < MOVE_TOL {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| lex_cmp(&centroids[a], &centroids[b]).then(a.cmp(&b)));
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let labels: Vec<usize> = labels.iter().map(|&l| relabel[l]).collect();
    let centroids: Vec<Vec<f64>> = order.iter().map(|&i| centroids[i].clone()).collect();
    Ok(ClusterAssignment {
        inertia: *trace.last().expect("at least one iteration"),
        labels,
        centroids,
        inertia_trace: trace,
        seed,
        iterations_run: iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    /// `n × n_components`
    pub coords: Vec<Vec<f64>>,
    /// `n_components × dim`, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
}

impl Projection2D {
    /// `poem_index,pc1,pc2,...`
    pub fn to_csv(&self, poem_indices: &[usize]) -> String {
        let mut out = String::from("poem_index");
        for c in 0..self.components.len() {
            write!(out, ",pc{}", c + 1).unwrap();
        }
        out.push('\n');
        for (p, row) in poem_indices.iter().zip(&self.coords) {
            write!(out, "{p}").unwrap();
            for v in row {
                write!(out, ",{}", sig9(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-sided Jacobi: rotates `cols` (and `basis` alongside) until the
/// columns are mutually orthogonal.
fn jacobi_orthogonalize(cols: &mut [Vec<f64>], basis: &mut [Vec<f64>]) {
    let m = cols.len();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for set in [&mut *cols, &mut *basis] {
                    let (lo, hi) = set.split_at_mut(q);
                    let (a, b) = (&mut lo[p], &mut hi[0]);
                    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s * yq;
                        *y = s * xp + c * yq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Extends `rows` with unit vectors orthogonal to all of them (Gram-Schmidt
/// over the standard basis).
fn complete_orthonormal(rows: &mut Vec<Vec<f64>>, dim: usize, wanted: usize) {
    let mut e = 0;
    while rows.len() < wanted && e < dim {
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        e += 1;
        for r in rows.iter() {
            let d = dot(&v, r);
            v.iter_mut().zip(r).for_each(|(x, y)| *x -= d * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            rows.push(v);
        }
    }
}

/// Mean-centres the points and projects them on the top `n_components`
/// right singular vectors of the centred data (one-sided Jacobi SVD).
/// Each component is signed so its largest-magnitude coordinate is positive.
pub fn pca_project(points: &[Vec<f64>], n_components: usize) -> Result<Projection2D> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least 2 points".into()));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: p.len(),
        });
    }
    if n_components == 0 || n_components > dim {
        return Err(Error::InvalidInput(format!(
            "n_components={n_components} must be in 1..={dim}"
        )));
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    // (singular value, right singular vector)
    let mut pairs: Vec<(f64, Vec<f64>)> = if dim <= n {
        // columns of X, length n; basis accumulates V (dim × dim)
        let mut cols: Vec<Vec<f64>> = (0..dim).map(|j| centred.iter().map(|r| r[j]).collect()).collect();
        let mut basis: Vec<Vec<f64>> = (0..dim)
            .map(|j| (0..dim).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        jacobi_orthogonalize(&mut cols, &mut basis);
        cols.iter()
            .map(|c| dot(c, c).sqrt())
            .zip(basis)
            .collect()
    } else {
        // columns of Xᵀ, length dim; rotated columns are σ·v
        let mut cols = centred.clone();
        let mut basis: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        jacobi_orthogonalize(&mut cols, &mut basis);
        cols.into_iter()
            .map(|c| {
                let s = dot(&c, &c).sqrt();
                let v = if s > 0.0 { c.iter().map(|x| x / s).collect() } else { vec![0.0; dim] };
                (s, v)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = pairs.first().map_or(0.0, |p| p.0);
    let mut components = Vec::with_capacity(n_components);
    let mut variances = Vec::with_capacity(n_components);
    for (s, v) in pairs.into_iter().take(n_components) {
        // null directions of rank-deficient data are rebuilt below
        if s <= 1e-10 * scale {
            break;
        }
        variances.push(s * s / (n - 1) as f64);
        components.push(v);
    }
    let found = components.len();
    complete_orthonormal(&mut components, dim, n_components);
    variances.resize(n_components, 0.0);
    for (i, c) in components.iter_mut().enumerate() {
        if i >= found {
            continue;
        }
        // re-normalize against rotation round-off
        let norm = dot(c, c).sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
    }
    for c in components.iter_mut() {
        let lead = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, &x)| x)
            .unwrap_or(0.0);
        if lead < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let coords = centred
        .iter()
        .map(|r| components.iter().map(|c| dot(r, c)).collect())
        .collect();
    Ok(Projection2D {
        coords,
        components,
        explained_variance: variances,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn square_corners() {
        let p = pts(&[&[0.0, 0.0], &[100.0, 0.0], &[0.0, 100.0], &[100.0, 100.0]]);
        let a = kmeans(&p, 4, 42).unwrap();
        let mut labels = a.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
        assert_eq!(a.inertia, 0.0);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let p = pts(&[&[1.0, 2.0], &[3.0, 6.0], &[5.0, 1.0]]);
        let a = kmeans(&p, 1, 7).unwrap();
        assert!(sq_dist(&a.centroids[0], &[3.0, 3.0]) < 1e-24);
        // Σ‖x - mean‖² = n · (per-point variance)
        let expected = (4.0 + 1.0) + 9.0 + (4.0 + 4.0);
        assert!((a.inertia - expected).abs() < 1e-12);
        assert_eq!(a.labels, vec![0, 0, 0]);
    }

    #[test]
    fn kmeans_errors() {
        let p = pts(&[&[1.0], &[2.0]]);
        assert!(kmeans(&p, 3, 0).is_err());
        assert!(kmeans(&p, 0, 0).is_err());
        assert!(kmeans(&pts(&[&[], &[]]), 1, 0).is_err());
    }

    #[test]
    fn duplicate_points_leave_no_empty_cluster() {
        let p = pts(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let a = kmeans(&p, 4, 3).unwrap();
        let mut sizes = vec![0; 4];
        a.labels.iter().for_each(|&l| sizes[l] += 1);
        assert!(sizes.iter().all(|&s| s > 0), "{sizes:?}");
    }

    #[test]
    fn labels_canonical() {
        let p = pts(&[&[10.0], &[0.0], &[10.1], &[0.1]]);
        let a = kmeans(&p, 2, 5).unwrap();
        assert_eq!(a.labels, vec![1, 0, 1, 0]);
        assert_eq!(a.to_csv(&[0, 1, 2, 3]), "poem_index,cluster\n0,1\n1,0\n2,1\n3,0\n");
    }

    #[test]
    fn collinear_pca() {
        let p: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let proj = pca_project(&p, 2).unwrap();
        let ev = &proj.explained_variance;
        assert!(ev[1] <= 1e-9 * ev[0], "{ev:?}");
    }

    #[test]
    fn lossless_two_dimensional() {
        let p = pts(&[&[1.0, 2.0], &[-3.0, 0.5], &[2.0, -2.5], &[0.0, 0.0]]);
        let proj = pca_project(&p, 2).unwrap();
        for (orig, c) in p.iter().zip(&proj.coords) {
            for j in 0..2 {
                let back = proj.mean[j] + c[0] * proj.components[0][j] + c[1] * proj.components[1][j];
                assert!((back - orig[j]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn wide_data_and_rank_deficiency() {
        // 3 points in 50-D (transposed path) and 2 points (rank 1, needs completion)
        let mut rng = SeededRng::new(2);
        let p: Vec<Vec<f64>> = (0..3).map(|_| (0..50).map(|_| rng.next_f64()).collect()).collect();
        let proj = pca_project(&p, 2).unwrap();
        assert!(proj.explained_variance[0] >= proj.explained_variance[1]);
        let two = pca_project(&p[..2], 2).unwrap();
        assert_eq!(two.explained_variance[1], 0.0);
        assert!(dot(&two.components[0], &two.components[1]).abs() < 1e-12);
        assert!((dot(&two.components[1], &two.components[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_errors() {
        assert!(pca_project(&pts(&[&[1.0, 2.0]]), 1).is_err());
        assert!(pca_project(&pts(&[&[1.0], &[2.0]]), 2).is_err());
    }

    #[test]
    fn projection_csv() {
        let p = pts(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let proj = pca_project(&p, 2).unwrap();
        assert_eq!(proj.to_csv(&[4, 5]), "poem_index,pc1,pc2\n4,1,0\n5,-1,0\n");
    }

    fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 6..30)
    }

    proptest! {
        #[test]
        fn inertia_never_increases(p in cloud(), seed in 0u64..1000) {
            let a = kmeans(&p, 3, seed).unwrap();
            for w in a.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
            }
            prop_assert!(a.labels.iter().all(|&l| l < 3));
        }

        #[test]
        fn labels_survive_uniform_rescaling(p in cloud(), c in prop_oneof![Just(0.5f64), Just(2.0), Just(4.0), Just(0.25)]) {
            let scaled: Vec<Vec<f64>> = p.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
            prop_assert_eq!(kmeans(&p, 3, 11).unwrap().labels, kmeans(&scaled, 3, 11).unwrap().labels);
        }

        #[test]
        fn components_orthonormal_and_centred(p in cloud()) {
            let proj = pca_project(&p, 2).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let d = dot(&proj.components[i], &proj.components[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - want).abs() < 1e-9);
                }
                let mean: f64 = proj.coords.iter().map(|c| c[i]).sum::<f64>() / p.len() as f64;
                prop_assert!(mean.abs() < 1e-9);
            }
            prop_assert!(proj.explained_variance[0] >= proj.explained_variance[1]);
        }
    }
}
