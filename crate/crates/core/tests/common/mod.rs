//! Direct, unoptimised reference computations shared by the integration
//! tests. None of these call into the library's numeric kernels.

#![allow(dead_code)]

use cgnn::graph::Graph;
use cgnn::linalg::DenseMatrix;
use cgnn::synthetic::random_graph;
use cgnn::Prng;

pub fn dense_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `D^{-1/2}(A+I)D^{-1/2}` from an edge list, fully dense.
pub fn dense_normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in edges {
        if u != v {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum::<f64>()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i][j] /= (d[i] * d[j]).sqrt();
        }
    }
    a
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
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
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Unbiased sample covariance of the columns of `d`.
pub fn sample_covariance(d: &DenseMatrix) -> Vec<Vec<f64>> {
    let (n, c) = d.shape();
    let mean: Vec<f64> = (0..c).map(|j| (0..n).map(|i| d[(i, j)]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; c]; c];
    for a in 0..c {
        for b in 0..c {
            cov[a][b] = (0..n).map(|i| (d[(i, a)] - mean[a]) * (d[(i, b)] - mean[b])).sum::<f64>() / (n as f64 - 1.0);
        }
    }
    cov
}

fn inertia_of(points: &DenseMatrix, assign: &[usize], k: usize) -> f64 {
    let d = points.cols();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        for j in 0..d {
            let mu = members.iter().map(|&i| points[(i, j)]).sum::<f64>() / members.len() as f64;
            total += members.iter().map(|&i| (points[(i, j)] - mu).powi(2)).sum::<f64>();
        }
    }
    total
}

/// Smallest within-cluster sum of squares over every assignment of the
/// points to `k` labels.
pub fn brute_force_min_inertia(points: &DenseMatrix, k: usize) -> f64 {
    let n = points.rows();
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; n];
    loop {
        best = best.min(inertia_of(points, &assign, k));
        let mut i = 0;
        while i < n {
            assign[i] += 1;
            if assign[i] < k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

/// Exact inertia of a given assignment.
pub fn assignment_inertia(points: &DenseMatrix, assign: &[usize], k: usize) -> f64 {
    inertia_of(points, assign, k)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = vec![];
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Best matched fraction over every injective cluster-to-class mapping.
pub fn brute_force_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let m = kp.max(kt);
    let ids: Vec<usize> = (0..m).collect();
    let mut best = 0usize;
    for perm in permutations(&ids) {
        let hits = pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

/// `I(a;b) / sqrt(H(a) H(b))` straight from the contingency table.
pub fn direct_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut t = vec![vec![0.0; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        t[x][y] += 1.0;
    }
    let ra: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let cb: Vec<f64> = (0..kb).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let h = |m: &[f64]| -> f64 { m.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum() };
    let (ha, hb) = (h(&ra), h(&cb));
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            if t[i][j] > 0.0 {
                mi += t[i][j] / n * ((t[i][j] * n) / (ra[i] * cb[j])).ln();
            }
        }
    }
    mi / (ha * hb).sqrt()
}

/// `P(pos > neg) + ½ P(tie)` by counting every pair.
pub fn exhaustive_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for &p in pos {
        for &q in neg {
            s += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

/// A random labelled graph with 6 to 10 nodes on which every contrast
/// strategy can sample: at least one edge and no node adjacent to all others.
pub fn small_random_graph(seed: u64) -> Graph {
    let mut rng = Prng::with_stream(seed, 99);
    loop {
        let n = 6 + rng.index(5);
        let f = 3 + rng.index(3);
        let g = random_graph(n, 0.35, f, 2, &mut rng).unwrap();
        if g.num_edges() > 0 && (0..n).all(|i| g.degree(i) + 1 < n) {
            return g;
        }
    }
}
