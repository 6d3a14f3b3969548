//! Downstream evaluation of frozen embeddings: a linear probe for node
//! classification, k-means clustering scored by Acc/NMI/F1, and
//! inner-product link prediction scored by AUC.

use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{make_fixed_size_splits, split_edges_for_lp, EdgeFractions, Graph, NodeSplits};
use crate::linalg::{dot, pca_project, softmax_in_place, DenseMatrix};
use crate::rng::Prng;
use crate::train::{embed, train, TrainConfig};

/// Per-seed metric values with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: String,
    pub metric: String,
    /// Seed label for each value, e.g. `"split=0,run=3"`.
    pub runs: Vec<String>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl EvalReport {
    pub fn new(task: &str, metric: &str, runs: Vec<String>, values: Vec<f64>) -> EvalReport {
        let n = values.len() as f64;
        let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / n };
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        EvalReport { task: task.into(), metric: metric.into(), runs, values, mean, std }
    }

    /// `mean ± std` in percent with two decimals.
    pub fn summary(&self) -> String {
        format!("{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub l2: f64,
    pub lr: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { l2: 1e-4, lr: 0.01, max_iters: 2000, tol: 1e-5 }
    }
}

/// A trained multinomial logistic regression.
#[derive(Debug, Clone)]
pub struct LinearProbe {
    /// `H x C`.
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub iterations: usize,
}

impl LinearProbe {
    pub fn predict(&self, z: &DenseMatrix, rows: &[usize]) -> Vec<usize> {
        rows.iter()
            .map(|&i| {
                let logits = self.logits(z.row(i));
                let mut best = 0;
                for (c, &v) in logits.iter().enumerate() {
                    if v > logits[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let c = self.bias.len();
        let mut out = self.bias.clone();
        for (h, &xh) in x.iter().enumerate() {
            if xh != 0.0 {
                let w = self.weights.row(h);
                for k in 0..c {
                    out[k] += xh * w[k];
                }
            }
        }
        out
    }
}

/// Full-batch softmax regression with an L2 penalty on the weights (not the
/// bias), stepped with Adam until the gradient norm drops below `tol`.
pub fn fit_probe(z: &DenseMatrix, labels: &[usize], train_rows: &[usize], num_classes: usize, cfg: &ProbeConfig) -> Result<LinearProbe> {
    if train_rows.is_empty() {
        return Err(Error::InvalidArgument("linear probe: empty training split".into()));
    }
    let (h, c) = (z.cols(), num_classes);
    let mut probe = LinearProbe { weights: DenseMatrix::zeros(h, c), bias: vec![0.0; c], iterations: 0 };
    let n_params = h * c + c;
    let (mut m, mut v) = (vec![0.0; n_params], vec![0.0; n_params]);
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let inv_n = 1.0 / train_rows.len() as f64;
    for it in 1..=cfg.max_iters {
        let mut grad = vec![0.0; n_params];
        for &i in train_rows {
            let x = z.row(i);
            let mut p = probe.logits(x);
            softmax_in_place(&mut p);
            p[labels[i]] -= 1.0;
            for (hh, &xh) in x.iter().enumerate() {
                if xh != 0.0 {
                    let g = &mut grad[hh * c..(hh + 1) * c];
                    for k in 0..c {
                        g[k] += xh * p[k] * inv_n;
                    }
                }
            }
            for k in 0..c {
                grad[h * c + k] += p[k] * inv_n;
            }
        }
        for (g, w) in grad[..h * c].iter_mut().zip(probe.weights.data()) {
            *g += cfg.l2 * w;
        }
        probe.iterations = it;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() {
            return Err(Error::NonFinite("linear probe gradient".into()));
        }
        if gnorm < cfg.tol {
            break;
        }
        let (bc1, bc2) = (1.0 - b1.powi(it as i32), 1.0 - b2.powi(it as i32));
        let params = probe.weights.data_mut().iter_mut().chain(probe.bias.iter_mut());
        for (k, p) in params.enumerate() {
            m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
            v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
            *p -= cfg.lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
        }
    }
    Ok(probe)
}

/// Test accuracy of a probe trained on the train split.
pub fn linear_probe(z: &DenseMatrix, labels: &[usize], splits: &NodeSplits, cfg: &ProbeConfig) -> Result<f64> {
    if labels.len() != z.rows() {
        return Err(Error::shape("linear_probe", format!("{} labels for {} rows", labels.len(), z.rows())));
    }
    if splits.test.is_empty() {
        return Err(Error::InvalidArgument("linear probe: empty test split".into()));
    }
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let probe = fit_probe(z, labels, &splits.train, num_classes, cfg)?;
    let pred = probe.predict(z, &splits.test);
    let correct = pred.iter().zip(&splits.test).filter(|(p, &i)| **p == labels[i]).count();
    Ok(correct as f64 / splits.test.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    pub iterations: usize,
}

pub const KMEANS_MAX_ITERS: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared distances from each point to its cluster mean.
pub fn partition_inertia(points: &DenseMatrix, assignments: &[usize], k: usize) -> f64 {
    let d = points.cols();
    let mut sums = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s /= n);
        }
    }
    assignments.iter().enumerate().map(|(i, &a)| sq_dist(points.row(i), sums.row(a))).sum()
}

fn kmeans_pp(points: &DenseMatrix, k: usize, rng: &mut Prng) -> Vec<usize> {
    let n = points.rows();
    let mut chosen = vec![rng.index(n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.next_f64() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = Some(i);
                    break;
                }
                u -= w;
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // Every remaining point coincides with a centre.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.index(free.len())]
        };
        chosen.push(next);
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(points.row(i), points.row(next)));
        }
    }
    chosen
}

fn nearest(x: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(x, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm from k-means++ seeding, until the assignment stops
/// changing or 300 iterations.
pub fn kmeans(points: &DenseMatrix, k: usize, seed: u64) -> Result<KMeansResult> {
    let (n, d) = points.shape();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= k <= {n}, got {k}")));
    }
    let mut rng = Prng::new(seed);
    let mut centroids = points.select_rows(&kmeans_pp(points, k, &mut rng));
    let mut assignments = vec![usize::MAX; n];
    let mut iterations = 0;
    for it in 1..=KMEANS_MAX_ITERS {
        iterations = it;
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (c, dd) = nearest(points.row(i), &centroids);
            dist[i] = dd;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        // Re-seed empty clusters at the point farthest from its centre. When
        // every point sits on its centre there is nothing to split off and
        // the cluster stays empty.
        let mut counts = vec![0usize; k];
        assignments.iter().for_each(|&a| counts[a] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assignments[i]] > 1 && dist[i] > 0.0)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(far) = far {
                    counts[assignments[far]] -= 1;
                    assignments[far] = c;
                    counts[c] = 1;
                    dist[far] = 0.0;
                    changed = true;
                }
            }
        }
        let mut sums = DenseMatrix::zeros(k, d);
        for (i, &a) in assignments.iter().enumerate() {
            for (s, x) in sums.row_mut(a).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                sums.row_mut(c).copy_from_slice(centroids.row(c));
            } else {
                let inv = 1.0 / counts[c] as f64;
                sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
            }
        }
        centroids = sums;
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points.row(i), centroids.row(assignments[i]))).sum();
    Ok(KMeansResult { assignments, centroids, inertia, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterMetrics {
    pub acc: f64,
    pub nmi: f64,
    pub f1_macro: f64,
}

fn dense_ids(xs: &[usize]) -> (Vec<usize>, usize) {
    let map: BTreeMap<usize, usize> = {
        let mut uniq: Vec<usize> = xs.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        uniq.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
    };
    (xs.iter().map(|x| map[x]).collect(), map.len())
}

/// Cluster-to-class mapping maximising matched points (Hungarian).
/// Returns `map[cluster] = Some(class)` and the matched count.
pub fn hungarian_mapping(contingency: &[Vec<i64>]) -> (Vec<Option<usize>>, i64) {
    let kp = contingency.len();
    let kt = contingency.first().map_or(0, |r| r.len());
    let mut map = vec![None; kp];
    if kp == 0 || kt == 0 {
        return (map, 0);
    }
    if kp <= kt {
        let m = Matrix::from_fn(kp, kt, |(i, j)| contingency[i][j]);
        let (total, cols) = kuhn_munkres(&m);
        for (i, &j) in cols.iter().enumerate() {
            map[i] = Some(j);
        }
        (map, total)
    } else {
        let m = Matrix::from_fn(kt, kp, |(j, i)| contingency[i][j]);
        let (total, rows) = kuhn_munkres(&m);
        for (j, &i) in rows.iter().enumerate() {
            map[i] = Some(j);
        }
        (map, total)
    }
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / n;
        -p * p.ln()
    }).sum()
}

/// Hungarian-matched accuracy, NMI with the geometric-mean normaliser, and
/// macro F1 over the true classes after the same matching.
pub fn clustering_metrics(pred: &[usize], truth: &[usize]) -> Result<ClusterMetrics> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::shape("clustering_metrics", format!("{} predictions, {} labels", pred.len(), truth.len())));
    }
    let n = pred.len();
    let (p, kp) = dense_ids(pred);
    let (t, kt) = dense_ids(truth);
    let mut cont = vec![vec![0i64; kt]; kp];
    for (&a, &b) in p.iter().zip(&t) {
        cont[a][b] += 1;
    }
    let (map, matched) = hungarian_mapping(&cont);
    let acc = matched as f64 / n as f64;

    let nf = n as f64;
    let a_counts: Vec<usize> = cont.iter().map(|r| r.iter().sum::<i64>() as usize).collect();
    let b_counts: Vec<usize> = (0..kt).map(|j| cont.iter().map(|r| r[j]).sum::<i64>() as usize).collect();
    let (hp, ht) = (entropy(&a_counts, nf), entropy(&b_counts, nf));
    let nmi = if hp <= 0.0 || ht <= 0.0 {
        0.0
    } else {
        let mut mi = 0.0;
        for i in 0..kp {
            for j in 0..kt {
                let nij = cont[i][j] as f64;
                if nij > 0.0 {
                    mi += nij / nf * (nf * nij / (a_counts[i] as f64 * b_counts[j] as f64)).ln();
                }
            }
        }
        (mi / (hp * ht).sqrt()).clamp(0.0, 1.0)
    };

    let mut f1_sum = 0.0;
    for j in 0..kt {
        let cluster = map.iter().position(|m| *m == Some(j));
        let (tp, predicted) = match cluster {
            Some(i) => (cont[i][j] as f64, a_counts[i] as f64),
            None => (0.0, 0.0),
        };
        let denom = predicted + b_counts[j] as f64;
        f1_sum += if denom > 0.0 { 2.0 * tp / denom } else { 0.0 };
    }
    Ok(ClusterMetrics { acc, nmi, f1_macro: f1_sum / kt as f64 })
}

/// Acc/NMI/F1 reports for one input representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterVariant {
    pub name: String,
    pub acc: EvalReport,
    pub nmi: EvalReport,
    pub f1_macro: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringEval {
    pub raw: ClusterVariant,
    pub pca: ClusterVariant,
    pub pca_dim: usize,
    /// `"raw"` or `"pca"`, whichever has the higher mean accuracy
    /// (raw on ties).
    pub best: String,
}

impl ClusteringEval {
    pub fn best_variant(&self) -> &ClusterVariant {
        if self.best == "pca" { &self.pca } else { &self.raw }
    }
}

fn cluster_variant(name: &str, points: &DenseMatrix, labels: &[usize], k: usize, seeds: &[u64]) -> Result<ClusterVariant> {
    let mut acc = vec![];
    let mut nmi = vec![];
    let mut f1 = vec![];
    for &s in seeds {
        let km = kmeans(points, k, s)?;
        let m = clustering_metrics(&km.assignments, labels)?;
        acc.push(m.acc);
        nmi.push(m.nmi);
        f1.push(m.f1_macro);
    }
    let runs: Vec<String> = seeds.iter().map(|s| format!("seed={s}")).collect();
    let task = format!("cluster/{name}");
    Ok(ClusterVariant {
        name: name.into(),
        acc: EvalReport::new(&task, "acc", runs.clone(), acc),
        nmi: EvalReport::new(&task, "nmi", runs.clone(), nmi),
        f1_macro: EvalReport::new(&task, "f1_macro", runs, f1),
    })
}

/// k-means on the raw embedding and on its PCA projection, one run per seed.
pub fn eval_clustering(z: &DenseMatrix, labels: &[usize], k: usize, pca_dim: usize, seeds: &[u64]) -> Result<ClusteringEval> {
    if labels.len() != z.rows() {
        return Err(Error::shape("eval_clustering", format!("{} labels for {} rows", labels.len(), z.rows())));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("eval_clustering needs at least one seed".into()));
    }
    let dim = pca_dim.min(z.cols());
    let projected = pca_project(z, dim)?;
    let raw = cluster_variant("raw", z, labels, k, seeds)?;
    let pca = cluster_variant("pca", &projected, labels, k, seeds)?;
    let best = if pca.acc.mean > raw.acc.mean { "pca" } else { "raw" };
    Ok(ClusteringEval { raw, pca, pca_dim: dim, best: best.into() })
}

/// AUC by rank statistics: `P(pos > neg) + ½ P(tie)`.
pub fn auc_from_scores(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("AUC needs positive and negative scores".into()));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Midranks over tie groups, 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// AUC of inner-product scores `z_uᵀ z_v`.
pub fn link_auc(z: &DenseMatrix, pos_edges: &[(usize, usize)], neg_edges: &[(usize, usize)]) -> Result<f64> {
    let score = |edges: &[(usize, usize)]| -> Result<Vec<f64>> {
        edges
            .iter()
            .map(|&(u, v)| {
                if u >= z.rows() || v >= z.rows() {
                    Err(Error::InvalidArgument(format!("edge ({u}, {v}) out of range")))
                } else {
                    Ok(dot(z.row(u), z.row(v)))
                }
            })
            .collect()
    };
    auc_from_scores(&score(pos_edges)?, &score(neg_edges)?)
}

/// Split layout for node classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeSplitSizes {
    pub per_class_train: usize,
    pub num_val: usize,
    pub num_test: usize,
}

impl Default for NodeSplitSizes {
    fn default() -> Self {
        NodeSplitSizes { per_class_train: 20, num_val: 500, num_test: 1000 }
    }
}

pub fn node_splits_for_seed(g: &Graph, sizes: &NodeSplitSizes, split_seed: u64) -> Result<NodeSplits> {
    make_fixed_size_splits(g, sizes.per_class_train, sizes.num_val, sizes.num_test, &mut Prng::with_stream(split_seed, 7))
}

fn labels_of(g: &Graph) -> Result<&[usize]> {
    g.labels().ok_or_else(|| Error::InvalidArgument("this evaluation needs node labels".into()))
}

/// Probe accuracy of one embedding over several generated splits.
pub fn eval_node_classification(
    g: &Graph,
    z: &DenseMatrix,
    sizes: &NodeSplitSizes,
    split_seeds: &[u64],
    probe: &ProbeConfig,
) -> Result<EvalReport> {
    let labels = labels_of(g)?;
    let mut runs = vec![];
    let mut values = vec![];
    for &s in split_seeds {
        let splits = node_splits_for_seed(g, sizes, s)?;
        values.push(linear_probe(z, labels, &splits, probe)?);
        runs.push(format!("split={s}"));
    }
    Ok(EvalReport::new("nc", "accuracy", runs, values))
}

/// Trains one encoder per run seed and probes each on every split seed.
/// Training ignores labels, so each run seed is trained once.
pub fn nc_protocol(
    g: &Graph,
    cfg: &TrainConfig,
    sizes: &NodeSplitSizes,
    split_seeds: &[u64],
    run_seeds: &[u64],
    probe: &ProbeConfig,
) -> Result<EvalReport> {
    let labels = labels_of(g)?;
    let splits: Vec<NodeSplits> = split_seeds.iter().map(|&s| node_splits_for_seed(g, sizes, s)).collect::<Result<_>>()?;
    let mut runs = vec![];
    let mut values = vec![];
    for &r in run_seeds {
        let out = train(g, &TrainConfig { seed: r, ..cfg.clone() })?;
        let z = embed(g, &out.params)?;
        for (sp, &s) in splits.iter().zip(split_seeds) {
            values.push(linear_probe(&z, labels, sp, probe)?);
            runs.push(format!("split={s},run={r}"));
        }
    }
    Ok(EvalReport::new("nc", "accuracy", runs, values))
}

/// Link prediction: for each split seed, hold out edges, train on the
/// remaining graph once per run seed, and score the held-out test edges.
pub fn lp_protocol(
    g: &Graph,
    cfg: &TrainConfig,
    fractions: EdgeFractions,
    split_seeds: &[u64],
    run_seeds: &[u64],
) -> Result<EvalReport> {
    let mut runs = vec![];
    let mut values = vec![];
    for &s in split_seeds {
        let split = split_edges_for_lp(g, fractions, &mut Prng::with_stream(s, 8))?;
        for &r in run_seeds {
            let out = train(&split.train_graph, &TrainConfig { seed: r, ..cfg.clone() })?;
            let z = embed(&split.train_graph, &out.params)?;
            values.push(link_auc(&z, &split.test_pos, &split.test_neg)?);
            runs.push(format!("split={s},run={r}"));
        }
    }
    Ok(EvalReport::new("lp", "auc", runs, values))
}
