//! Small generated graphs for examples and tests.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::rng::Prng;

/// A planted-partition graph with bag-of-words style features: each class
/// owns a block of "topic" features that its nodes prefer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedPartition {
    pub num_classes: usize,
    pub nodes_per_class: usize,
    /// Edge probability inside a class.
    pub p_in: f64,
    /// Edge probability across classes.
    pub p_out: f64,
    pub num_features: usize,
    /// Active features per node.
    pub words_per_node: usize,
    /// Probability that an active feature is drawn from the node's topic block.
    pub feature_signal: f64,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            num_classes: 4,
            nodes_per_class: 50,
            p_in: 0.08,
            p_out: 0.005,
            num_features: 100,
            words_per_node: 8,
            feature_signal: 0.6,
            seed: 0,
        }
    }
}

impl PlantedPartition {
    pub fn generate(&self) -> Result<Graph> {
        let k = self.num_classes;
        if k == 0 || self.nodes_per_class == 0 || self.num_features < k || self.words_per_node == 0 {
            return Err(Error::InvalidArgument(format!("degenerate planted partition {self:?}")));
        }
        let probs_ok = [self.p_in, self.p_out, self.feature_signal].iter().all(|p| (0.0..=1.0).contains(p));
        if !probs_ok {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        let mut rng = Prng::new(self.seed);
        let n = k * self.nodes_per_class;
        let labels: Vec<usize> = (0..n).map(|i| i / self.nodes_per_class).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = if labels[u] == labels[v] { self.p_in } else { self.p_out };
                if rng.next_f64() < p {
                    edges.push((u, v));
                }
            }
        }
        let block = self.num_features / k;
        let mut features = DenseMatrix::zeros(n, self.num_features);
        for (i, &c) in labels.iter().enumerate() {
            for _ in 0..self.words_per_node {
                let f = if rng.next_f64() < self.feature_signal {
                    c * block + rng.index(block)
                } else {
                    rng.index(self.num_features)
                };
                features[(i, f)] = 1.0;
            }
        }
        Graph::from_edges(n, &edges, features)?.with_labels_and_classes(labels, k)
    }
}

/// Erdős–Rényi graph with uniform features in `[-1, 1)` and random labels
/// over `num_classes` classes.
pub fn random_graph(n: usize, p: f64, num_features: usize, num_classes: usize, rng: &mut Prng) -> Result<Graph> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument("num_classes must be >= 1".into()));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.next_f64() < p {
                edges.push((u, v));
            }
        }
    }
    let features = DenseMatrix::from_fn(n, num_features, |_, _| rng.uniform(-1.0, 1.0));
    let labels = (0..n).map(|_| rng.index(num_classes)).collect();
    Graph::from_edges(n, &edges, features)?.with_labels_and_classes(labels, num_classes)
}

/// Six nodes in two labelled triangles joined by the edge 2-3, with four
/// fixed features. Small enough for exhaustive finite differences and
/// sparse enough for every contrast strategy.
pub fn toy_graph() -> Graph {
    let edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)];
    let features = DenseMatrix::from_fn(6, 4, |i, j| (((i * 7 + j * 3) % 5) as f64 - 1.5) * 0.4);
    Graph::from_edges(6, &edges, features)
        .and_then(|g| g.with_labels_and_classes(vec![0, 0, 0, 1, 1, 1], 2))
        .expect("fixed toy graph is valid")
}
