//! Undirected attributed graphs, GCN propagation, feature corruption and
//! the node / edge splits used by the downstream protocols.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::rng::Prng;

/// Disjoint train / validation / test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplits {
    fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &v in set {
                if v >= num_nodes {
                    return Err(Error::InvalidArgument(format!(
                        "{name} split contains node {v} >= {num_nodes}"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidArgument(format!("node {v} appears in more than one split")));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric, unweighted, loop-free graph with dense node features.
#[derive(Debug, Clone)]
pub struct Graph {
    num_nodes: usize,
    adjacency: CsrMatrix,
    features: DenseMatrix,
    labels: Option<Vec<usize>>,
    num_classes: usize,
    splits: Option<NodeSplits>,
}

/// Symmetric 0/1 adjacency from an edge list. Duplicates and reversed
/// duplicates collapse; self-loops are dropped and counted.
pub fn build_adjacency(num_nodes: usize, edges: &[(usize, usize)]) -> Result<(CsrMatrix, usize)> {
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    let mut self_loops = 0;
    for &(u, v) in edges {
        if u >= num_nodes || v >= num_nodes {
            return Err(Error::InvalidArgument(format!(
                "edge ({u}, {v}) references a node >= {num_nodes}"
            )));
        }
        if u == v {
            self_loops += 1;
            continue;
        }
        neighbours[u].push(v);
        neighbours[v].push(u);
    }
    let mut row_ptr = Vec::with_capacity(num_nodes + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for list in &mut neighbours {
        list.sort_unstable();
        list.dedup();
        col_idx.extend_from_slice(list);
        row_ptr.push(col_idx.len());
    }
    let values = vec![1.0; col_idx.len()];
    Ok((CsrMatrix::new(num_nodes, num_nodes, row_ptr, col_idx, values)?, self_loops))
}

impl Graph {
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], features: DenseMatrix) -> Result<Graph> {
        let (adjacency, _) = build_adjacency(num_nodes, edges)?;
        Graph::from_adjacency(adjacency, features)
    }

    /// Wraps an adjacency that must already be symmetric, 0/1 and loop-free.
    pub fn from_adjacency(adjacency: CsrMatrix, features: DenseMatrix) -> Result<Graph> {
        let n = adjacency.n_rows();
        if adjacency.n_cols() != n {
            return Err(Error::shape("Graph", "adjacency must be square"));
        }
        if features.rows() != n {
            return Err(Error::shape(
                "Graph",
                format!("{} feature rows for {n} nodes", features.rows()),
            ));
        }
        for i in 0..n {
            for (j, v) in adjacency.row_entries(i) {
                if i == j {
                    return Err(Error::InvalidArgument(format!("self-loop stored at node {i}")));
                }
                if v != 1.0 || !adjacency.contains(j, i) {
                    return Err(Error::InvalidArgument(format!("adjacency not symmetric 0/1 at ({i}, {j})")));
                }
            }
        }
        Ok(Graph { num_nodes: n, adjacency, features, labels: None, num_classes: 0, splits: None })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Graph> {
        if labels.len() != self.num_nodes {
            return Err(Error::shape(
                "Graph::with_labels",
                format!("{} labels for {} nodes", labels.len(), self.num_nodes),
            ));
        }
        self.num_classes = labels.iter().max().map_or(0, |m| m + 1);
        self.labels = Some(labels);
        Ok(self)
    }

    /// Like [`Graph::with_labels`] but with an explicit class count (some
    /// classes may have no members).
    pub fn with_labels_and_classes(self, labels: Vec<usize>, num_classes: usize) -> Result<Graph> {
        if let Some(&bad) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidArgument(format!("class id {bad} >= {num_classes}")));
        }
        let mut g = self.with_labels(labels)?;
        g.num_classes = num_classes;
        Ok(g)
    }

    pub fn with_splits(mut self, splits: NodeSplits) -> Result<Graph> {
        splits.validate(self.num_nodes)?;
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn with_features(mut self, features: DenseMatrix) -> Result<Graph> {
        if features.rows() != self.num_nodes {
            return Err(Error::shape("Graph::with_features", "row count differs from node count"));
        }
        self.features = features;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn splits(&self) -> Option<&NodeSplits> {
        self.splits.as_ref()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.row_cols(i)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.contains(u, v)
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Scales every non-zero feature row to sum to one.
    pub fn row_normalize_features(&mut self) {
        for i in 0..self.features.rows() {
            let row = self.features.row_mut(i);
            let s: f64 = row.iter().sum();
            if s != 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }

    /// Node ids grouped by class, each group ascending.
    pub fn class_members(&self) -> Option<Vec<Vec<usize>>> {
        let labels = self.labels.as_ref()?;
        let mut groups = vec![Vec::new(); self.num_classes];
        for (i, &c) in labels.iter().enumerate() {
            groups[c].push(i);
        }
        Some(groups)
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the degree matrix of `A + I`.
pub fn normalized_adjacency(g: &Graph) -> CsrMatrix {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(g.adjacency().nnz() + n);
    let mut values = Vec::with_capacity(g.adjacency().nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let split = nbrs.partition_point(|&j| j < i);
        let cols = nbrs[..split].iter().copied().chain(std::iter::once(i)).chain(nbrs[split..].iter().copied());
        for j in cols {
            col_idx.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(n, n, row_ptr, col_idx, values).expect("normalised adjacency is well formed")
}

/// Row `i` of the result is row `perm[i]` of `m`.
pub fn permute_rows(m: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    m.select_rows(perm)
}

/// Corrupted features: node rows shuffled under a uniform permutation.
pub fn shuffle_features(g: &Graph, rng: &mut Prng) -> DenseMatrix {
    let perm = rng.permutation(g.num_nodes());
    permute_rows(g.features(), &perm)
}

fn members_by_class(g: &Graph) -> Result<Vec<Vec<usize>>> {
    g.class_members()
        .ok_or_else(|| Error::InvalidArgument("node splits need labels".into()))
}

/// Per class: `per_class_train` train and `per_class_val` validation nodes
/// sampled without replacement; every remaining node goes to test.
pub fn make_node_splits(g: &Graph, per_class_train: usize, per_class_val: usize, rng: &mut Prng) -> Result<NodeSplits> {
    let groups = members_by_class(g)?;
    let mut splits = NodeSplits { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (class, members) in groups.iter().enumerate() {
        if members.len() < per_class_train + per_class_val {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} nodes, needs at least {}",
                members.len(),
                per_class_train + per_class_val
            )));
        }
        let order = rng.sample_without_replacement(members, members.len());
        splits.train.extend_from_slice(&order[..per_class_train]);
        splits.val.extend_from_slice(&order[per_class_train..per_class_train + per_class_val]);
        splits.test.extend_from_slice(&order[per_class_train + per_class_val..]);
    }
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();
    Ok(splits)
}

/// Per-class train nodes plus fixed-size validation and test sets drawn from
/// the remainder (the layout of the usual citation-benchmark split).
pub fn make_fixed_size_splits(
    g: &Graph,
    per_class_train: usize,
    num_val: usize,
    num_test: usize,
    rng: &mut Prng,
) -> Result<NodeSplits> {
    let groups = members_by_class(g)?;
    let mut train = Vec::new();
    for (class, members) in groups.iter().enumerate() {
        if members.len() < per_class_train {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} nodes, needs at least {per_class_train}",
                members.len()
            )));
        }
        train.extend(rng.sample_without_replacement(members, per_class_train));
    }
    let in_train: HashSet<usize> = train.iter().copied().collect();
    let rest: Vec<usize> = (0..g.num_nodes()).filter(|v| !in_train.contains(v)).collect();
    if rest.len() < num_val + num_test {
        return Err(Error::InvalidArgument(format!(
            "{} nodes left after training selection, need {}",
            rest.len(),
            num_val + num_test
        )));
    }
    let picked = rng.sample_without_replacement(&rest, num_val + num_test);
    let mut splits = NodeSplits {
        train,
        val: picked[..num_val].to_vec(),
        test: picked[num_val..].to_vec(),
    };
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();
    Ok(splits)
}

/// Held-out edges for link prediction.
#[derive(Debug, Clone)]
pub struct EdgeSplit {
    /// Same node set and features as the input, only training edges.
    pub train_graph: Graph,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

/// Fractions of the undirected edge set assigned to train / val / test.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for EdgeFractions {
    fn default() -> Self {
        EdgeFractions { train: 0.85, val: 0.05, test: 0.10 }
    }
}

/// Partitions the edges (validation and test sizes rounded, train takes the
/// remainder) and samples as many non-edges as positives for each held-out
/// part. Negatives are distinct and never edges of the original graph.
pub fn split_edges_for_lp(g: &Graph, fractions: EdgeFractions, rng: &mut Prng) -> Result<EdgeSplit> {
    let edges = g.edges();
    let m = edges.len();
    if m < 20 {
        return Err(Error::InvalidArgument(format!("link-prediction split needs >= 20 edges, got {m}")));
    }
    let total = fractions.train + fractions.val + fractions.test;
    if !(fractions.val >= 0.0 && fractions.test >= 0.0 && (total - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidArgument("edge fractions must be non-negative and sum to 1".into()));
    }
    let n_val = (fractions.val * m as f64).round() as usize;
    let n_test = (fractions.test * m as f64).round() as usize;
    if n_val + n_test >= m {
        return Err(Error::InvalidArgument("no edges left for training".into()));
    }

    let order = rng.permutation(m);
    let val_pos: Vec<_> = order[..n_val].iter().map(|&i| edges[i]).collect();
    let test_pos: Vec<_> = order[n_val..n_val + n_test].iter().map(|&i| edges[i]).collect();
    let mut train_edges: Vec<_> = order[n_val + n_test..].iter().map(|&i| edges[i]).collect();
    train_edges.sort_unstable();

    let n = g.num_nodes();
    let needed = n_val + n_test;
    let max_attempts = 100 * needed.max(1);
    let mut taken: HashSet<(usize, usize)> = HashSet::with_capacity(needed);
    let mut negatives = Vec::with_capacity(needed);
    let mut attempts = 0;
    while negatives.len() < needed {
        if attempts >= max_attempts {
            return Err(Error::Sampling(format!(
                "found {} of {needed} non-edges after {attempts} draws; graph too dense",
                negatives.len()
            )));
        }
        attempts += 1;
        let (a, b) = (rng.index(n), rng.index(n));
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if g.has_edge(pair.0, pair.1) || !taken.insert(pair) {
            continue;
        }
        negatives.push(pair);
    }
    let test_neg = negatives.split_off(n_val);
    let val_neg = negatives;

    let mut train_graph = Graph::from_edges(n, &train_edges, g.features().clone())?;
    if let Some(labels) = g.labels() {
        train_graph = train_graph.with_labels_and_classes(labels.to_vec(), g.num_classes())?;
    }
    Ok(EdgeSplit { train_graph, val_pos, val_neg, test_pos, test_neg })
}
