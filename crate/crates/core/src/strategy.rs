//! Seed selection and tuple construction for the three contrast strategies:
//! local clustering with a curriculum (LC), multi-level (ML) and
//! co-occurrence (CO).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, DenseMatrix};
use crate::loss::{ContrastTuples, SeedSource};
use crate::rng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Lc,
    Ml,
    Co,
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lc" => Ok(StrategyKind::Lc),
            "ml" => Ok(StrategyKind::Ml),
            "co" => Ok(StrategyKind::Co),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?} (expected lc, ml or co)"))),
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::Lc => "lc",
            StrategyKind::Ml => "ml",
            StrategyKind::Co => "co",
        })
    }
}

/// Curriculum parameters for LC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurriculumConfig {
    /// Epochs per curriculum round (`R`).
    pub rounds: usize,
    /// Candidate positives per seed (`k`).
    pub k: usize,
    /// Total epochs (`e`).
    pub total_epochs: usize,
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.k == 0 || self.total_epochs < self.rounds {
            return Err(Error::InvalidArgument(format!(
                "curriculum needs R >= 1, k >= 1 and e >= R (R={}, k={}, e={})",
                self.rounds, self.k, self.total_epochs
            )));
        }
        Ok(())
    }

    /// Seed-set size at `epoch`: `min(N, ceil((floor(epoch/R)+1) * R/e * N))`.
    pub fn seed_count(&self, epoch: usize, n: usize) -> usize {
        let round = epoch / self.rounds + 1;
        let m = (round * self.rounds * n).div_ceil(self.total_epochs);
        m.min(n)
    }

    /// Whether `epoch` starts a new round (epochs 1, R+1, 2R+1, ...).
    pub fn is_refresh_epoch(&self, epoch: usize) -> bool {
        (epoch - 1) % self.rounds == 0
    }
}

/// Per-node entropy of `softmax_j(z_iᵀ z_j)`, computed row by row.
pub fn entropy_scores(z: &DenseMatrix) -> Vec<f64> {
    (0..z.rows())
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            let s: Vec<f64> = z.row_iter().map(|zj| dot(zi, zj)).collect();
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = s.iter().map(|&v| (v - max).exp()).sum();
            // H = ln Σ e^{s−m} − Σ p (s − m)
            let weighted: f64 = s.iter().map(|&v| (v - max).exp() / sum * (v - max)).sum();
            (sum.ln() - weighted).max(0.0)
        })
        .collect()
}

/// Cached LC seed set.
#[derive(Debug, Clone, Default)]
pub struct CurriculumState {
    seeds: Vec<usize>,
    last_refresh: Option<usize>,
}

impl CurriculumState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn last_refresh(&self) -> Option<usize> {
        self.last_refresh
    }
}

/// LC seed selection. Recomputes at the first epoch of each round and
/// otherwise returns the cached set. Seeds are returned in ascending id order.
pub fn lc_seed_select(z: &DenseMatrix, epoch: usize, state: &mut CurriculumState, cfg: &CurriculumConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    if epoch == 0 || epoch > cfg.total_epochs {
        return Err(Error::InvalidArgument(format!("epoch {epoch} outside 1..={}", cfg.total_epochs)));
    }
    if state.last_refresh.is_some() && !cfg.is_refresh_epoch(epoch) {
        return Ok(state.seeds.clone());
    }
    let n = z.rows();
    let h = entropy_scores(z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[a].total_cmp(&h[b]).then(a.cmp(&b)));
    let mut seeds: Vec<usize> = order.into_iter().take(cfg.seed_count(epoch, n)).collect();
    seeds.sort_unstable();
    state.seeds = seeds.clone();
    state.last_refresh = Some(epoch);
    Ok(seeds)
}

/// The `min(k, deg(i))` neighbours of `i` with the largest `z_iᵀ z_j`,
/// ties broken by ascending id.
pub fn top_k_neighbors(z: &DenseMatrix, g: &Graph, i: usize, k: usize) -> Vec<usize> {
    let zi = z.row(i);
    let mut scored: Vec<(f64, usize)> = g.neighbors(i).iter().map(|&j| (dot(zi, z.row(j)), j)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, j)| j).collect()
}

/// LC tuples: positive uniform over the top-k neighbours (the seed itself
/// when isolated), negative uniform over all nodes.
pub fn lc_contrast(z: &DenseMatrix, g: &Graph, seeds: &[usize], k: usize, rng: &mut Prng) -> Result<ContrastTuples> {
    if seeds.is_empty() || k == 0 {
        return Err(Error::InvalidArgument("lc_contrast needs seeds and k >= 1".into()));
    }
    if z.rows() != g.num_nodes() {
        return Err(Error::shape("lc_contrast", format!("{} representations for {} nodes", z.rows(), g.num_nodes())));
    }
    let n = g.num_nodes();
    let mut t = ContrastTuples {
        seed_idx: Vec::with_capacity(seeds.len()),
        pos_idx: Vec::with_capacity(seeds.len()),
        neg_idx: Vec::with_capacity(seeds.len()),
        seed_source: SeedSource::FReps,
    };
    for &i in seeds {
        let cands = top_k_neighbors(z, g, i, k);
        let pos = if cands.is_empty() { i } else { cands[rng.index(cands.len())] };
        t.seed_idx.push(i);
        t.pos_idx.push(pos);
        t.neg_idx.push(rng.index(n));
    }
    Ok(t)
}

/// ML tuples: seed `g_i`, positive `z_i`, negative a uniform `z_j`.
pub fn ml_contrast(z: &DenseMatrix, g_reps: &DenseMatrix, rng: &mut Prng) -> Result<ContrastTuples> {
    if z.rows() != g_reps.rows() || z.rows() == 0 {
        return Err(Error::shape("ml_contrast", format!("f has {} rows, g has {}", z.rows(), g_reps.rows())));
    }
    let n = z.rows();
    Ok(ContrastTuples {
        seed_idx: (0..n).collect(),
        pos_idx: (0..n).collect(),
        neg_idx: (0..n).map(|_| rng.index(n)).collect(),
        seed_source: SeedSource::GReps,
    })
}

const CO_REJECTION_TRIES: usize = 64;

/// One CO tuple for a given seed: a uniform neighbour and a uniform
/// non-adjacent, non-self node.
pub fn co_tuple_for_seed(g: &Graph, seed: usize, rng: &mut Prng) -> Result<(usize, usize)> {
    let n = g.num_nodes();
    let nbrs = g.neighbors(seed);
    if nbrs.is_empty() {
        return Err(Error::Sampling(format!("node {seed} has no neighbours")));
    }
    let pos = nbrs[rng.index(nbrs.len())];
    if nbrs.len() + 1 >= n {
        return Err(Error::Sampling(format!("node {seed} is adjacent to every other node; no negative exists")));
    }
    for _ in 0..CO_REJECTION_TRIES {
        let j = rng.index(n);
        if j != seed && !g.has_edge(seed, j) {
            return Ok((pos, j));
        }
    }
    // Dense neighbourhood: fall back to drawing from the explicit candidate list.
    let cands: Vec<usize> = (0..n).filter(|&j| j != seed && nbrs.binary_search(&j).is_err()).collect();
    Ok((pos, cands[rng.index(cands.len())]))
}

/// CO tuples: `num_samples` seeds drawn uniformly from non-isolated nodes.
pub fn co_contrast(g: &Graph, rng: &mut Prng, num_samples: usize) -> Result<ContrastTuples> {
    let active: Vec<usize> = (0..g.num_nodes()).filter(|&i| g.degree(i) > 0).collect();
    if active.is_empty() {
        return Err(Error::Sampling("co-occurrence sampling needs at least one edge".into()));
    }
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be >= 1".into()));
    }
    let mut t = ContrastTuples {
        seed_idx: Vec::with_capacity(num_samples),
        pos_idx: Vec::with_capacity(num_samples),
        neg_idx: Vec::with_capacity(num_samples),
        seed_source: SeedSource::FReps,
    };
    for _ in 0..num_samples {
        let seed = active[rng.index(active.len())];
        let (pos, neg) = co_tuple_for_seed(g, seed, rng)?;
        t.seed_idx.push(seed);
        t.pos_idx.push(pos);
        t.neg_idx.push(neg);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges, DenseMatrix::zeros(n, 1)).unwrap()
    }

    #[test]
    fn entropy_uniform_and_peaked() {
        let z = DenseMatrix::from_fn(4, 3, |_, j| j as f64);
        for h in entropy_scores(&z) {
            assert!((h - 4f64.ln()).abs() < 1e-12);
        }
        // z1·z2 = 40·1 exceeds z1·z1 = 1 by 39; z2 dominates row 1 too.
        let z = DenseMatrix::from_vec(2, 1, vec![1.0, 41.0]).unwrap();
        assert!(entropy_scores(&z)[0] < 1e-15);
    }

    #[test]
    fn entropy_direct_summation_oracle() {
        let mut rng = Prng::new(11);
        let z = DenseMatrix::from_fn(5, 3, |_, _| rng.uniform(-1.0, 1.0));
        let h = entropy_scores(&z);
        for i in 0..5 {
            let e: Vec<f64> = (0..5).map(|j| dot(z.row(i), z.row(j)).exp()).collect();
            let s: f64 = e.iter().sum();
            let want: f64 = -e.iter().map(|v| v / s * (v / s).ln()).sum::<f64>();
            assert!((h[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn curriculum_size_formula() {
        let cfg = CurriculumConfig { rounds: 30, k: 3, total_epochs: 300 };
        assert_eq!(cfg.seed_count(1, 100), 10);
        assert_eq!(cfg.seed_count(31, 100), 20);
        assert_eq!(cfg.seed_count(300, 100), 100);
        let small = CurriculumConfig { rounds: 1, k: 1, total_epochs: 3 };
        assert_eq!(small.seed_count(3, 10), 10);
        assert!(small.is_refresh_epoch(2));
    }

    #[test]
    fn seed_select_caches_within_round() {
        let cfg = CurriculumConfig { rounds: 30, k: 3, total_epochs: 300 };
        let mut rng = Prng::new(2);
        let z1 = DenseMatrix::from_fn(100, 4, |_, _| rng.uniform(-1.0, 1.0));
        let z2 = DenseMatrix::from_fn(100, 4, |_, _| rng.uniform(-1.0, 1.0));
        let mut st = CurriculumState::new();
        let a = lc_seed_select(&z1, 1, &mut st, &cfg).unwrap();
        assert_eq!(a.len(), 10);
        let b = lc_seed_select(&z2, 2, &mut st, &cfg).unwrap();
        assert_eq!(a, b);
        let c = lc_seed_select(&z2, 31, &mut st, &cfg).unwrap();
        assert_eq!(c.len(), 20);
        assert_eq!(st.last_refresh(), Some(31));
    }

    #[test]
    fn lc_forced_and_isolated() {
        let g = graph(3, &[(0, 1)]);
        let z = DenseMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let mut rng = Prng::new(0);
        for _ in 0..20 {
            let t = lc_contrast(&z, &g, &[0, 2], 3, &mut rng).unwrap();
            assert_eq!(t.pos_idx, vec![1, 2]);
        }
    }

    #[test]
    fn lc_star_top_k_matches_enumeration() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let mut rng = Prng::new(6);
        let z = DenseMatrix::from_fn(6, 3, |_, _| rng.uniform(-1.0, 1.0));
        let got = top_k_neighbors(&z, &g, 0, 2);
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 1..6 {
            for b in (a + 1)..6 {
                let s = dot(z.row(0), z.row(a)) + dot(z.row(0), z.row(b));
                if s > best.0 {
                    best = (s, vec![a, b]);
                }
            }
        }
        let mut sorted = got.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, best.1);
    }

    #[test]
    fn ml_degenerate_and_counts() {
        let z = DenseMatrix::zeros(1, 2);
        let t = ml_contrast(&z, &z, &mut Prng::new(0)).unwrap();
        assert_eq!((t.seed_idx[0], t.pos_idx[0], t.neg_idx[0]), (0, 0, 0));
        assert_eq!(t.seed_source, SeedSource::GReps);
        let z = DenseMatrix::zeros(7, 2);
        assert_eq!(ml_contrast(&z, &z, &mut Prng::new(0)).unwrap().len(), 7);
        assert!(ml_contrast(&z, &DenseMatrix::zeros(6, 2), &mut Prng::new(0)).is_err());
    }

    #[test]
    fn co_path_graph() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let mut rng = Prng::new(1);
        assert!(matches!(co_tuple_for_seed(&g, 1, &mut rng), Err(Error::Sampling(_))));
        assert_eq!(co_tuple_for_seed(&g, 0, &mut rng).unwrap(), (1, 2));
        assert!(co_contrast(&graph(3, &[]), &mut rng, 5).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("LC".parse::<StrategyKind>().unwrap(), StrategyKind::Lc);
        assert!("xx".parse::<StrategyKind>().is_err());
    }
}
