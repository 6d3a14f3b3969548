//! Analysis instruments: norm statistics, the same-class/different-class
//! contrast ratio, the class-collision estimate s(f), a Monte-Carlo check of
//! the norm-variance reduction inequality, and an end-to-end gradient checker.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, DenseMatrix};
use crate::rng::Prng;
use crate::strategy::CurriculumState;
use crate::train::{forward, initial_params, objective, sample_draw, TrainConfig, TrainContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormStats {
    pub mean: f64,
    /// Unbiased; 0 for a single row.
    pub var: f64,
}

pub fn norm_stats(z: &DenseMatrix) -> Result<NormStats> {
    if z.rows() == 0 {
        return Err(Error::InvalidArgument("norm_stats of an empty matrix".into()));
    }
    let norms = z.row_norms();
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let var = if norms.len() < 2 {
        0.0
    } else {
        norms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    Ok(NormStats { mean, var })
}

/// How labelled pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSampling {
    /// Uniform over all qualifying node pairs.
    #[default]
    PairUniform,
    /// Uniform over classes (or class pairs) first, then over their members.
    ClassUniform,
}

struct PairSampler {
    members: Vec<Vec<usize>>,
    label_of: Vec<usize>,
}

impl PairSampler {
    fn new(labels: &[usize]) -> PairSampler {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); k];
        for (i, &c) in labels.iter().enumerate() {
            members[c].push(i);
        }
        members.retain(|m| !m.is_empty());
        let mut label_of = vec![0; labels.len()];
        for (ci, m) in members.iter().enumerate() {
            for &i in m {
                label_of[i] = ci;
            }
        }
        PairSampler { members, label_of }
    }

    fn check(&self) -> Result<()> {
        if self.members.len() < 2 {
            return Err(Error::Sampling("pair statistics need at least two classes".into()));
        }
        if self.members.iter().all(|m| m.len() < 2) {
            return Err(Error::Sampling("no class has two members; no same-class pair exists".into()));
        }
        Ok(())
    }

    fn pick_weighted(rng: &mut Prng, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.next_f64() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap()
    }

    fn two_distinct(rng: &mut Prng, m: &[usize]) -> (usize, usize) {
        let a = rng.index(m.len());
        let mut b = rng.index(m.len() - 1);
        if b >= a {
            b += 1;
        }
        (m[a], m[b])
    }

    fn same(&self, rng: &mut Prng, mode: PairSampling) -> (usize, usize) {
        let weights: Vec<f64> = self
            .members
            .iter()
            .map(|m| {
                let s = m.len() as f64;
                match mode {
                    PairSampling::PairUniform => s * (s - 1.0),
                    PairSampling::ClassUniform => f64::from(u8::from(m.len() >= 2)),
                }
            })
            .collect();
        let c = Self::pick_weighted(rng, &weights);
        Self::two_distinct(rng, &self.members[c])
    }

    fn different(&self, rng: &mut Prng, mode: PairSampling) -> (usize, usize) {
        let n = self.label_of.len();
        match mode {
            PairSampling::PairUniform => {
                let weights: Vec<f64> = self.members.iter().map(|m| (m.len() * (n - m.len())) as f64).collect();
                let ca = Self::pick_weighted(rng, &weights);
                let i = self.members[ca][rng.index(self.members[ca].len())];
                let others: Vec<f64> =
                    self.members.iter().enumerate().map(|(c, m)| if c == ca { 0.0 } else { m.len() as f64 }).collect();
                let cb = Self::pick_weighted(rng, &others);
                (i, self.members[cb][rng.index(self.members[cb].len())])
            }
            PairSampling::ClassUniform => {
                let k = self.members.len();
                let ca = rng.index(k);
                let mut cb = rng.index(k - 1);
                if cb >= ca {
                    cb += 1;
                }
                let i = self.members[ca][rng.index(self.members[ca].len())];
                (i, self.members[cb][rng.index(self.members[cb].len())])
            }
        }
    }
}

fn check_labels(z: &DenseMatrix, labels: &[usize], num_pairs: usize) -> Result<()> {
    if labels.len() != z.rows() {
        return Err(Error::shape("pair statistics", format!("{} labels for {} rows", labels.len(), z.rows())));
    }
    if num_pairs == 0 {
        return Err(Error::InvalidArgument("num_pairs must be >= 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuRatio {
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// `+inf` when μ⁻ is zero and μ⁺ is not; NaN when both are zero.
    pub ratio: f64,
}

/// Mean `|z_iᵀ z_j|` over sampled same-class pairs (μ⁺) and
/// different-class pairs (μ⁻).
pub fn mu_ratio(z: &DenseMatrix, labels: &[usize], rng: &mut Prng, num_pairs: usize, mode: PairSampling) -> Result<MuRatio> {
    check_labels(z, labels, num_pairs)?;
    let sampler = PairSampler::new(labels);
    sampler.check()?;
    let mut plus = 0.0;
    let mut minus = 0.0;
    for _ in 0..num_pairs {
        let (i, j) = sampler.same(rng, mode);
        plus += dot(z.row(i), z.row(j)).abs();
        let (i, j) = sampler.different(rng, mode);
        minus += dot(z.row(i), z.row(j)).abs();
    }
    let mu_plus = plus / num_pairs as f64;
    let mu_minus = minus / num_pairs as f64;
    let ratio = if mu_minus == 0.0 {
        if mu_plus == 0.0 { f64::NAN } else { f64::INFINITY }
    } else {
        mu_plus / mu_minus
    };
    Ok(MuRatio { mu_plus, mu_minus, ratio })
}

/// `4·sqrt(mean (z_iᵀ z_j)²)` over sampled same-class pairs.
pub fn s_f_estimate(z: &DenseMatrix, labels: &[usize], rng: &mut Prng, num_pairs: usize, mode: PairSampling) -> Result<f64> {
    check_labels(z, labels, num_pairs)?;
    let sampler = PairSampler::new(labels);
    sampler.check()?;
    let mut acc = 0.0;
    for _ in 0..num_pairs {
        let (i, j) = sampler.same(rng, mode);
        let s = dot(z.row(i), z.row(j));
        acc += s * s;
    }
    Ok(4.0 * (acc / num_pairs as f64).sqrt())
}

/// Distribution of the norm variable. Both families live on `[low, ∞)`
/// with `low >= 1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormDistribution {
    Uniform { low: f64, high: f64 },
    ShiftedExponential { low: f64, rate: f64 },
}

impl NormDistribution {
    fn sample(&self, rng: &mut Prng) -> f64 {
        match *self {
            NormDistribution::Uniform { low, high } => rng.uniform(low, high),
            NormDistribution::ShiftedExponential { low, rate } => low - rng.next_open_closed().ln() / rate,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NormDistribution::Uniform { low, high } => low >= 1.5 && high >= low && high.is_finite(),
            NormDistribution::ShiftedExponential { low, rate } => low >= 1.5 && rate > 0.0 && low.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("distribution must live on [1.5, inf): {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma4Config {
    pub tau: f64,
    pub c_sq: f64,
    pub n_samples: usize,
    pub distribution: NormDistribution,
    pub seed: u64,
}

impl Default for Lemma4Config {
    fn default() -> Self {
        Lemma4Config {
            tau: 1.0,
            c_sq: 1.0,
            n_samples: 1_000_000,
            distribution: NormDistribution::Uniform { low: 1.5, high: 5.0 },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma4Result {
    pub var_with: f64,
    pub var_without: f64,
    pub holds: bool,
    /// Both variances equal, so the strict inequality cannot hold.
    pub equal: bool,
}

fn sample_var(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n < 2.0 { 0.0 } else { m2 / (n - 1.0) }
}

/// Compares `Var(sqrt((X + τ/(1+eˣ))² + c²))` with `Var(sqrt(X² + c²))`
/// on one shared sample of `X`.
pub fn verify_lemma4(cfg: &Lemma4Config) -> Result<Lemma4Result> {
    cfg.distribution.validate()?;
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) || !(cfg.c_sq >= 0.0) || cfg.n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need tau in (0,1], c_sq >= 0 and n >= 2 (tau={}, c_sq={}, n={})",
            cfg.tau, cfg.c_sq, cfg.n_samples
        )));
    }
    let mut rng = Prng::new(cfg.seed);
    let xs: Vec<f64> = (0..cfg.n_samples).map(|_| cfg.distribution.sample(&mut rng)).collect();
    let var_with = sample_var(xs.iter().map(|&x| {
        let shifted = x + cfg.tau / (1.0 + x.exp());
        (shifted * shifted + cfg.c_sq).sqrt()
    }));
    let var_without = sample_var(xs.iter().map(|&x| (x * x + cfg.c_sq).sqrt()));
    let equal = var_with == var_without;
    Ok(Lemma4Result { var_with, var_without, holds: var_with < var_without, equal })
}

/// Outcome of [`gradcheck`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: Option<String>,
    pub checked: usize,
    /// Coordinates skipped because a perturbation moved a pre-activation
    /// across the PReLU kink.
    pub skipped_kinks: usize,
    /// Some pre-activation sits exactly at zero at the base point.
    pub kink_at_base: bool,
}

/// Denominator floor for the relative error. Central differences at
/// ε = 1e-5 on an O(1) loss carry roughly 1e-11 of absolute roundoff, which
/// would dominate the relative error of gradient entries below ~1e-6.
pub const GRADCHECK_REL_FLOOR: f64 = 1e-4;
pub const GRADCHECK_MAX_NODES: usize = 10;

fn preactivation_signs(ctx: &TrainContext, params: &crate::encoder::ModelParams, draw: &crate::train::StepDraw) -> Result<Vec<i8>> {
    let sign = |v: f64| -> i8 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let fwd = forward(ctx, params)?;
    let mut out: Vec<i8> = fwd.cache.pre.data().iter().map(|&v| sign(v)).collect();
    if let Some((_, c)) = &fwd.stacked {
        out.extend(c.pre.data().iter().map(|&v| sign(v)));
    }
    if let Some((_, perm)) = &draw.reg {
        let ax_t = crate::encoder::propagate(&ctx.a_hat, &crate::graph::permute_rows(ctx.graph.features(), perm))?;
        let (_, c) = crate::encoder::encode_propagated(ax_t, params)?;
        out.extend(c.pre.data().iter().map(|&v| sign(v)));
    }
    Ok(out)
}

/// Central-difference check of every trainable scalar against the analytic
/// gradient of the full objective at initialisation, with the step's draws
/// frozen.
pub fn gradcheck(g: &Graph, cfg: &TrainConfig, epsilon: f64) -> Result<GradcheckReport> {
    let params = initial_params(g, cfg)?;
    gradcheck_at(g, cfg, &params, epsilon)
}

/// As [`gradcheck`] at explicit parameters.
pub fn gradcheck_at(g: &Graph, cfg: &TrainConfig, params: &crate::encoder::ModelParams, epsilon: f64) -> Result<GradcheckReport> {
    if g.num_nodes() > GRADCHECK_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "gradcheck is limited to {GRADCHECK_MAX_NODES} nodes, graph has {}",
            g.num_nodes()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be > 0".into()));
    }
    cfg.validate()?;
    let ctx = TrainContext::new(g)?;
    let mut rng = Prng::with_stream(cfg.seed, 1);
    let fwd = forward(&ctx, params)?;
    let draw = sample_draw(&ctx, &fwd, cfg, 1, &mut CurriculumState::new(), &mut rng)?;
    let analytic = objective(&ctx, params, &draw, cfg)?.grads;
    let base_signs = preactivation_signs(&ctx, params, &draw)?;
    let kink_at_base = base_signs.contains(&0);
    if kink_at_base {
        log::warn!("gradcheck: pre-activations at exactly zero (PReLU kink); affected coordinates are skipped");
    }

    let mut report = GradcheckReport { max_rel_error: 0.0, worst_tensor: None, checked: 0, skipped_kinks: 0, kink_at_base };
    let layout: Vec<(&'static str, usize)> = params.tensors().iter().map(|(n, t)| (*n, t.len())).collect();
    let analytic_flat: Vec<Vec<f64>> = analytic.tensors().iter().map(|(_, t)| t.to_vec()).collect();
    let mut work = params.clone();
    for (ti, &(name, len)) in layout.iter().enumerate() {
        for k in 0..len {
            let orig = work.tensors()[ti].1[k];
            let eval = |w: &mut crate::encoder::ModelParams, v: f64| -> Result<(f64, Vec<i8>)> {
                w.tensors_mut()[ti].1[k] = v;
                let loss = objective(&ctx, w, &draw, cfg)?.loss_total;
                Ok((loss, preactivation_signs(&ctx, w, &draw)?))
            };
            let (lp, sp) = eval(&mut work, orig + epsilon)?;
            let (lm, sm) = eval(&mut work, orig - epsilon)?;
            work.tensors_mut()[ti].1[k] = orig;
            if sp != base_signs || sm != base_signs || kink_at_base {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * epsilon);
            let a = analytic_flat[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRADCHECK_REL_FLOOR);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = Some(name.to_string());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::StrategyKind;

    #[test]
    fn norm_stats_cases() {
        let z = DenseMatrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(norm_stats(&z).unwrap(), NormStats { mean: 2.0, var: 2.0 });
        let same = DenseMatrix::from_fn(5, 3, |_, j| j as f64);
        assert_eq!(norm_stats(&same).unwrap().var, 0.0);
    }

    #[test]
    fn orthogonal_classes_give_infinite_ratio() {
        let z = DenseMatrix::from_vec(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let m = mu_ratio(&z, &[0, 0, 1, 1], &mut Prng::new(0), 100, PairSampling::PairUniform).unwrap();
        assert_eq!((m.mu_plus, m.mu_minus), (1.0, 0.0));
        assert!(m.ratio.is_infinite());
    }

    #[test]
    fn mu_ratio_errors() {
        let z = DenseMatrix::zeros(3, 2);
        assert!(mu_ratio(&z, &[0, 0, 0], &mut Prng::new(0), 10, PairSampling::PairUniform).is_err());
        assert!(mu_ratio(&z, &[0, 1, 2], &mut Prng::new(0), 10, PairSampling::PairUniform).is_err());
        assert!(mu_ratio(&z, &[0, 0, 1], &mut Prng::new(0), 0, PairSampling::PairUniform).is_err());
    }

    #[test]
    fn s_f_constant_and_zero() {
        let labels = [0, 0, 0, 1];
        let z = DenseMatrix::from_vec(4, 1, vec![1.0, 2.0f64.sqrt(), 2.0f64.sqrt(), 5.0]).unwrap();
        let z2 = DenseMatrix::from_vec(4, 1, vec![2.0f64.sqrt(), 2.0f64.sqrt(), 2.0f64.sqrt(), 5.0]).unwrap();
        assert!((s_f_estimate(&z2, &labels, &mut Prng::new(0), 200, PairSampling::PairUniform).unwrap() - 8.0).abs() < 1e-12);
        let zero = DenseMatrix::zeros(4, 1);
        assert_eq!(s_f_estimate(&zero, &labels, &mut Prng::new(0), 10, PairSampling::PairUniform).unwrap(), 0.0);
        assert!(s_f_estimate(&z, &labels, &mut Prng::new(0), 10, PairSampling::ClassUniform).unwrap() > 0.0);
    }

    #[test]
    fn lemma4_default_and_edges() {
        let r = verify_lemma4(&Lemma4Config::default()).unwrap();
        assert!(r.holds && r.var_with < r.var_without);
        let point = Lemma4Config { distribution: NormDistribution::Uniform { low: 2.0, high: 2.0 }, n_samples: 100, ..Default::default() };
        let r = verify_lemma4(&point).unwrap();
        assert_eq!((r.var_with, r.var_without, r.holds, r.equal), (0.0, 0.0, false, true));
        let tiny = Lemma4Config { tau: 1e-9, n_samples: 10_000, ..Default::default() };
        let r = verify_lemma4(&tiny).unwrap();
        assert!((r.var_with - r.var_without).abs() < 1e-9 * r.var_without);
        let low = Lemma4Config { distribution: NormDistribution::Uniform { low: 1.0, high: 2.0 }, ..Default::default() };
        assert!(verify_lemma4(&low).is_err());
    }

    #[test]
    fn gradcheck_rejects_large_graphs() {
        let g = Graph::from_edges(11, &[(0, 1)], DenseMatrix::zeros(11, 2)).unwrap();
        assert!(gradcheck(&g, &TrainConfig::default(), 1e-5).is_err());
    }

    #[test]
    fn gradcheck_zero_weights_flags_kink() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)], DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64 * 0.3)).unwrap();
        let cfg = TrainConfig { strategy: StrategyKind::Co, epochs: 1, hidden_dim: 3, ..Default::default() };
        let mut p = initial_params(&g, &cfg).unwrap();
        p.w_enc = DenseMatrix::zeros(2, 3);
        let r = gradcheck_at(&g, &cfg, &p, 1e-5).unwrap();
        assert!(r.kink_at_base);
    }
}
