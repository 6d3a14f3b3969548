//! The training loop: seed selection, tuple construction, NCE plus the
//! contrastive regulariser, backprop through every encoder path, Adam.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{mu_ratio, norm_stats, PairSampling};
use crate::encoder::{
    backward, backward_stacked, encode_propagated, encode_stacked, init_params, propagate, ForwardCache, Gradients,
    ModelParams,
};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, permute_rows, Graph};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::loss::{contrast_reg_loss, nce_tuples, total_loss, ContrastTuples, LossOutput, ScoreMode};
use crate::optim::{Adam, LrDecay};
use crate::rng::{sample_uniform_open_closed, Prng};
use crate::strategy::{
    co_contrast, lc_contrast, lc_seed_select, ml_contrast, CurriculumConfig, CurriculumState, StrategyKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Dot,
    Cosine,
}

/// Full run configuration. Serialises as a flat JSON object; missing keys
/// take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub strategy: StrategyKind,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub lr: f64,
    pub lambda_reg: f64,
    pub reg_enabled: bool,
    pub score_mode: ScoreKind,
    pub cosine_temp: f64,
    pub weight_decay: f64,
    pub lr_decay_factor: Option<f64>,
    pub lr_decay_every: Option<usize>,
    /// Curriculum round length `R` (LC).
    pub lc_rounds: usize,
    /// Candidate positives per seed `k` (LC).
    pub lc_k: usize,
    /// CO tuples per epoch; the number of edges when unset.
    pub co_samples: Option<usize>,
    pub seed: u64,
    pub trace_every: usize,
    /// Pair samples per epoch for the μ⁺/μ⁻ trace columns.
    pub diagnostics_pairs: usize,
    pub class_uniform_pairs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            strategy: StrategyKind::Lc,
            epochs: 300,
            hidden_dim: 512,
            lr: 1e-3,
            lambda_reg: 1.0,
            reg_enabled: true,
            score_mode: ScoreKind::Dot,
            cosine_temp: 0.5,
            weight_decay: 0.0,
            lr_decay_factor: None,
            lr_decay_every: None,
            lc_rounds: 30,
            lc_k: 5,
            co_samples: None,
            seed: 0,
            trace_every: 1,
            diagnostics_pairs: 10_000,
            class_uniform_pairs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1".into());
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if !(self.lambda_reg >= 0.0) || !self.lambda_reg.is_finite() {
            return bad(format!("lambda_reg must be >= 0, got {}", self.lambda_reg));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.score_mode == ScoreKind::Cosine && !(self.cosine_temp > 0.0) {
            return bad(format!("cosine_temp must be > 0, got {}", self.cosine_temp));
        }
        if self.trace_every == 0 {
            return bad("trace_every must be >= 1".into());
        }
        if self.lr_decay_factor.is_some() != self.lr_decay_every.is_some() {
            return bad("lr_decay_factor and lr_decay_every must be set together".into());
        }
        if self.co_samples == Some(0) {
            return bad("co_samples must be >= 1".into());
        }
        if self.strategy == StrategyKind::Lc {
            self.curriculum().validate()?;
        }
        Ok(())
    }

    pub fn score(&self) -> ScoreMode {
        match self.score_mode {
            ScoreKind::Dot => ScoreMode::Dot,
            ScoreKind::Cosine => ScoreMode::Cosine { temperature: self.cosine_temp },
        }
    }

    pub fn curriculum(&self) -> CurriculumConfig {
        CurriculumConfig { rounds: self.lc_rounds, k: self.lc_k, total_epochs: self.epochs }
    }

    pub fn lr_decay(&self) -> Option<LrDecay> {
        Some(LrDecay { factor: self.lr_decay_factor?, every_n_epochs: self.lr_decay_every? })
    }

    /// Number of trace records a run produces.
    pub fn trace_len(&self) -> usize {
        self.epochs.div_ceil(self.trace_every)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<TrainConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One row of `trace.csv`. The μ columns are empty for unlabelled graphs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub loss_nce: f64,
    pub loss_reg: f64,
    pub loss_total: f64,
    pub norm_mean: f64,
    pub norm_var: f64,
    pub mu_plus: Option<f64>,
    pub mu_minus: Option<f64>,
    pub ratio: Option<f64>,
    pub lr: f64,
}

pub const TRACE_HEADER: &str = "epoch,loss_nce,loss_reg,loss_total,norm_mean,norm_var,mu_plus,mu_minus,ratio,lr";

/// Nine significant digits; `inf`/`nan` spelled out.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.8e}")
    }
}

impl TraceRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_sig9).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            fmt_sig9(self.loss_nce),
            fmt_sig9(self.loss_reg),
            fmt_sig9(self.loss_total),
            fmt_sig9(self.norm_mean),
            fmt_sig9(self.norm_var),
            opt(self.mu_plus),
            opt(self.mu_minus),
            opt(self.ratio),
            fmt_sig9(self.lr)
        )
    }
}

pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn write_trace_csv(trace: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

/// Parses a `trace.csv` written by [`write_trace_csv`].
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(perr(1, "missing trace header".into())),
    }
    let mut out = vec![];
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(perr(i + 1, format!("expected 10 columns, got {}", cells.len())));
        }
        let num = |j: usize| -> Result<f64> {
            cells[j].trim().parse().map_err(|_| perr(i + 1, format!("bad number {:?}", cells[j])))
        };
        let opt = |j: usize| -> Result<Option<f64>> { if cells[j].trim().is_empty() { Ok(None) } else { num(j).map(Some) } };
        out.push(TraceRecord {
            epoch: cells[0].trim().parse().map_err(|_| perr(i + 1, format!("bad epoch {:?}", cells[0])))?,
            loss_nce: num(1)?,
            loss_reg: num(2)?,
            loss_total: num(3)?,
            norm_mean: num(4)?,
            norm_var: num(5)?,
            mu_plus: opt(6)?,
            mu_minus: opt(7)?,
            ratio: opt(8)?,
            lr: num(9)?,
        });
    }
    Ok(out)
}

/// Writes the configuration as flat pretty JSON.
pub fn write_run_json(cfg: &TrainConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Everything about a graph the objective needs, precomputed once.
#[derive(Debug, Clone)]
pub struct TrainContext<'g> {
    pub graph: &'g Graph,
    pub a_hat: CsrMatrix,
    /// `Â X` for the uncorrupted features.
    pub ax: DenseMatrix,
}

impl<'g> TrainContext<'g> {
    pub fn new(graph: &'g Graph) -> Result<TrainContext<'g>> {
        let a_hat = normalized_adjacency(graph);
        let ax = propagate(&a_hat, graph.features())?;
        Ok(TrainContext { graph, a_hat, ax })
    }
}

/// All randomness consumed by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDraw {
    pub tuples: ContrastTuples,
    /// Direction sample and feature permutation for the regulariser.
    pub reg: Option<(Vec<f64>, Vec<usize>)>,
}

/// Loss components and gradients of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub loss_nce: f64,
    pub loss_reg: f64,
    pub loss_total: f64,
    pub grads: Gradients,
    pub z: DenseMatrix,
}

/// Clean forward pass: f-level representations and, when stacked, g-level.
pub struct Forward {
    pub z: DenseMatrix,
    pub cache: ForwardCache,
    pub stacked: Option<(DenseMatrix, ForwardCache)>,
}

pub fn forward(ctx: &TrainContext, params: &ModelParams) -> Result<Forward> {
    let (z, cache) = encode_propagated(ctx.ax.clone(), params)?;
    let stacked = if params.has_stack() { Some(encode_stacked(&ctx.a_hat, &z, params)?) } else { None };
    Ok(Forward { z, cache, stacked })
}

/// Draws tuples (and the regulariser's direction and permutation) for `epoch`.
pub fn sample_draw(
    ctx: &TrainContext,
    fwd: &Forward,
    cfg: &TrainConfig,
    epoch: usize,
    curriculum: &mut CurriculumState,
    rng: &mut Prng,
) -> Result<StepDraw> {
    let tuples = match cfg.strategy {
        StrategyKind::Lc => {
            let seeds = lc_seed_select(&fwd.z, epoch, curriculum, &cfg.curriculum())?;
            lc_contrast(&fwd.z, ctx.graph, &seeds, cfg.lc_k, rng)?
        }
        StrategyKind::Ml => {
            let (g, _) = fwd
                .stacked
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("the ML strategy needs a stacked layer".into()))?;
            ml_contrast(&fwd.z, g, rng)?
        }
        StrategyKind::Co => {
            let m = cfg.co_samples.unwrap_or_else(|| ctx.graph.num_edges().max(1));
            co_contrast(ctx.graph, rng, m)?
        }
    };
    let reg = if cfg.reg_enabled {
        let r = sample_uniform_open_closed(rng, cfg.hidden_dim).into_vec();
        let perm = rng.permutation(ctx.graph.num_nodes());
        Some((r, perm))
    } else {
        None
    };
    Ok(StepDraw { tuples, reg })
}

/// Loss and exact gradients for a fixed draw.
pub fn objective(ctx: &TrainContext, params: &ModelParams, draw: &StepDraw, cfg: &TrainConfig) -> Result<StepOutput> {
    objective_from(ctx, params, forward(ctx, params)?, draw, cfg)
}

pub fn objective_from(
    ctx: &TrainContext,
    params: &ModelParams,
    fwd: Forward,
    draw: &StepDraw,
    cfg: &TrainConfig,
) -> Result<StepOutput> {
    let g_reps = fwd.stacked.as_ref().map(|(g, _)| g);
    let nce = nce_tuples(&fwd.z, g_reps, &draw.tuples, cfg.score())?;
    let loss_nce = nce.value;

    let mut corrupted_cache = None;
    let reg = match &draw.reg {
        Some((r, perm)) => {
            let ax_tilde = propagate(&ctx.a_hat, &permute_rows(ctx.graph.features(), perm))?;
            let (z_tilde, cache_t) = encode_propagated(ax_tilde, params)?;
            corrupted_cache = Some(cache_t);
            contrast_reg_loss(&fwd.z, &z_tilde, &params.w_reg, r)?
        }
        None => LossOutput::default(),
    };
    let loss_reg = reg.value;
    let lambda = if draw.reg.is_some() { cfg.lambda_reg } else { 0.0 };
    let total = total_loss(nce, reg, lambda)?;

    let mut grads = params.zeros_like();
    let mut dz = total.d_z.unwrap_or_else(|| DenseMatrix::zeros(fwd.z.rows(), fwd.z.cols()));
    if let (Some(dg), Some((_, cache_s))) = (&total.d_g, &fwd.stacked) {
        let (gs, dz_from_g) = backward_stacked(cache_s, &ctx.a_hat, dg, params)?;
        grads.w_stack = Some(gs.d_weight);
        grads.slope_stack = gs.d_slope;
        dz.add_scaled(&dz_from_g, 1.0)?;
    }
    let clean = backward(&fwd.cache, &dz, params)?;
    grads.w_enc = clean.d_weight;
    grads.slope = clean.d_slope;
    if let (Some(dzt), Some(cache_t)) = (&total.d_z_tilde, &corrupted_cache) {
        let corrupt = backward(cache_t, dzt, params)?;
        grads.w_enc.add_scaled(&corrupt.d_weight, 1.0)?;
        grads.slope += corrupt.d_slope;
    }
    if let Some(dw) = total.d_w_reg {
        grads.w_reg = dw;
    }
    Ok(StepOutput { loss_nce, loss_reg, loss_total: total.value, grads, z: fwd.z })
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub trace: Vec<TraceRecord>,
}

/// Parameters at initialisation for `cfg` on `g`.
pub fn initial_params(g: &Graph, cfg: &TrainConfig) -> Result<ModelParams> {
    let mut init_rng = Prng::with_stream(cfg.seed, 0);
    init_params(&mut init_rng, g.num_features(), cfg.hidden_dim, cfg.strategy == StrategyKind::Ml)
}

pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_callback(g, cfg, |_| {})
}

/// Runs training, invoking `on_record` as each trace record is produced.
/// Statistics in a record describe the representations the epoch's update
/// was computed from.
pub fn train_with_callback(g: &Graph, cfg: &TrainConfig, mut on_record: impl FnMut(&TraceRecord)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let ctx = TrainContext::new(g)?;
    let mut params = initial_params(g, cfg)?;
    let mut rng = Prng::with_stream(cfg.seed, 1);
    let mut diag_rng = Prng::with_stream(cfg.seed, 2);
    let mut opt = Adam::new(cfg.lr, cfg.weight_decay)?.with_lr_decay(cfg.lr_decay())?;
    let mut curriculum = CurriculumState::new();
    let sampling = if cfg.class_uniform_pairs { PairSampling::ClassUniform } else { PairSampling::PairUniform };
    let mut trace: Vec<TraceRecord> = Vec::with_capacity(cfg.trace_len());

    for epoch in 1..=cfg.epochs {
        opt.maybe_decay_lr(epoch);
        let fwd = forward(&ctx, &params)?;
        let draw = sample_draw(&ctx, &fwd, cfg, epoch, &mut curriculum, &mut rng)?;
        let step = objective_from(&ctx, &params, fwd, &draw, cfg)?;
        if !step.loss_total.is_finite() {
            let last = trace.last().map(|r| r.csv_row()).unwrap_or_else(|| "none".into());
            return Err(Error::NonFinite(format!("loss at epoch {epoch} (last trace row: {last})")));
        }
        if (epoch - 1) % cfg.trace_every == 0 {
            let ns = norm_stats(&step.z)?;
            let (mu_plus, mu_minus, ratio) = match g.labels() {
                Some(labels) if cfg.diagnostics_pairs > 0 => {
                    match mu_ratio(&step.z, labels, &mut diag_rng, cfg.diagnostics_pairs, sampling) {
                        Ok(m) => (Some(m.mu_plus), Some(m.mu_minus), Some(m.ratio)),
                        Err(_) => (None, None, None),
                    }
                }
                _ => (None, None, None),
            };
            let rec = TraceRecord {
                epoch,
                loss_nce: step.loss_nce,
                loss_reg: step.loss_reg,
                loss_total: step.loss_total,
                norm_mean: ns.mean,
                norm_var: ns.var,
                mu_plus,
                mu_minus,
                ratio,
                lr: opt.lr,
            };
            on_record(&rec);
            trace.push(rec);
        }
        opt.step(&mut params, &step.grads)
            .map_err(|e| Error::NonFinite(format!("epoch {epoch}: {e}")))?;
        log::debug!("epoch {epoch}: loss {:.6}", step.loss_total);
    }
    Ok(TrainOutcome { params, trace })
}

/// f-level representations of every node.
pub fn embed(g: &Graph, params: &ModelParams) -> Result<DenseMatrix> {
    let a_hat = normalized_adjacency(g);
    Ok(encode_propagated(propagate(&a_hat, g.features())?, params)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Graph {
        Graph::from_edges(2, &[(0, 1)], DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap())
            .unwrap()
            .with_labels(vec![0, 1])
            .unwrap()
    }

    fn path4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], DenseMatrix::from_fn(4, 3, |i, j| ((i * 3 + j) % 5) as f64))
            .unwrap()
            .with_labels(vec![0, 0, 1, 1])
            .unwrap()
    }

    fn small_cfg(strategy: StrategyKind) -> TrainConfig {
        TrainConfig { strategy, epochs: 1, hidden_dim: 4, lc_rounds: 1, diagnostics_pairs: 50, ..Default::default() }
    }

    #[test]
    fn smoke_one_epoch() {
        for s in [StrategyKind::Lc, StrategyKind::Ml, StrategyKind::Co] {
            let g = if s == StrategyKind::Co { path4() } else { toy() };
            let cfg = small_cfg(s);
            let out = train(&g, &cfg).unwrap();
            assert_eq!(out.trace.len(), 1);
            assert_ne!(out.params, initial_params(&g, &cfg).unwrap());
        }
        // Both nodes of the toy graph are adjacent to everything else.
        assert!(matches!(train(&toy(), &small_cfg(StrategyKind::Co)), Err(Error::Sampling(_))));
    }

    #[test]
    fn deterministic_trace() {
        let g = toy();
        let cfg = TrainConfig { epochs: 5, ..small_cfg(StrategyKind::Lc) };
        let a = train(&g, &cfg).unwrap();
        let b = train(&g, &cfg).unwrap();
        assert_eq!(trace_to_csv(&a.trace), trace_to_csv(&b.trace));
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn trace_length_and_disabled_reg() {
        let g = path4();
        let cfg = TrainConfig { epochs: 7, trace_every: 3, reg_enabled: false, ..small_cfg(StrategyKind::Co) };
        let out = train(&g, &cfg).unwrap();
        assert_eq!(out.trace.len(), 3);
        assert!(out.trace.iter().all(|r| r.loss_reg == 0.0));
    }

    #[test]
    fn embed_at_init_matches_encode() {
        let g = toy();
        let cfg = small_cfg(StrategyKind::Lc);
        let p = initial_params(&g, &cfg).unwrap();
        let ctx = TrainContext::new(&g).unwrap();
        assert_eq!(embed(&g, &p).unwrap(), forward(&ctx, &p).unwrap().z);
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = TrainConfig { score_mode: ScoreKind::Cosine, lr_decay_factor: Some(0.5), lr_decay_every: Some(100), ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&text).unwrap(), cfg);
        let partial: TrainConfig = serde_json::from_str(r#"{"strategy":"ml","epochs":10}"#).unwrap();
        assert_eq!(partial.hidden_dim, 512);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn sig9_format() {
        assert_eq!(fmt_sig9(1.0), "1.00000000e0");
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn trace_csv_round_trip() {
        let out = train(&toy(), &TrainConfig { epochs: 3, ..small_cfg(StrategyKind::Lc) }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&out.trace, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(trace_to_csv(&back), trace_to_csv(&out.trace));
        std::fs::write(&path, "epoch\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}
