//! The `cgnn` command line: argument types and one function per subcommand.
//!
//! Every command that takes `--out` writes `run_manifest.json` there before
//! any heavy work starts. Machine-readable results go to files; stdout gets a
//! short human summary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::dataset::{convert_linqs, load_canonical};
use crate::diagnostics::{
    gradcheck, mu_ratio, norm_stats, s_f_estimate, verify_lemma4, Lemma4Config, NormDistribution, PairSampling,
    GRADCHECK_REL_FLOOR,
};
use crate::error::{Error, Result};
use crate::eval::{eval_clustering, eval_node_classification, lp_protocol, nc_protocol, NodeSplitSizes, ProbeConfig};
use crate::graph::{EdgeFractions, Graph};
use crate::rng::Prng;
use crate::strategy::StrategyKind;
use crate::synthetic::toy_graph;
use crate::train::{
    embed, read_trace_csv, train_with_callback, write_run_json, write_trace_csv, ScoreKind, TraceRecord, TrainConfig,
};

/// Exit status for a failed gradient check.
pub const EXIT_GRADCHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Numeric failures exit with 3, everything else with 2.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "cgnn", version, about = "Contrastive GNN training, evaluation and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert LINQS `.content` / `.cites` files to a canonical dataset directory.
    Convert(ConvertArgs),
    /// Train an encoder and write run.json, trace.csv and params.bin.
    Train(TrainArgs),
    /// Downstream evaluation; writes eval.json.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Norm and contrast statistics of a checkpoint or a trace; writes diagnostics.json.
    Diagnose(DiagnoseArgs),
    /// Monte-Carlo check of the norm-variance reduction inequality.
    VerifyLemma4(Lemma4Args),
    /// Finite-difference check of every gradient on the built-in toy graph.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub linqs_content: PathBuf,
    #[arg(long)]
    pub linqs_cites: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Lc,
    Ml,
    Co,
}

impl From<StrategyArg> for StrategyKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Lc => StrategyKind::Lc,
            StrategyArg::Ml => StrategyKind::Ml,
            StrategyArg::Co => StrategyKind::Co,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Dot,
    Cosine,
}

/// Training flags. Each one overrides the matching key of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    /// Flat JSON file with TrainConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    /// Disable the contrastive regulariser.
    #[arg(long)]
    pub no_reg: bool,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    #[arg(long)]
    pub cosine_temp: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub lr_decay_factor: Option<f64>,
    #[arg(long)]
    pub lr_decay_every: Option<usize>,
    #[arg(long)]
    pub lc_rounds: Option<usize>,
    #[arg(long)]
    pub lc_k: Option<usize>,
    #[arg(long)]
    pub co_samples: Option<usize>,
    #[arg(long)]
    pub trace_every: Option<usize>,
    #[arg(long)]
    pub diagnostics_pairs: Option<usize>,
    /// Sample μ pairs uniformly over classes rather than over pairs.
    #[arg(long)]
    pub class_uniform_pairs: bool,
}

impl TrainFlags {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(p) => TrainConfig::from_json_file(p)?,
            None => TrainConfig::default(),
        };
        if let Some(v) = self.strategy {
            c.strategy = v.into();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(epochs => epochs, lr => lr, lambda_reg => lambda_reg, hidden => hidden_dim, seed => seed,
             cosine_temp => cosine_temp, weight_decay => weight_decay, lc_rounds => lc_rounds, lc_k => lc_k,
             trace_every => trace_every, diagnostics_pairs => diagnostics_pairs);
        if self.lr_decay_factor.is_some() {
            c.lr_decay_factor = self.lr_decay_factor;
        }
        if self.lr_decay_every.is_some() {
            c.lr_decay_every = self.lr_decay_every;
        }
        if self.co_samples.is_some() {
            c.co_samples = self.co_samples;
        }
        if let Some(s) = self.score {
            c.score_mode = match s {
                ScoreArg::Dot => ScoreKind::Dot,
                ScoreArg::Cosine => ScoreKind::Cosine,
            };
        }
        if self.no_reg {
            c.reg_enabled = false;
        }
        if self.class_uniform_pairs {
            c.class_uniform_pairs = true;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Canonical dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Keep features as stored instead of scaling each row to sum to one.
    #[arg(long)]
    pub raw_features: bool,
}

impl DataArgs {
    pub fn load(&self) -> Result<Graph> {
        let mut g = load_canonical(&self.data)?;
        if !self.raw_features {
            g.row_normalize_features();
        }
        Ok(g)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

/// Seed list: `a..b` (exclusive), `a..=b`, or `a,b,c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed {t:?}"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<std::result::Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("empty seed list {s:?}"));
    }
    Ok(Seeds(seeds))
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Linear-probe node classification.
    Nc(NcArgs),
    /// k-means clustering on raw and PCA-projected embeddings.
    Cluster(ClusterArgs),
    /// Link prediction; always retrains on the training edges of each split.
    Lp(LpArgs),
}

#[derive(Debug, Args)]
pub struct NcArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Evaluate this checkpoint instead of training one encoder per run seed.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Split seeds.
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub seeds: Seeds,
    /// Training seeds, used when no checkpoint is given.
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub run_seeds: Seeds,
    #[arg(long, default_value_t = 20)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub num_val: usize,
    #[arg(long, default_value_t = 1000)]
    pub num_test: usize,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Evaluate this checkpoint instead of training one.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// k-means seeds.
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub seeds: Seeds,
    #[arg(long, default_value_t = 32)]
    pub pca_dim: usize,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Rejected: embeddings trained on the full graph have seen the test edges.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Edge-split seeds.
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub seeds: Seeds,
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub run_seeds: Seeds,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["params", "trace"])))]
pub struct DiagnoseArgs {
    /// Dataset, required with `--params`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub raw_features: bool,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub class_uniform_pairs: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Uniform,
    Exp,
}

#[derive(Debug, Args)]
pub struct Lemma4Args {
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 1.5)]
    pub low: f64,
    /// Upper bound of the uniform distribution.
    #[arg(long, default_value_t = 5.0)]
    pub high: f64,
    /// Rate of the shifted exponential.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Ml)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub no_reg: bool,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_reg: f64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Dot)]
    pub score: ScoreArg,
    #[arg(long, default_value_t = 0.5)]
    pub cosine_temp: f64,
    #[arg(long, default_value_t = 4)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report failure above this relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

/// Written to `--out` before a command starts computing.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, config: Value, data: Option<&Path>, out: &Path, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.into(),
            config,
            data: data.map(Path::to_path_buf),
            out: out.to_path_buf(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::Io { path: self.out.clone(), source: e })?;
        write_json(&self.out.join("run_manifest.json"), &serde_json::to_value(self)?)
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

/// JSON number, or `"inf"` / `"-inf"` / `"nan"` where JSON has no number.
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn json_opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, json_f64)
}

/// Runs one parsed command and returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Convert(a) => cmd_convert(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(EvalCommand::Nc(a)) => cmd_eval_nc(&a),
        Command::Eval(EvalCommand::Cluster(a)) => cmd_eval_cluster(&a),
        Command::Eval(EvalCommand::Lp(a)) => cmd_eval_lp(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::VerifyLemma4(a) => cmd_verify_lemma4(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    }
}

pub fn cmd_convert(a: &ConvertArgs) -> Result<i32> {
    let conv = convert_linqs(&a.linqs_content, &a.linqs_cites, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&conv.manifest)?);
    println!("classes: {}", conv.class_names.join(", "));
    if conv.dropped_citations > 0 {
        println!("dropped {} citations to unknown papers", conv.dropped_citations);
    }
    Ok(0)
}

fn run_training(g: &Graph, cfg: &TrainConfig) -> Result<crate::train::TrainOutcome> {
    let every = (cfg.epochs / 10).max(1);
    train_with_callback(g, cfg, |r: &TraceRecord| {
        if r.epoch % every == 0 || r.epoch == 1 {
            log::info!("epoch {:>4}  loss {:.6}  norm_var {:.4e}", r.epoch, r.loss_total, r.norm_var);
        }
    })
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let cfg = a.flags.resolve()?;
    RunManifest::new("train", serde_json::to_value(&cfg)?, Some(&a.data.data), &a.out, Some(cfg.seed)).write()?;
    write_run_json(&cfg, a.out.join("run.json"))?;
    let g = a.data.load()?;
    let out = run_training(&g, &cfg)?;
    write_trace_csv(&out.trace, a.out.join("trace.csv"))?;
    save_checkpoint(&out.params, a.out.join("params.bin"))?;
    if let Some(last) = out.trace.last() {
        println!(
            "epoch {}: loss_nce {:.6}  loss_reg {:.6}  loss_total {:.6}",
            last.epoch, last.loss_nce, last.loss_reg, last.loss_total
        );
    }
    println!("wrote {}", a.out.display());
    Ok(0)
}

fn embedding_for(g: &Graph, params: Option<&Path>, flags: &TrainFlags) -> Result<(crate::DenseMatrix, Value)> {
    match params {
        Some(p) => {
            let params = load_checkpoint(p)?;
            Ok((embed(g, &params)?, Value::Null))
        }
        None => {
            let cfg = flags.resolve()?;
            let out = run_training(g, &cfg)?;
            Ok((embed(g, &out.params)?, serde_json::to_value(&cfg)?))
        }
    }
}

pub fn cmd_eval_nc(a: &NcArgs) -> Result<i32> {
    let cfg = match a.params {
        Some(_) => Value::Null,
        None => serde_json::to_value(a.flags.resolve()?)?,
    };
    RunManifest::new("eval nc", cfg, Some(&a.data.data), &a.out, None).write()?;
    let g = a.data.load()?;
    if g.labels().is_none() {
        return Err(Error::InvalidArgument("eval nc needs a labelled dataset".into()));
    }
    let sizes = NodeSplitSizes { per_class_train: a.train_per_class, num_val: a.num_val, num_test: a.num_test };
    let probe = ProbeConfig::default();
    let (report, config) = match &a.params {
        Some(p) => {
            let z = embed(&g, &load_checkpoint(p)?)?;
            (eval_node_classification(&g, &z, &sizes, &a.seeds.0, &probe)?, Value::Null)
        }
        None => {
            let cfg = a.flags.resolve()?;
            (nc_protocol(&g, &cfg, &sizes, &a.seeds.0, &a.run_seeds.0, &probe)?, serde_json::to_value(&cfg)?)
        }
    };
    write_json(
        &a.out.join("eval.json"),
        &json!({ "task": "nc", "params": a.params, "config": config, "splits": sizes, "probe": probe, "report": report }),
    )?;
    println!("nc accuracy: {} over {} runs", report.summary(), report.values.len());
    Ok(0)
}

pub fn cmd_eval_cluster(a: &ClusterArgs) -> Result<i32> {
    RunManifest::new("eval cluster", Value::Null, Some(&a.data.data), &a.out, None).write()?;
    let g = a.data.load()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::InvalidArgument("eval cluster needs a labelled dataset".into()))?;
    let (z, config) = embedding_for(&g, a.params.as_deref(), &a.flags)?;
    let ev = eval_clustering(&z, labels, g.num_classes(), a.pca_dim, &a.seeds.0)?;
    write_json(&a.out.join("eval.json"), &json!({ "task": "cluster", "params": a.params, "config": config, "report": ev }))?;
    for v in [&ev.raw, &ev.pca] {
        println!("{:>3}: acc {}  nmi {}  f1 {}", v.name, v.acc.summary(), v.nmi.summary(), v.f1_macro.summary());
    }
    println!("best: {}", ev.best);
    Ok(0)
}

pub fn cmd_eval_lp(a: &LpArgs) -> Result<i32> {
    if a.params.is_some() {
        return Err(Error::InvalidArgument(
            "eval lp retrains on each split's training edges; a checkpoint trained on the full graph has seen the test edges"
                .into(),
        ));
    }
    let cfg = a.flags.resolve()?;
    RunManifest::new("eval lp", serde_json::to_value(&cfg)?, Some(&a.data.data), &a.out, None).write()?;
    let g = a.data.load()?;
    let fractions = EdgeFractions::default();
    let report = lp_protocol(&g, &cfg, fractions, &a.seeds.0, &a.run_seeds.0)?;
    write_json(
        &a.out.join("eval.json"),
        &json!({
            "task": "lp",
            "config": cfg,
            "edge_fractions": { "train": fractions.train, "val": fractions.val, "test": fractions.test },
            "report": report,
        }),
    )?;
    println!("lp auc: {} over {} runs", report.summary(), report.values.len());
    Ok(0)
}

fn trace_row_json(r: &TraceRecord) -> Value {
    json!({
        "epoch": r.epoch,
        "loss_total": json_f64(r.loss_total),
        "norm_mean": json_f64(r.norm_mean),
        "norm_var": json_f64(r.norm_var),
        "mu_plus": json_opt(r.mu_plus),
        "mu_minus": json_opt(r.mu_minus),
        "ratio": json_opt(r.ratio),
    })
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<i32> {
    RunManifest::new("diagnose", Value::Null, a.data.as_deref(), &a.out, Some(a.seed)).write()?;
    let out = if let Some(trace_path) = &a.trace {
        let trace = read_trace_csv(trace_path)?;
        let (first, last) = match (trace.first(), trace.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidArgument(format!("{}: empty trace", trace_path.display()))),
        };
        println!("epochs {}..{}", first.epoch, last.epoch);
        println!("norm_var {:.6e} -> {:.6e}", first.norm_var, last.norm_var);
        if let (Some(r0), Some(r1)) = (first.ratio, last.ratio) {
            println!("ratio {r0:.6} -> {r1:.6}");
        }
        json!({
            "source": "trace",
            "trace": trace_path,
            "records": trace.len(),
            "first": trace_row_json(first),
            "final": trace_row_json(last),
            "norm_var_growth": json_f64(last.norm_var / first.norm_var),
        })
    } else {
        let params_path = a.params.as_ref().expect("clap enforces --params or --trace");
        let data = a
            .data
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("diagnose --params needs --data".into()))?;
        let g = DataArgs { data: data.clone(), raw_features: a.raw_features }.load()?;
        let z = embed(&g, &load_checkpoint(params_path)?)?;
        let ns = norm_stats(&z)?;
        println!("norm mean {:.6}  var {:.6e}", ns.mean, ns.var);
        let mut v = json!({
            "source": "params",
            "params": params_path,
            "norm_mean": json_f64(ns.mean),
            "norm_var": json_f64(ns.var),
        });
        if let Some(labels) = g.labels() {
            let mode = if a.class_uniform_pairs { PairSampling::ClassUniform } else { PairSampling::PairUniform };
            let m = mu_ratio(&z, labels, &mut Prng::with_stream(a.seed, 2), a.pairs, mode)?;
            let s = s_f_estimate(&z, labels, &mut Prng::with_stream(a.seed, 3), a.pairs, mode)?;
            println!("mu+ {:.6}  mu- {:.6}  ratio {:.6}  s(f) {:.6}", m.mu_plus, m.mu_minus, m.ratio, s);
            let obj = v.as_object_mut().expect("object literal");
            obj.insert("mu_plus".into(), json_f64(m.mu_plus));
            obj.insert("mu_minus".into(), json_f64(m.mu_minus));
            obj.insert("ratio".into(), json_f64(m.ratio));
            obj.insert("s_f".into(), json_f64(s));
            obj.insert("pairs".into(), json!(a.pairs));
            obj.insert("class_uniform_pairs".into(), json!(a.class_uniform_pairs));
        }
        v
    };
    write_json(&a.out.join("diagnostics.json"), &out)?;
    Ok(0)
}

pub fn cmd_verify_lemma4(a: &Lemma4Args) -> Result<i32> {
    let distribution = match a.dist {
        DistArg::Uniform => NormDistribution::Uniform { low: a.low, high: a.high },
        DistArg::Exp => NormDistribution::ShiftedExponential { low: a.low, rate: a.rate },
    };
    let cfg = Lemma4Config { tau: a.tau, c_sq: a.c2, n_samples: a.n, distribution, seed: a.seed };
    if let Some(out) = &a.out {
        RunManifest::new("verify-lemma4", serde_json::to_value(cfg)?, None, out, Some(a.seed)).write()?;
    }
    let r = verify_lemma4(&cfg)?;
    println!("var_with: {:.9e}", r.var_with);
    println!("var_without: {:.9e}", r.var_without);
    println!("holds: {}", r.holds);
    if r.equal {
        println!("equal: true");
    }
    if let Some(out) = &a.out {
        write_json(&out.join("diagnostics.json"), &json!({ "lemma4": { "config": cfg, "result": r } }))?;
    }
    Ok(0)
}

pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<i32> {
    let g = toy_graph();
    let cfg = TrainConfig {
        strategy: a.strategy.into(),
        epochs: 1,
        hidden_dim: a.hidden,
        lambda_reg: a.lambda_reg,
        reg_enabled: !a.no_reg,
        score_mode: match a.score {
            ScoreArg::Dot => ScoreKind::Dot,
            ScoreArg::Cosine => ScoreKind::Cosine,
        },
        cosine_temp: a.cosine_temp,
        lc_rounds: 1,
        seed: a.seed,
        ..Default::default()
    };
    cfg.validate()?;
    let r = gradcheck(&g, &cfg, a.eps)?;
    println!("max relative error: {:.3e}", r.max_rel_error);
    if let Some(t) = &r.worst_tensor {
        println!("worst tensor: {t}");
    }
    println!("checked {} coordinates, skipped {} at kinks (relative floor {GRADCHECK_REL_FLOOR:e})", r.checked, r.skipped_kinks);
    if r.kink_at_base {
        eprintln!("warning: a pre-activation is exactly zero at the base point");
    }
    Ok(if r.max_rel_error > a.tol { EXIT_GRADCHECK_FAILED } else { 0 })
}
