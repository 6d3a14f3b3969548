//! NCE contrastive loss and the random-direction contrastive regulariser,
//! each returning its value together with exact gradients.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, DenseMatrix};

/// Numerically stable `ln(1 + e^t)`.
#[inline]
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(t) = −softplus(−t)`.
#[inline]
pub fn log_sigmoid(t: f64) -> f64 {
    -softplus(-t)
}

/// How a pair of representations is scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreMode {
    Dot,
    /// `uᵀv / (‖u‖‖v‖ T)`.
    Cosine { temperature: f64 },
}

/// Which representation matrix the seed indices address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    FReps,
    GReps,
}

/// Index triples `(seed, positive, negative)`. Positives and negatives
/// always address the f-level representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastTuples {
    pub seed_idx: Vec<usize>,
    pub pos_idx: Vec<usize>,
    pub neg_idx: Vec<usize>,
    pub seed_source: SeedSource,
}

impl ContrastTuples {
    pub fn len(&self) -> usize {
        self.seed_idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seed_idx.is_empty()
    }

    /// Checks equal lengths and index ranges.
    pub fn validate(&self, n_f: usize, n_seed_rows: usize) -> Result<()> {
        let m = self.seed_idx.len();
        if m == 0 || self.pos_idx.len() != m || self.neg_idx.len() != m {
            return Err(Error::InvalidArgument(format!(
                "tuple lists must be non-empty and equal length ({}, {}, {})",
                m,
                self.pos_idx.len(),
                self.neg_idx.len()
            )));
        }
        let bad = self.seed_idx.iter().any(|&i| i >= n_seed_rows)
            || self.pos_idx.iter().chain(&self.neg_idx).any(|&i| i >= n_f);
        if bad {
            return Err(Error::InvalidArgument("tuple index out of range".into()));
        }
        Ok(())
    }
}

/// Loss value plus gradient buffers keyed by input. Absent buffers are zero.
#[derive(Debug, Clone, Default)]
pub struct LossOutput {
    pub value: f64,
    pub d_z: Option<DenseMatrix>,
    pub d_g: Option<DenseMatrix>,
    pub d_z_tilde: Option<DenseMatrix>,
    pub d_w_reg: Option<DenseMatrix>,
}

/// Row-level NCE output: one gradient per input row set.
#[derive(Debug, Clone)]
pub struct NceRows {
    pub value: f64,
    pub d_seeds: DenseMatrix,
    pub d_pos: DenseMatrix,
    pub d_neg: DenseMatrix,
}

/// Score and its partial derivatives with respect to both arguments.
fn score_with_grad(u: &[f64], v: &[f64], mode: ScoreMode) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    match mode {
        ScoreMode::Dot => Ok((dot(u, v), v.to_vec(), u.to_vec())),
        ScoreMode::Cosine { temperature } => {
            let (nu, nv) = (norm(u), norm(v));
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::InvalidArgument("cosine score of a zero-norm representation".into()));
            }
            let uv = dot(u, v);
            let s = uv / (nu * nv * temperature);
            let du = u
                .iter()
                .zip(v)
                .map(|(&ui, &vi)| (vi / (nu * nv) - uv * ui / (nu * nu * nu * nv)) / temperature)
                .collect();
            let dv = u
                .iter()
                .zip(v)
                .map(|(&ui, &vi)| (ui / (nu * nv) - uv * vi / (nv * nv * nv * nu)) / temperature)
                .collect();
            Ok((s, du, dv))
        }
    }
}

/// `−(1/M) Σ [ln σ(s⁺) + ln σ(−s⁻)]` over row-aligned seeds, positives and
/// negatives.
pub fn nce_loss(seeds: &DenseMatrix, pos: &DenseMatrix, neg: &DenseMatrix, mode: ScoreMode) -> Result<NceRows> {
    if seeds.shape() != pos.shape() || seeds.shape() != neg.shape() || seeds.rows() == 0 {
        return Err(Error::shape(
            "nce_loss",
            format!("seeds {:?}, pos {:?}, neg {:?}", seeds.shape(), pos.shape(), neg.shape()),
        ));
    }
    if let ScoreMode::Cosine { temperature } = mode {
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(Error::InvalidArgument(format!("temperature must be > 0, got {temperature}")));
        }
    }
    let (m, h) = seeds.shape();
    let inv_m = 1.0 / m as f64;
    let mut value = 0.0;
    let mut d_seeds = DenseMatrix::zeros(m, h);
    let mut d_pos = DenseMatrix::zeros(m, h);
    let mut d_neg = DenseMatrix::zeros(m, h);
    for i in 0..m {
        let (sp, dsp_u, dsp_v) = score_with_grad(seeds.row(i), pos.row(i), mode)?;
        let (sn, dsn_u, dsn_v) = score_with_grad(seeds.row(i), neg.row(i), mode)?;
        value += softplus(-sp) + softplus(sn);
        let cp = -sigmoid(-sp) * inv_m;
        let cn = sigmoid(sn) * inv_m;
        let ds = d_seeds.row_mut(i);
        for k in 0..h {
            ds[k] = cp * dsp_u[k] + cn * dsn_u[k];
        }
        for (d, g) in d_pos.row_mut(i).iter_mut().zip(&dsp_v) {
            *d = cp * g;
        }
        for (d, g) in d_neg.row_mut(i).iter_mut().zip(&dsn_v) {
            *d = cn * g;
        }
    }
    Ok(NceRows { value: value * inv_m, d_seeds, d_pos, d_neg })
}

fn scatter_add(dst: &mut DenseMatrix, idx: &[usize], rows: &DenseMatrix) {
    for (r, &i) in idx.iter().enumerate() {
        for (d, s) in dst.row_mut(i).iter_mut().zip(rows.row(r)) {
            *d += s;
        }
    }
}

/// NCE over index tuples. `g_reps` is required when seeds address it.
/// Rows referenced by several tuples receive the sum of their contributions.
pub fn nce_tuples(
    z: &DenseMatrix,
    g_reps: Option<&DenseMatrix>,
    tuples: &ContrastTuples,
    mode: ScoreMode,
) -> Result<LossOutput> {
    let seed_mat = match tuples.seed_source {
        SeedSource::FReps => z,
        SeedSource::GReps => {
            g_reps.ok_or_else(|| Error::InvalidArgument("tuples address g-level seeds but none were given".into()))?
        }
    };
    if seed_mat.cols() != z.cols() {
        return Err(Error::shape("nce_tuples", "seed and representation widths differ"));
    }
    tuples.validate(z.rows(), seed_mat.rows())?;
    let rows = nce_loss(
        &seed_mat.select_rows(&tuples.seed_idx),
        &z.select_rows(&tuples.pos_idx),
        &z.select_rows(&tuples.neg_idx),
        mode,
    )?;
    let mut d_z = DenseMatrix::zeros(z.rows(), z.cols());
    scatter_add(&mut d_z, &tuples.pos_idx, &rows.d_pos);
    scatter_add(&mut d_z, &tuples.neg_idx, &rows.d_neg);
    let mut out = LossOutput { value: rows.value, ..Default::default() };
    match tuples.seed_source {
        SeedSource::FReps => {
            scatter_add(&mut d_z, &tuples.seed_idx, &rows.d_seeds);
        }
        SeedSource::GReps => {
            let mut d_g = DenseMatrix::zeros(seed_mat.rows(), seed_mat.cols());
            scatter_add(&mut d_g, &tuples.seed_idx, &rows.d_seeds);
            out.d_g = Some(d_g);
        }
    }
    out.d_z = Some(d_z);
    Ok(out)
}

/// `−(1/N) Σₓ [ln σ(zₓᵀ W r) + ln σ(−z̃ₓᵀ W r)]`.
pub fn contrast_reg_loss(z: &DenseMatrix, z_tilde: &DenseMatrix, w_reg: &DenseMatrix, r: &[f64]) -> Result<LossOutput> {
    let (n, h) = z.shape();
    if z_tilde.shape() != (n, h) || w_reg.shape() != (h, h) || r.len() != h || n == 0 {
        return Err(Error::shape(
            "contrast_reg_loss",
            format!("z {:?}, z~ {:?}, W {:?}, r {}", z.shape(), z_tilde.shape(), w_reg.shape(), r.len()),
        ));
    }
    let v = w_reg.mat_vec(r)?;
    let inv_n = 1.0 / n as f64;
    let mut value = 0.0;
    let mut d_z = DenseMatrix::zeros(n, h);
    let mut d_zt = DenseMatrix::zeros(n, h);
    let mut d_v = vec![0.0; h];
    for x in 0..n {
        let a = dot(z.row(x), &v);
        let b = dot(z_tilde.row(x), &v);
        value += softplus(-a) + softplus(b);
        let ca = -sigmoid(-a) * inv_n;
        let cb = sigmoid(b) * inv_n;
        for k in 0..h {
            d_z[(x, k)] = ca * v[k];
            d_zt[(x, k)] = cb * v[k];
            d_v[k] += ca * z[(x, k)] + cb * z_tilde[(x, k)];
        }
    }
    let d_w = DenseMatrix::from_fn(h, h, |i, j| d_v[i] * r[j]);
    Ok(LossOutput { value: value * inv_n, d_z: Some(d_z), d_g: None, d_z_tilde: Some(d_zt), d_w_reg: Some(d_w) })
}

fn combine(a: Option<DenseMatrix>, b: Option<DenseMatrix>, lambda: f64) -> Result<Option<DenseMatrix>> {
    Ok(match (a, b) {
        (a, None) => a,
        (None, Some(b)) => Some(b.scale(lambda)),
        (Some(mut a), Some(b)) => {
            a.add_scaled(&b, lambda)?;
            Some(a)
        }
    })
}

/// `nce + λ·reg`, values and gradients.
pub fn total_loss(nce: LossOutput, reg: LossOutput, lambda_reg: f64) -> Result<LossOutput> {
    if lambda_reg < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda_reg must be >= 0, got {lambda_reg}")));
    }
    if lambda_reg == 0.0 {
        return Ok(nce);
    }
    Ok(LossOutput {
        value: nce.value + lambda_reg * reg.value,
        d_z: combine(nce.d_z, reg.d_z, lambda_reg)?,
        d_g: combine(nce.d_g, reg.d_g, lambda_reg)?,
        d_z_tilde: combine(nce.d_z_tilde, reg.d_z_tilde, lambda_reg)?,
        d_w_reg: combine(nce.d_w_reg, reg.d_w_reg, lambda_reg)?,
    })
}
