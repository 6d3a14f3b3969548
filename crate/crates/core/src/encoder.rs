//! One-layer GCN encoder `f(X) = PReLU(Â X W)`, the optional stacked layer
//! `g(Z) = PReLU(Â Z W_s)`, and their reverse-mode gradients.

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_nt, matmul_tn, spmm, CsrMatrix, DenseMatrix};
use crate::rng::Prng;

pub const DEFAULT_PRELU_SLOPE: f64 = 0.25;

/// Every trainable tensor. The same layout doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_enc: DenseMatrix,
    pub slope: f64,
    pub w_stack: Option<DenseMatrix>,
    pub slope_stack: f64,
    pub w_reg: DenseMatrix,
}

pub type Gradients = ModelParams;

impl ModelParams {
    pub fn feature_dim(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_enc.cols()
    }

    pub fn has_stack(&self) -> bool {
        self.w_stack.is_some()
    }

    /// Same shapes, every entry zero.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            w_enc: DenseMatrix::zeros(self.w_enc.rows(), self.w_enc.cols()),
            slope: 0.0,
            w_stack: self.w_stack.as_ref().map(|w| DenseMatrix::zeros(w.rows(), w.cols())),
            slope_stack: 0.0,
            w_reg: DenseMatrix::zeros(self.w_reg.rows(), self.w_reg.cols()),
        }
    }

    /// Named flat views in checkpoint order. The stacked slope is only
    /// listed when the stacked layer exists.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> =
            vec![("w_enc", self.w_enc.data()), ("slope", std::slice::from_ref(&self.slope))];
        if let Some(w) = &self.w_stack {
            out.push(("w_stack", w.data()));
            out.push(("slope_stack", std::slice::from_ref(&self.slope_stack)));
        }
        out.push(("w_reg", self.w_reg.data()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> =
            vec![("w_enc", self.w_enc.data_mut()), ("slope", std::slice::from_mut(&mut self.slope))];
        if let Some(w) = &mut self.w_stack {
            out.push(("w_stack", w.data_mut()));
            out.push(("slope_stack", std::slice::from_mut(&mut self.slope_stack)));
        }
        out.push(("w_reg", self.w_reg.data_mut()));
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += c * other`; shapes must agree.
    pub fn add_scaled(&mut self, other: &ModelParams, c: f64) -> Result<()> {
        if self.w_stack.is_some() != other.w_stack.is_some() {
            return Err(Error::shape("ModelParams::add_scaled", "stacked layer present on one side only"));
        }
        for ((name, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            if dst.len() != src.len() {
                return Err(Error::shape("ModelParams::add_scaled", format!("{name}: {} vs {}", dst.len(), src.len())));
            }
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
        Ok(())
    }
}

fn glorot(rng: &mut Prng, fan_in: usize, fan_out: usize) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.uniform(-limit, limit))
}

/// Glorot-uniform weights, slopes at 0.25.
pub fn init_params(rng: &mut Prng, f_dim: usize, h_dim: usize, with_stack: bool) -> Result<ModelParams> {
    if f_dim == 0 || h_dim == 0 {
        return Err(Error::InvalidArgument(format!("dimensions must be >= 1 (F={f_dim}, H={h_dim})")));
    }
    let w_enc = glorot(rng, f_dim, h_dim);
    let w_stack = with_stack.then(|| glorot(rng, h_dim, h_dim));
    let w_reg = glorot(rng, h_dim, h_dim);
    Ok(ModelParams { w_enc, slope: DEFAULT_PRELU_SLOPE, w_stack, slope_stack: DEFAULT_PRELU_SLOPE, w_reg })
}

#[inline]
pub fn prelu(t: f64, slope: f64) -> f64 {
    if t >= 0.0 {
        t
    } else {
        slope * t
    }
}

/// What a layer's backward pass needs from its forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Propagated input `Â X` (or `Â Z` for the stacked layer).
    pub propagated: DenseMatrix,
    /// Pre-activations `Â X W`.
    pub pre: DenseMatrix,
}

/// Gradients of one layer.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub d_weight: DenseMatrix,
    pub d_slope: f64,
}

fn layer_forward(propagated: DenseMatrix, w: &DenseMatrix, slope: f64) -> Result<(DenseMatrix, ForwardCache)> {
    let pre = matmul(&propagated, w)?;
    let mut out = pre.clone();
    for v in out.data_mut() {
        *v = prelu(*v, slope);
    }
    Ok((out, ForwardCache { propagated, pre }))
}

/// Returns the weight/slope gradients and `d pre`.
fn layer_backward(cache: &ForwardCache, d_out: &DenseMatrix, slope: f64) -> Result<(LayerGrads, DenseMatrix)> {
    if d_out.shape() != cache.pre.shape() {
        return Err(Error::shape(
            "encoder backward",
            format!("upstream {:?} vs output {:?}", d_out.shape(), cache.pre.shape()),
        ));
    }
    let mut d_pre = d_out.clone();
    let mut d_slope = 0.0;
    for (dp, &t) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
        if t < 0.0 {
            d_slope += *dp * t;
            *dp *= slope;
        }
    }
    let d_weight = matmul_tn(&cache.propagated, &d_pre)?;
    Ok((LayerGrads { d_weight, d_slope }, d_pre))
}

/// `Â X`, reusable across epochs for fixed features.
pub fn propagate(a_hat: &CsrMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    spmm(a_hat, x)
}

pub fn encode(a_hat: &CsrMatrix, x: &DenseMatrix, p: &ModelParams) -> Result<(DenseMatrix, ForwardCache)> {
    encode_propagated(propagate(a_hat, x)?, p)
}

/// Encoder forward from an already propagated input `Â X`.
pub fn encode_propagated(ax: DenseMatrix, p: &ModelParams) -> Result<(DenseMatrix, ForwardCache)> {
    if ax.cols() != p.w_enc.rows() {
        return Err(Error::shape("encode", format!("features have {} columns, W has {} rows", ax.cols(), p.w_enc.rows())));
    }
    layer_forward(ax, &p.w_enc, p.slope)
}

pub fn encode_stacked(a_hat: &CsrMatrix, z: &DenseMatrix, p: &ModelParams) -> Result<(DenseMatrix, ForwardCache)> {
    let w = p
        .w_stack
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("encode_stacked needs a stacked layer".into()))?;
    if z.cols() != w.rows() {
        return Err(Error::shape("encode_stacked", format!("z has {} columns, W_s has {} rows", z.cols(), w.rows())));
    }
    layer_forward(spmm(a_hat, z)?, w, p.slope_stack)
}

/// Gradients of `w_enc` and `slope` given `dL/dz`.
pub fn backward(cache: &ForwardCache, dz: &DenseMatrix, p: &ModelParams) -> Result<LayerGrads> {
    Ok(layer_backward(cache, dz, p.slope)?.0)
}

/// Gradients of the stacked layer plus the gradient routed back into `z`.
pub fn backward_stacked(
    cache: &ForwardCache,
    a_hat: &CsrMatrix,
    dg: &DenseMatrix,
    p: &ModelParams,
) -> Result<(LayerGrads, DenseMatrix)> {
    let w = p
        .w_stack
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("backward_stacked needs a stacked layer".into()))?;
    let (grads, d_pre) = layer_backward(cache, dg, p.slope_stack)?;
    // Â is symmetric, so Âᵀ(dpre Wᵀ) = Â(dpre Wᵀ).
    let dz = spmm(a_hat, &matmul_nt(&d_pre, w)?)?;
    Ok((grads, dz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalized_adjacency, Graph};

    fn one_node(x: f64, w: f64) -> (CsrMatrix, DenseMatrix, ModelParams) {
        let p = ModelParams {
            w_enc: DenseMatrix::from_vec(1, 1, vec![w]).unwrap(),
            slope: 0.25,
            w_stack: None,
            slope_stack: 0.25,
            w_reg: DenseMatrix::zeros(1, 1),
        };
        (CsrMatrix::identity(1), DenseMatrix::from_vec(1, 1, vec![x]).unwrap(), p)
    }

    #[test]
    fn init_bounds_and_determinism() {
        let p = init_params(&mut Prng::new(1), 4, 4, true).unwrap();
        let bound = (6.0f64 / 8.0).sqrt();
        assert!(p.w_enc.data().iter().all(|w| w.abs() <= bound));
        assert_eq!(p.slope, 0.25);
        assert_eq!(p, init_params(&mut Prng::new(1), 4, 4, true).unwrap());
        assert!(init_params(&mut Prng::new(1), 0, 4, false).is_err());
    }

    #[test]
    fn init_mean_near_zero() {
        let p = init_params(&mut Prng::new(5), 100, 100, false).unwrap();
        let mean = p.w_enc.data().iter().sum::<f64>() / 1e4;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn single_node_branches() {
        let (a, x, p) = one_node(1.0, 2.0);
        assert_eq!(encode(&a, &x, &p).unwrap().0.data(), &[2.0]);
        let (a, x, p) = one_node(-1.0, 2.0);
        assert_eq!(encode(&a, &x, &p).unwrap().0.data(), &[-0.5]);
    }

    #[test]
    fn single_node_backward_by_hand() {
        let (a, x, p) = one_node(3.0, 2.0);
        let (_, cache) = encode(&a, &x, &p).unwrap();
        let dz = DenseMatrix::from_vec(1, 1, vec![0.7]).unwrap();
        let g = backward(&cache, &dz, &p).unwrap();
        assert!((g.d_weight[(0, 0)] - 3.0 * 0.7).abs() < 1e-15);
        assert_eq!(g.d_slope, 0.0);

        let zero = backward(&cache, &DenseMatrix::zeros(1, 1), &p).unwrap();
        assert_eq!(zero.d_weight.data(), &[0.0]);
    }

    #[test]
    fn path_graph_matches_dense_oracle() {
        let mut rng = Prng::new(3);
        let x = DenseMatrix::from_fn(2, 3, |_, _| rng.uniform(-1.0, 1.0));
        let g = Graph::from_edges(2, &[(0, 1)], x.clone()).unwrap();
        let a = normalized_adjacency(&g);
        let p = init_params(&mut rng, 3, 4, false).unwrap();
        let (z, _) = encode(&a, &x, &p).unwrap();
        for i in 0..2 {
            for h in 0..4 {
                let mut pre = 0.0;
                for j in 0..2 {
                    for f in 0..3 {
                        pre += 0.5 * x[(j, f)] * p.w_enc[(f, h)];
                    }
                }
                assert!((z[(i, h)] - prelu(pre, 0.25)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stacked_identity_and_zero() {
        let mut p = init_params(&mut Prng::new(0), 3, 3, true).unwrap();
        p.w_stack = Some(DenseMatrix::identity(3));
        p.slope_stack = 1.0;
        let z = DenseMatrix::from_fn(4, 3, |i, j| i as f64 - j as f64);
        let a = CsrMatrix::identity(4);
        assert_eq!(encode_stacked(&a, &z, &p).unwrap().0, z);
        let zero = DenseMatrix::zeros(4, 3);
        assert_eq!(encode_stacked(&a, &zero, &p).unwrap().0, zero);
        p.w_stack = None;
        assert!(encode_stacked(&a, &z, &p).is_err());
    }

    #[test]
    fn tensors_order_and_count() {
        let p = init_params(&mut Prng::new(0), 3, 2, true).unwrap();
        let names: Vec<_> = p.tensors().iter().map(|(n, _)| *n).collect();
        assert_eq!(names, ["w_enc", "slope", "w_stack", "slope_stack", "w_reg"]);
        assert_eq!(p.num_scalars(), 6 + 1 + 4 + 1 + 4);
    }
}
