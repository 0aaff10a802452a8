//! Message-passing encoders (GCN, GraphSAGE-mean, GIN) and the linear
//! classifier head, with hand-written backward passes.
//!
//! Aggregation runs over the rows of an [`Adjacency`], which may be directed:
//! row `i` gathers from `neighbors(i)`. For the augmented graphs built by
//! counterfactual mixup the injected rows point into the base graph while no
//! base row points back, so base-node embeddings are unaffected by them.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::graph::Adjacency;
use crate::nn::{
    dropout, dropout_backward, relu, relu_backward, AdamState, DropoutMask, Linear, LinearGrad,
    Matrix,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    Gcn,
    Sage,
    Gin,
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Self::Gcn),
            "sage" => Ok(Self::Sage),
            "gin" => Ok(Self::Gin),
            other => Err(Error::Config(format!("unknown encoder `{other}`"))),
        }
    }
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gcn => "gcn",
            Self::Sage => "sage",
            Self::Gin => "gin",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: EncoderKind::Gcn,
            layers: 2,
            hidden_dim: 16,
            embed_dim: 16,
            dropout: 0.5,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden_dim == 0 || self.embed_dim == 0 {
            return Err(Error::Config(
                "encoder layers and dimensions must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0,1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// How a row combines its neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// `Σ_{j ∈ N(i) ∪ {i}} h_j / sqrt((d_i + 1)(d_j + 1))`
    GcnNormalized,
    /// `mean_{j ∈ N(i)} h_j`, zero for isolated rows.
    Mean,
    /// `Σ_{j ∈ N(i)} h_j`
    Sum,
}

/// Sparse-row gather of `h` under `agg`.
pub fn aggregate(adj: &Adjacency, h: &Matrix, agg: Aggregation) -> Result<Matrix> {
    if adj.num_rows() != h.rows() {
        return Err(shape(
            "aggregate",
            format!(
                "{} adjacency rows vs {} feature rows",
                adj.num_rows(),
                h.rows()
            ),
        ));
    }
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..adj.num_rows() {
        let nbrs = adj.neighbors(i);
        let row = out.row_mut(i);
        match agg {
            Aggregation::GcnNormalized => {
                let di = (nbrs.len() + 1) as f64;
                for (o, x) in row.iter_mut().zip(h.row(i)) {
                    *o = x / di;
                }
                for &j in nbrs {
                    let c = 1.0 / (di * (adj.degree(j) + 1) as f64).sqrt();
                    for (o, x) in row.iter_mut().zip(h.row(j)) {
                        *o += c * x;
                    }
                }
            }
            Aggregation::Mean | Aggregation::Sum => {
                if nbrs.is_empty() {
                    continue;
                }
                let c = if agg == Aggregation::Mean {
                    1.0 / nbrs.len() as f64
                } else {
                    1.0
                };
                for &j in nbrs {
                    for (o, x) in row.iter_mut().zip(h.row(j)) {
                        *o += c * x;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Transpose of [`aggregate`]: scatters row gradients back to their sources.
pub fn aggregate_backward(adj: &Adjacency, grad: &Matrix, agg: Aggregation) -> Result<Matrix> {
    if adj.num_rows() != grad.rows() {
        return Err(shape(
            "aggregate_backward",
            format!(
                "{} adjacency rows vs {} grad rows",
                adj.num_rows(),
                grad.rows()
            ),
        ));
    }
    let mut out = Matrix::zeros(grad.rows(), grad.cols());
    for i in 0..adj.num_rows() {
        let nbrs = adj.neighbors(i);
        let g = grad.row(i);
        match agg {
            Aggregation::GcnNormalized => {
                let di = (nbrs.len() + 1) as f64;
                axpy(out.row_mut(i), 1.0 / di, g);
                for &j in nbrs {
                    let c = 1.0 / (di * (adj.degree(j) + 1) as f64).sqrt();
                    axpy(out.row_mut(j), c, g);
                }
            }
            Aggregation::Mean | Aggregation::Sum => {
                if nbrs.is_empty() {
                    continue;
                }
                let c = if agg == Aggregation::Mean {
                    1.0 / nbrs.len() as f64
                } else {
                    1.0
                };
                for &j in nbrs {
                    axpy(out.row_mut(j), c, g);
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// One message-passing layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Conv {
    /// `Â_norm · H · W + b`
    Gcn(Linear),
    /// `[H | mean_N(H)] · W + b`
    Sage(Linear),
    /// `MLP(H + Σ_N H)` with a two-layer perceptron.
    Gin(Linear, Linear),
}

impl Conv {
    fn new<R: Rng + ?Sized>(kind: EncoderKind, fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        match kind {
            EncoderKind::Gcn => Conv::Gcn(Linear::new(fan_in, fan_out, rng)),
            EncoderKind::Sage => Conv::Sage(Linear::new(2 * fan_in, fan_out, rng)),
            EncoderKind::Gin => Conv::Gin(
                Linear::new(fan_in, fan_out, rng),
                Linear::new(fan_out, fan_out, rng),
            ),
        }
    }

    fn linears(&self) -> Vec<&Linear> {
        match self {
            Conv::Gcn(l) | Conv::Sage(l) => vec![l],
            Conv::Gin(a, b) => vec![a, b],
        }
    }

    fn linears_mut(&mut self) -> Vec<&mut Linear> {
        match self {
            Conv::Gcn(l) | Conv::Sage(l) => vec![l],
            Conv::Gin(a, b) => vec![a, b],
        }
    }

    fn forward(&self, adj: &Adjacency, h: &Matrix) -> Result<(Matrix, ConvCache)> {
        match self {
            Conv::Gcn(lin) => {
                let p = aggregate(adj, h, Aggregation::GcnNormalized)?;
                let y = lin.forward(&p)?;
                Ok((y, ConvCache::Gcn { agg: p }))
            }
            Conv::Sage(lin) => {
                let m = aggregate(adj, h, Aggregation::Mean)?;
                let cat = h.hcat(&m)?;
                let y = lin.forward(&cat)?;
                Ok((y, ConvCache::Sage { cat }))
            }
            Conv::Gin(l1, l2) => {
                let mut s = aggregate(adj, h, Aggregation::Sum)?;
                s.add_assign(h)?;
                let pre = l1.forward(&s)?;
                let act = relu(&pre);
                let y = l2.forward(&act)?;
                Ok((y, ConvCache::Gin { sum: s, pre, act }))
            }
        }
    }

    fn backward(
        &self,
        adj: &Adjacency,
        cache: &ConvCache,
        grad_out: &Matrix,
    ) -> Result<(Matrix, Vec<LinearGrad>)> {
        match (self, cache) {
            (Conv::Gcn(lin), ConvCache::Gcn { agg }) => {
                let (gp, gl) = lin.backward(agg, grad_out)?;
                let gh = aggregate_backward(adj, &gp, Aggregation::GcnNormalized)?;
                Ok((gh, vec![gl]))
            }
            (Conv::Sage(lin), ConvCache::Sage { cat }) => {
                let (gcat, gl) = lin.backward(cat, grad_out)?;
                let (mut gh, gm) = gcat.split_cols(cat.cols() / 2);
                gh.add_assign(&aggregate_backward(adj, &gm, Aggregation::Mean)?)?;
                Ok((gh, vec![gl]))
            }
            (Conv::Gin(l1, l2), ConvCache::Gin { sum, pre, act }) => {
                let (gact, g2) = l2.backward(act, grad_out)?;
                let gpre = relu_backward(pre, &gact)?;
                let (gs, g1) = l1.backward(sum, &gpre)?;
                let mut gh = aggregate_backward(adj, &gs, Aggregation::Sum)?;
                gh.add_assign(&gs)?;
                Ok((gh, vec![g1, g2]))
            }
            _ => Err(Error::Contract("conv cache does not match layer".into())),
        }
    }
}

#[derive(Clone, Debug)]
enum ConvCache {
    Gcn {
        agg: Matrix,
    },
    Sage {
        cat: Matrix,
    },
    Gin {
        sum: Matrix,
        pre: Matrix,
        act: Matrix,
    },
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Matrix,
    conv: ConvCache,
    pre_activation: Matrix,
    mask: DropoutMask,
}

/// Intermediate values kept by [`Model::forward`] for [`Model::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    embeddings: Matrix,
}

impl ForwardCache {
    /// Encoder output `Z` (after dropout in training mode).
    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }
}

/// Whether dropout is active.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Encoder `g` followed by the linear head `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: EncoderConfig,
    pub convs: Vec<Conv>,
    pub head: Linear,
}

impl Model {
    /// Glorot-initialized weights and zero biases.
    pub fn new<R: Rng + ?Sized>(
        config: EncoderConfig,
        in_dim: usize,
        num_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let mut convs = Vec::with_capacity(config.layers);
        let mut fan_in = in_dim;
        for l in 0..config.layers {
            let fan_out = if l + 1 == config.layers {
                config.embed_dim
            } else {
                config.hidden_dim
            };
            convs.push(Conv::new(config.kind, fan_in, fan_out, rng));
            fan_in = fan_out;
        }
        let head = Linear::new(config.embed_dim, num_classes, rng);
        Ok(Self {
            config,
            convs,
            head,
        })
    }

    pub fn in_dim(&self) -> usize {
        match &self.convs[0] {
            Conv::Gcn(l) | Conv::Gin(l, _) => l.in_dim(),
            Conv::Sage(l) => l.in_dim() / 2,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.head.out_dim()
    }

    /// Parameters in a fixed order: conv linears (weight, bias), then the head.
    pub fn params(&self) -> Vec<&Matrix> {
        self.convs
            .iter()
            .flat_map(Conv::linears)
            .chain(std::iter::once(&self.head))
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let head = &mut self.head;
        self.convs
            .iter_mut()
            .flat_map(Conv::linears_mut)
            .chain(std::iter::once(head))
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.params().iter().map(|p| p.shape()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.data().len()).sum()
    }

    /// Runs the encoder and returns `Z` with the cache for backward.
    pub fn encode(&self, adj: &Adjacency, x: &Matrix, mut mode: Mode<'_>) -> Result<ForwardCache> {
        if x.cols() != self.in_dim() {
            return Err(shape(
                "encode",
                format!(
                    "{} feature columns, model expects {}",
                    x.cols(),
                    self.in_dim()
                ),
            ));
        }
        let mut h = x.clone();
        let mut layers = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let (pre, cache) = conv.forward(adj, &h)?;
            let act = relu(&pre);
            let (out, mask) = match &mut mode {
                Mode::Train(rng) if self.config.dropout > 0.0 => {
                    dropout(&act, self.config.dropout, &mut **rng)?
                }
                _ => {
                    let len = act.data().len();
                    (act, DropoutMask::identity(len))
                }
            };
            layers.push(LayerCache {
                input: h,
                conv: cache,
                pre_activation: pre,
                mask,
            });
            h = out;
        }
        h.ensure_finite("encode")?;
        Ok(ForwardCache {
            layers,
            embeddings: h,
        })
    }

    /// Head logits `Z · W + b`.
    pub fn classify(&self, embeddings: &Matrix) -> Result<Matrix> {
        let logits = self.head.forward(embeddings)?;
        logits.ensure_finite("classify")?;
        Ok(logits)
    }

    pub fn forward(
        &self,
        adj: &Adjacency,
        x: &Matrix,
        mode: Mode<'_>,
    ) -> Result<(Matrix, ForwardCache)> {
        let cache = self.encode(adj, x, mode)?;
        let logits = self.classify(&cache.embeddings)?;
        Ok((logits, cache))
    }

    /// Parameter gradients (in [`Model::params`] order) given `dL/dlogits`.
    pub fn backward(
        &self,
        adj: &Adjacency,
        cache: &ForwardCache,
        grad_logits: &Matrix,
    ) -> Result<Vec<Matrix>> {
        let (mut g, head_grad) = self.head.backward(&cache.embeddings, grad_logits)?;
        let mut conv_grads: Vec<Vec<LinearGrad>> = Vec::with_capacity(self.convs.len());
        for (conv, lc) in self.convs.iter().zip(&cache.layers).rev() {
            let g_act = dropout_backward(&g, &lc.mask)?;
            let g_pre = relu_backward(&lc.pre_activation, &g_act)?;
            let (g_in, lg) = conv.backward(adj, &lc.conv, &g_pre)?;
            debug_assert_eq!(g_in.shape(), lc.input.shape());
            conv_grads.push(lg);
            g = g_in;
        }
        conv_grads.reverse();
        let grads: Vec<Matrix> = conv_grads
            .into_iter()
            .flatten()
            .chain(std::iter::once(head_grad))
            .flat_map(|lg| [lg.weight, lg.bias])
            .collect();
        if grads.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("backward"));
        }
        Ok(grads)
    }
}

/// Model parameters together with their optimizer moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub model: Model,
    pub optimizer: AdamState,
}

impl ModelState {
    pub fn new(model: Model) -> Self {
        let optimizer = AdamState::new(model.param_shapes());
        Self { model, optimizer }
    }
}
